#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>

#include "egd/chair.hpp"
#include "support/oracles.hpp"

namespace egd {
namespace {

const std::set<std::string> kObjects{"dog", "cat", "frisbee", "sofa", "car", "hot dog", "person", "bus"};
const std::map<std::string, std::string> kSynonyms{
    {"puppy", "dog"}, {"kitten", "cat"}, {"couch", "sofa"}, {"man", "person"}, {"sports car", "car"}};

ObjectVocabulary vocab() { return ObjectVocabulary(kObjects, kSynonyms); }

std::map<std::string, std::string> surfaces() {
  std::map<std::string, std::string> s(kSynonyms);
  for (const auto& o : kObjects) {
    s[o] = o;
    s[o + "s"] = o;
  }
  return s;
}

TEST(ExtractObjects, PluralAndHallucination) {
  const auto j = judge_caption("Two dogs chase a frisbee.", {"dog"}, vocab());
  EXPECT_EQ(j.mentioned, (std::set<std::string>{"dog", "frisbee"}));
  EXPECT_EQ(j.hallucinated, std::set<std::string>{"frisbee"});
  const auto s = chair_from_judgments({j});
  EXPECT_DOUBLE_EQ(s.chair_i, 0.5);
  EXPECT_DOUBLE_EQ(s.chair_s, 1.0);
}

TEST(ExtractObjects, EmptyCaptionMentionsNothing) {
  const auto s = chair_from_judgments({judge_caption("", {"dog"}, vocab())});
  EXPECT_EQ(s.mentioned, 0u);
  EXPECT_EQ(s.chair_i, 0.0);
  EXPECT_EQ(s.chair_s, 0.0);
  EXPECT_TRUE(s.no_mentions);
}

TEST(ExtractObjects, LongestPhraseWins) {
  EXPECT_EQ(extract_objects("A man eats a hot dog.", vocab()), (std::set<std::string>{"person", "hot dog"}));
  EXPECT_EQ(extract_objects("Two hot dogs and a dog", vocab()), (std::set<std::string>{"hot dog", "dog"}));
  EXPECT_EQ(extract_objects("A red sports car", vocab()), std::set<std::string>{"car"});
  EXPECT_EQ(extract_objects("Kittens on a Couch", vocab()), (std::set<std::string>{"cat", "sofa"}));
}

TEST(ExtractObjects, AgreesWithExhaustiveMatcher) {
  std::mt19937_64 rng(71);
  const std::vector<std::string> pool{"a",   "the",    "dog",   "dogs",    "hot",    "cat",   "kittens", "sofa",
                                      "on",  "couch",  "sports", "car",    "cars",   "man",   "men",     "bus",
                                      "buses", "frisbee", "red", "person", "people", "puppy", "hotdog",  "and"};
  const auto v = vocab();
  const auto table = surfaces();
  for (int trial = 0; trial < 2000; ++trial) {
    std::string caption;
    const std::size_t n = rng() % 14;
    for (std::size_t i = 0; i < n; ++i) caption += pool[rng() % pool.size()] + (rng() % 5 == 0 ? ". " : " ");
    EXPECT_EQ(extract_objects(caption, v), testing::oracle_extract(caption, table)) << caption;
  }
}

TEST(ObjectVocabulary, RejectsSynonymOfUnknownObject) {
  EXPECT_THROW(ObjectVocabulary({"dog"}, {{"kitten", "cat"}}), InvalidArgument);
  EXPECT_EQ(vocab().canonical("Couch"), "sofa");
  EXPECT_EQ(vocab().canonical("giraffe"), "giraffe");
  EXPECT_EQ(vocab().max_phrase_words(), 2u);
}

TEST(ScoreCorpus, HandCorpus) {
  const std::vector<CaptionCase> corpus{
      {"1", "A dog on the grass.", {"dog"}},
      {"2", "Two cats on a sofa.", {"cat"}},
      {"3", "An empty street.", {"car"}},
  };
  std::vector<CaptionJudgment> judgments;
  const auto s = score_corpus(corpus, vocab(), &judgments);
  EXPECT_EQ(s.mentioned, 3u);
  EXPECT_EQ(s.hallucinated, 1u);
  EXPECT_DOUBLE_EQ(s.chair_i, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.chair_s, 1.0 / 3.0);
  ASSERT_EQ(judgments.size(), 3u);
  EXPECT_EQ(judgments[1].hallucinated, std::set<std::string>{"sofa"});
}

TEST(ScoreCorpus, AllMentionsPresent) {
  const std::vector<CaptionCase> corpus{{"1", "A dog and a cat.", {"dog", "cat", "sofa"}},
                                        {"2", "A bus.", {"bus"}}};
  const auto s = score_corpus(corpus, vocab());
  EXPECT_EQ(s.chair_i, 0.0);
  EXPECT_EQ(s.chair_s, 0.0);
}

TEST(ScoreCorpus, CaptionCountedOnceForSeveralHallucinations) {
  const std::vector<CaptionCase> corpus{{"1", "A dog, a cat, a bus and a car.", {"dog"}}, {"2", "A dog.", {"dog"}}};
  const auto s = score_corpus(corpus, vocab());
  EXPECT_EQ(s.hallucinated, 3u);
  EXPECT_EQ(s.captions_with_hallucination, 1u);
  EXPECT_DOUBLE_EQ(s.chair_s, 0.5);
  EXPECT_DOUBLE_EQ(s.chair_i, 3.0 / 5.0);
}

TEST(ScoreCorpus, EmptyCorpus) { EXPECT_THROW(score_corpus({}, vocab()), InvalidArgument); }

TEST(ScoreCorpus, RandomCorporaMatchOracleAndAreMonotone) {
  std::mt19937_64 rng(72);
  const std::vector<std::string> objects(kObjects.begin(), kObjects.end());
  const std::vector<std::string> filler{"a", "the", "on", "near", "red", "big", "with"};
  const auto v = vocab();
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CaptionCase> corpus;
    const std::size_t n = 1 + rng() % 8;
    for (std::size_t c = 0; c < n; ++c) {
      CaptionCase cc;
      cc.image_id = std::to_string(c);
      for (const auto& o : objects) {
        if (rng() % 3 == 0) cc.ground_truth.insert(o);
      }
      const std::size_t words = rng() % 10;
      for (std::size_t w = 0; w < words; ++w) {
        cc.caption += (rng() % 2 ? objects[rng() % objects.size()] : filler[rng() % filler.size()]) + ". ";
      }
      corpus.push_back(cc);
    }
    const auto s = score_corpus(corpus, v);
    std::vector<std::set<std::string>> mentioned, truth;
    for (const auto& c : corpus) {
      mentioned.push_back(testing::oracle_extract(c.caption, surfaces()));
      truth.push_back(c.ground_truth);
    }
    const auto o = testing::oracle_chair(mentioned, truth);
    EXPECT_EQ(s.mentioned, o.mentioned);
    EXPECT_EQ(s.hallucinated, o.hallucinated);
    EXPECT_DOUBLE_EQ(s.chair_i, o.chair_i);
    EXPECT_DOUBLE_EQ(s.chair_s, o.chair_s);

    // Mentioning one more absent object never lowers either score.
    auto worse = corpus;
    auto& target = worse[rng() % worse.size()];
    std::vector<std::string> absent;
    for (const auto& obj : objects) {
      if (!target.ground_truth.count(obj)) absent.push_back(obj);
    }
    if (absent.empty()) continue;
    target.caption += ". " + absent[rng() % absent.size()] + ".";
    const auto w = score_corpus(worse, v);
    EXPECT_GE(w.chair_i, s.chair_i);
    EXPECT_GE(w.chair_s, s.chair_s);
  }
}

class ChairFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("egd_chair_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return p.string();
  }
  std::filesystem::path dir_;
};

TEST_F(ChairFiles, LoadsVocabularyAnnotationsAndCaptions) {
  const auto v = load_object_vocabulary(
      write("vocab.json", R"({"objects": ["dog", "sofa"], "synonyms": {"couch": "sofa"}})"));
  const auto ann = load_annotations(write("ann.json", R"({"1": ["Dog", "couch"], "2": []})"), v);
  EXPECT_EQ(ann.at("1"), (std::set<std::string>{"dog", "sofa"}));
  const auto corpus = load_caption_corpus(
      write("caps.jsonl", "{\"image_id\": 1, \"caption\": \"A dog on a couch\"}\n{\"image_id\": \"2\", \"caption\": \"A dog\"}\n"),
      ann);
  ASSERT_EQ(corpus.size(), 2u);
  const auto s = score_corpus(corpus, v);
  EXPECT_DOUBLE_EQ(s.chair_i, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.chair_s, 0.5);
}

TEST_F(ChairFiles, ErrorsAreDataErrors) {
  EXPECT_THROW(load_object_vocabulary((dir_ / "missing.json").string()), DataError);
  EXPECT_THROW(load_object_vocabulary(write("bad.json", "{\"objects\": 3}")), DataError);
  const auto v = vocab();
  const std::map<std::string, std::set<std::string>> ann{{"1", {"dog"}}};
  EXPECT_THROW(load_caption_corpus(write("c.jsonl", "{\"image_id\": 9, \"caption\": \"x\"}\n"), ann), DataError);
}

}  // namespace
}  // namespace egd
