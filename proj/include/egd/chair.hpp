#pragma once

// CHAIR caption hallucination scores with list-based object matching.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "egd/errors.hpp"

namespace egd {

class ObjectVocabulary {
 public:
  ObjectVocabulary() = default;

  /// Every canonical object maps to itself and to its "+s" plural. Explicit
  /// synonyms (surface form -> canonical) may be multiword.
  ObjectVocabulary(const std::set<std::string>& objects,
                   const std::map<std::string, std::string>& synonyms = {}) {
    for (const auto& o : objects) objects_.insert(lower(o));
    for (const auto& o : objects_) {
      add(o, o);
      add(o + "s", o);
    }
    for (const auto& [surface, canonical] : synonyms) {
      const std::string c = lower(canonical);
      if (!objects_.count(c)) {
        throw InvalidArgument("synonym '" + surface + "' maps to unknown object '" + canonical + "'");
      }
      add(lower(surface), c);
    }
  }

  const std::set<std::string>& objects() const noexcept { return objects_; }
  std::size_t max_phrase_words() const noexcept { return max_words_; }

  const std::string* lookup(const std::string& surface) const {
    auto it = synonyms_.find(surface);
    return it == synonyms_.end() ? nullptr : &it->second;
  }

  /// Canonical form of an annotation label, or the label itself (lowercased).
  std::string canonical(const std::string& label) const {
    const std::string l = lower(label);
    if (const auto* c = lookup(normalize_phrase(l))) return *c;
    return l;
  }

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }

  static std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isalnum(c)) {
        cur.push_back(static_cast<char>(std::tolower(c)));
      } else if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

 private:
  static std::string normalize_phrase(std::string_view s) {
    std::string out;
    for (const auto& w : words(s)) {
      if (!out.empty()) out += ' ';
      out += w;
    }
    return out;
  }

  void add(const std::string& surface, const std::string& canonical) {
    const std::string key = normalize_phrase(surface);
    if (key.empty()) return;
    synonyms_[key] = canonical;
    max_words_ = std::max(max_words_, static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ') + 1));
  }

  std::set<std::string> objects_;
  std::unordered_map<std::string, std::string> synonyms_;
  std::size_t max_words_ = 1;
};

/// Vocabulary file: {"objects": [...], "synonyms": {"surface form": "object", ...}}.
inline ObjectVocabulary load_object_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    std::set<std::string> objects = j.at("objects").get<std::set<std::string>>();
    std::map<std::string, std::string> synonyms;
    if (j.contains("synonyms")) synonyms = j.at("synonyms").get<std::map<std::string, std::string>>();
    return ObjectVocabulary(objects, synonyms);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("vocabulary '" + path + "': " + e.what());
  }
}

/// Canonical objects mentioned in `caption`. Scans left to right, trying the
/// longest phrase first; a word with no match falls back to dropping one
/// trailing 's'.
inline std::set<std::string> extract_objects(std::string_view caption, const ObjectVocabulary& vocab) {
  const auto w = ObjectVocabulary::words(caption);
  std::set<std::string> found;
  std::size_t i = 0;
  while (i < w.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(vocab.max_phrase_words(), w.size() - i); len >= 1; --len) {
      std::string phrase = w[i];
      for (std::size_t k = 1; k < len; ++k) phrase += ' ' + w[i + k];
      if (const auto* c = vocab.lookup(phrase)) {
        found.insert(*c);
        matched = len;
        break;
      }
    }
    if (matched == 0 && w[i].size() > 1 && w[i].back() == 's') {
      if (const auto* c = vocab.lookup(w[i].substr(0, w[i].size() - 1))) {
        found.insert(*c);
        matched = 1;
      }
    }
    i += std::max<std::size_t>(matched, 1);
  }
  return found;
}

struct CaptionJudgment {
  std::set<std::string> mentioned;
  std::set<std::string> hallucinated;
};

inline CaptionJudgment judge_caption(std::string_view caption, const std::set<std::string>& ground_truth,
                                     const ObjectVocabulary& vocab) {
  CaptionJudgment j;
  j.mentioned = extract_objects(caption, vocab);
  for (const auto& o : j.mentioned) {
    if (!ground_truth.count(o)) j.hallucinated.insert(o);
  }
  return j;
}

struct ChairScores {
  double chair_i = 0.0;
  double chair_s = 0.0;
  std::size_t mentioned = 0;
  std::size_t hallucinated = 0;
  std::size_t captions = 0;
  std::size_t captions_with_hallucination = 0;
  bool no_mentions = false;  // chair_i reported as 0 because nothing was mentioned
};

inline ChairScores chair_from_judgments(const std::vector<CaptionJudgment>& judgments) {
  if (judgments.empty()) throw InvalidArgument("score_corpus: empty corpus");
  ChairScores s;
  for (const auto& j : judgments) {
    s.captions++;
    s.mentioned += j.mentioned.size();
    s.hallucinated += j.hallucinated.size();
    if (!j.hallucinated.empty()) s.captions_with_hallucination++;
  }
  s.no_mentions = s.mentioned == 0;
  s.chair_i = s.no_mentions ? 0.0 : static_cast<double>(s.hallucinated) / static_cast<double>(s.mentioned);
  s.chair_s = static_cast<double>(s.captions_with_hallucination) / static_cast<double>(s.captions);
  return s;
}

struct CaptionCase {
  std::string image_id;
  std::string caption;
  std::set<std::string> ground_truth;  // canonical objects
};

inline ChairScores score_corpus(const std::vector<CaptionCase>& corpus, const ObjectVocabulary& vocab,
                                std::vector<CaptionJudgment>* judgments_out = nullptr) {
  std::vector<CaptionJudgment> judgments;
  judgments.reserve(corpus.size());
  for (const auto& c : corpus) judgments.push_back(judge_caption(c.caption, c.ground_truth, vocab));
  ChairScores s = chair_from_judgments(judgments);
  if (judgments_out) *judgments_out = std::move(judgments);
  return s;
}

/// Annotation file: {"image_id": ["object", ...], ...}; labels are canonicalized.
inline std::map<std::string, std::set<std::string>> load_annotations(const std::string& path,
                                                                     const ObjectVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    std::map<std::string, std::set<std::string>> out;
    for (const auto& [image, labels] : j.items()) {
      auto& set = out[image];
      for (const auto& l : labels) set.insert(vocab.canonical(l.get<std::string>()));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("annotations '" + path + "': " + e.what());
  }
}

/// Caption lines: {"image_id": ..., "caption": ...}. Every image must be annotated.
inline std::vector<CaptionCase> load_caption_corpus(
    const std::string& path, const std::map<std::string, std::set<std::string>>& annotations) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open captions '" + path + "'");
  std::vector<CaptionCase> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& idv = j.at("image_id");
      std::string id = idv.is_string() ? idv.get<std::string>() : idv.dump();
      auto it = annotations.find(id);
      if (it == annotations.end()) throw DataError("image '" + id + "' has no annotation");
      const auto* text = j.contains("caption") ? &j.at("caption") : &j.at("text");
      out.push_back({id, text->get<std::string>(), it->second});
    } catch (const std::exception& e) {
      throw DataError("captions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace egd
