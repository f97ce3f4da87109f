#pragma once

// Yes/no VQA evaluation: dataset loading, answer parsing, POPE-style metric
// bundles, MME accuracy/accuracy+, yes-ratio transfer and calibration.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "egd/errors.hpp"

namespace egd {

struct EvalItem {
  std::string item_id;
  std::string image_id;
  std::string question;
  bool gold = false;
  std::set<std::string> split_tags;
  std::string subtask;  // MME only
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<EvalItem> items;
  std::vector<LineError> errors;
};

enum class Verdict { yes, no, unparsed };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::unparsed: return "unparsed";
  }
  return "?";
}

enum class ParseRule {
  first_word,  // only the first alphabetic word decides
  substring,   // first word, then a whole-word yes/no scan over the text
};

inline std::string_view to_string(ParseRule r) {
  return r == ParseRule::first_word ? "first-word" : "substring";
}

inline ParseRule parse_rule_from(std::string_view name) {
  if (name == "first-word") return ParseRule::first_word;
  if (name == "substring") return ParseRule::substring;
  throw InvalidArgument("unknown parse rule '" + std::string(name) + "'");
}

struct ParsedAnswer {
  Verdict verdict = Verdict::unparsed;
  std::string raw_text;
  double confidence = 0.0;
};

namespace detail {

inline std::string json_id(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  return v.dump();
}

inline const nlohmann::json* first_field(const nlohmann::json& obj,
                                         std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = obj.find(n);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

inline std::optional<bool> parse_label(const nlohmann::json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) {
    const auto i = v.get<long long>();
    if (i == 0 || i == 1) return i == 1;
    return std::nullopt;
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "yes" || s == "true") return true;
    if (s == "no" || s == "false") return false;
  }
  return std::nullopt;
}

inline std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace detail

/// Reads POPE-style JSON lines. Accepted field names: question_id/item_id/id,
/// image/image_id, text/question, label/answer/gold; optional dataset, setting,
/// split and subtask/category. Bad lines become errors, never silent drops.
inline LoadResult parse_eval_jsonl(std::istream& in) {
  LoadResult out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& msg) { out.errors.push_back({lineno, msg}); };

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!obj.is_object()) {
      fail("line is not a JSON object");
      continue;
    }
    const auto* image = detail::first_field(obj, {"image", "image_id"});
    const auto* question = detail::first_field(obj, {"text", "question"});
    const auto* label = detail::first_field(obj, {"label", "answer", "gold"});
    if (!image) { fail("missing field 'image'"); continue; }
    if (!question || !question->is_string()) { fail("missing field 'text'"); continue; }
    if (!label) { fail("missing field 'label'"); continue; }
    const auto gold = detail::parse_label(*label);
    if (!gold) { fail("label is not yes/no: " + label->dump()); continue; }

    EvalItem item;
    const auto* id = detail::first_field(obj, {"question_id", "item_id", "id"});
    item.item_id = id ? detail::json_id(*id) : std::to_string(lineno);
    item.image_id = detail::json_id(*image);
    item.question = question->get<std::string>();
    item.gold = *gold;
    for (const char* key : {"dataset", "setting", "split"}) {
      if (const auto* v = detail::first_field(obj, {key}); v && v->is_string()) {
        item.split_tags.insert(v->get<std::string>());
      }
    }
    if (const auto* sub = detail::first_field(obj, {"subtask", "category"}); sub && sub->is_string()) {
      item.subtask = sub->get<std::string>();
    }
    if (!seen.insert(item.item_id).second) {
      fail("duplicate item id '" + item.item_id + "'");
      continue;
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

inline LoadResult load_pope_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return parse_eval_jsonl(in);
}

/// Maps free-form model output onto a yes/no verdict.
inline Verdict parse_answer(std::string_view raw, ParseRule rule = ParseRule::first_word) {
  const auto words = detail::words_of(raw);
  if (!words.empty()) {
    if (words.front() == "yes") return Verdict::yes;
    if (words.front() == "no") return Verdict::no;
  }
  if (rule == ParseRule::substring) {
    const bool has_yes = std::find(words.begin(), words.end(), "yes") != words.end();
    const bool has_no = std::find(words.begin(), words.end(), "no") != words.end();
    if (has_yes && !has_no) return Verdict::yes;
    if (has_no && !has_yes) return Verdict::no;
  }
  return Verdict::unparsed;
}

struct AnswerRecord {
  std::string item_id;
  std::string text;
  double confidence = 0.0;
};

/// Reads answer lines {"question_id": ..., "text": ..., "confidence": ...}.
inline std::vector<AnswerRecord> parse_answers_jsonl(std::istream& in) {
  std::vector<AnswerRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      const auto* id = detail::first_field(obj, {"question_id", "item_id", "id"});
      const auto* text = detail::first_field(obj, {"text", "answer"});
      if (!id || !text || !text->is_string()) {
        throw DataError("missing question_id or text");
      }
      AnswerRecord rec{detail::json_id(*id), text->get<std::string>(), 0.0};
      if (const auto* c = detail::first_field(obj, {"confidence"})) rec.confidence = c->get<double>();
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw DataError("answers line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<AnswerRecord> load_answers_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open answers '" + path + "'");
  return parse_answers_jsonl(in);
}

/// Parses and orders answers to match `items`. Every item needs an answer.
inline std::vector<ParsedAnswer> align_answers(const std::vector<EvalItem>& items,
                                               const std::vector<AnswerRecord>& answers,
                                               ParseRule rule) {
  std::unordered_map<std::string, const AnswerRecord*> by_id;
  for (const auto& a : answers) by_id[a.item_id] = &a;
  std::vector<ParsedAnswer> out;
  out.reserve(items.size());
  std::vector<std::string> missing;
  for (const auto& item : items) {
    auto it = by_id.find(item.item_id);
    if (it == by_id.end()) {
      missing.push_back(item.item_id);
      continue;
    }
    out.push_back({parse_answer(it->second->text, rule), it->second->text, it->second->confidence});
  }
  if (!missing.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) ids += (i ? ", " : "") + missing[i];
    throw DataError(std::to_string(missing.size()) + " items have no answer: " + ids);
  }
  return out;
}

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t unparsed = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn + unparsed; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp; fp += o.fp; tn += o.tn; fn += o.fn; unparsed += o.unparsed;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricBundle {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
  double yes_ratio = 0.0;
  double gap = 0.0;
  ConfusionCounts counts;
  std::vector<std::string> degenerate;  // metrics whose denominator was zero (reported as 0)
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline double yes_ratio_gap(double yes_ratio) { return std::abs(yes_ratio - 0.5); }

/// Every metric is a function of the five counts. Unparsed answers count as
/// wrong and as not-yes.
inline MetricBundle metrics_from_counts(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidArgument("compute_metrics: no items");
  MetricBundle m;
  m.counts = c;
  auto ratio = [&m](std::size_t num, std::size_t den, const char* name) {
    if (den == 0) {
      m.degenerate.emplace_back(name);
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const std::size_t total = c.total();
  m.accuracy = ratio(c.tp + c.tn, total, "accuracy");
  m.precision = ratio(c.tp, c.tp + c.fp, "precision");
  m.recall = ratio(c.tp, c.tp + c.fn, "recall");
  m.specificity = ratio(c.tn, c.tn + c.fp, "specificity");
  if (m.precision + m.recall > 0.0) {
    m.f1 = f1_score(m.precision, m.recall);
  } else {
    m.degenerate.emplace_back("f1");
  }
  m.yes_ratio = ratio(c.tp + c.fp, total, "yes_ratio");
  m.gap = yes_ratio_gap(m.yes_ratio);
  return m;
}

inline ConfusionCounts tally(const std::vector<EvalItem>& items,
                             const std::vector<ParsedAnswer>& answers) {
  if (items.size() != answers.size()) {
    throw InvalidArgument("compute_metrics: items and answers differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < items.size(); ++i) {
    switch (answers[i].verdict) {
      case Verdict::yes: (items[i].gold ? c.tp : c.fp)++; break;
      case Verdict::no: (items[i].gold ? c.fn : c.tn)++; break;
      case Verdict::unparsed: c.unparsed++; break;
    }
  }
  return c;
}

inline MetricBundle compute_metrics(const std::vector<EvalItem>& items,
                                    const std::vector<ParsedAnswer>& answers) {
  if (items.empty()) throw InvalidArgument("compute_metrics: no items");
  return metrics_from_counts(tally(items, answers));
}

// ---- MME -------------------------------------------------------------------

struct MmeSubtaskScore {
  std::string name;
  double acc = 0.0;       // percent
  double acc_plus = 0.0;  // percent
  std::size_t questions = 0;
  std::size_t images = 0;

  double score() const noexcept { return acc + acc_plus; }
};

struct MmeScore {
  std::vector<MmeSubtaskScore> subtasks;  // existence, count, position, color first
  double total = 0.0;
};

inline constexpr std::string_view kMmeSubtasks[] = {"existence", "count", "position", "color"};

inline MmeScore mme_from_subtasks(std::vector<MmeSubtaskScore> subtasks) {
  MmeScore s;
  s.subtasks = std::move(subtasks);
  for (const auto& st : s.subtasks) s.total += st.score();
  return s;
}

/// MME scoring: per subtask, accuracy over questions plus accuracy+ over
/// images (both of an image's two questions right). Images are keyed by
/// (subtask, image_id).
inline MmeScore compute_mme(const std::vector<EvalItem>& items,
                            const std::vector<ParsedAnswer>& answers) {
  if (items.size() != answers.size()) throw InvalidArgument("compute_mme: length mismatch");
  if (items.empty()) throw InvalidArgument("compute_mme: no items");

  struct ImageTally {
    std::size_t questions = 0;
    std::size_t correct = 0;
  };
  std::map<std::string, std::map<std::string, ImageTally>> per_subtask;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string& sub = items[i].subtask.empty() ? std::string("unspecified") : items[i].subtask;
    auto& img = per_subtask[sub][items[i].image_id];
    img.questions++;
    const Verdict v = answers[i].verdict;
    const bool correct = (v == Verdict::yes && items[i].gold) || (v == Verdict::no && !items[i].gold);
    if (correct) img.correct++;
  }

  std::vector<std::string> offenders;
  for (const auto& [sub, images] : per_subtask) {
    for (const auto& [image, t] : images) {
      if (t.questions != 2) {
        offenders.push_back(sub + "/" + image + " (" + std::to_string(t.questions) + " questions)");
      }
    }
  }
  if (!offenders.empty()) {
    throw ProtocolViolation("MME images must have exactly 2 questions", std::move(offenders));
  }

  std::vector<std::string> order;
  for (auto name : kMmeSubtasks) {
    if (per_subtask.count(std::string(name))) order.emplace_back(name);
  }
  for (const auto& [sub, _] : per_subtask) {
    if (std::find(order.begin(), order.end(), sub) == order.end()) order.push_back(sub);
  }

  std::vector<MmeSubtaskScore> scores;
  for (const auto& sub : order) {
    MmeSubtaskScore s;
    s.name = sub;
    std::size_t correct = 0;
    std::size_t both = 0;
    for (const auto& [image, t] : per_subtask.at(sub)) {
      s.images++;
      s.questions += t.questions;
      correct += t.correct;
      if (t.correct == t.questions) both++;
    }
    s.acc = 100.0 * static_cast<double>(correct) / static_cast<double>(s.questions);
    s.acc_plus = 100.0 * static_cast<double>(both) / static_cast<double>(s.images);
    scores.push_back(std::move(s));
  }
  return mme_from_subtasks(std::move(scores));
}

// ---- yes-ratio transfer ----------------------------------------------------

struct IdVerdict {
  std::string item_id;
  Verdict verdict = Verdict::unparsed;
};

/// Rows: answer with visual input; columns: answer without it.
struct TransferCounts {
  std::size_t yes_yes = 0;
  std::size_t yes_no = 0;
  std::size_t no_yes = 0;
  std::size_t no_no = 0;
  std::size_t unparsed = 0;  // items with an unparsed answer on either side (counted as "no")

  std::size_t total() const noexcept { return yes_yes + yes_no + no_yes + no_no; }
  bool operator==(const TransferCounts&) const = default;
};

inline TransferCounts yes_ratio_transfer(const std::vector<IdVerdict>& with_visual,
                                         const std::vector<IdVerdict>& without_visual) {
  std::unordered_map<std::string, Verdict> other;
  for (const auto& a : without_visual) other[a.item_id] = a.verdict;
  std::vector<std::string> misaligned;
  std::unordered_set<std::string> matched;
  TransferCounts t;
  for (const auto& a : with_visual) {
    auto it = other.find(a.item_id);
    if (it == other.end()) {
      misaligned.push_back(a.item_id);
      continue;
    }
    matched.insert(a.item_id);
    if (a.verdict == Verdict::unparsed || it->second == Verdict::unparsed) t.unparsed++;
    const bool y1 = a.verdict == Verdict::yes;
    const bool y2 = it->second == Verdict::yes;
    if (y1 && y2) t.yes_yes++;
    else if (y1) t.yes_no++;
    else if (y2) t.no_yes++;
    else t.no_no++;
  }
  for (const auto& a : without_visual) {
    if (!matched.count(a.item_id)) misaligned.push_back(a.item_id);
  }
  if (!misaligned.empty() || with_visual.size() != without_visual.size()) {
    if (misaligned.empty()) misaligned.push_back("(duplicate ids)");
    throw ProtocolViolation("answer lists are not aligned on item_id", std::move(misaligned));
  }
  return t;
}

// ---- calibration -----------------------------------------------------------

struct CalibrationRow {
  Verdict verdict = Verdict::yes;
  double accuracy = 0.0;  // precision for yes, specificity for no
  double mean_confidence = 0.0;
  std::size_t answers = 0;

  double gap() const noexcept { return std::abs(accuracy - mean_confidence); }
};

struct CalibrationReport {
  std::vector<CalibrationRow> rows;  // yes first, then no; a verdict with no answers is omitted
  std::vector<std::string> omitted;
};

inline CalibrationReport accuracy_vs_confidence(const std::vector<EvalItem>& items,
                                                const std::vector<ParsedAnswer>& answers) {
  const MetricBundle m = metrics_from_counts(tally(items, answers));
  CalibrationReport report;
  for (Verdict v : {Verdict::yes, Verdict::no}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& a : answers) {
      if (a.verdict == v) {
        sum += a.confidence;
        ++n;
      }
    }
    if (n == 0) {
      report.omitted.emplace_back(to_string(v));
      continue;
    }
    CalibrationRow row;
    row.verdict = v;
    row.accuracy = v == Verdict::yes ? m.precision : m.specificity;
    row.mean_confidence = sum / static_cast<double>(n);
    row.answers = n;
    report.rows.push_back(row);
  }
  return report;
}

// ---- presentation ----------------------------------------------------------

/// Rounds half-up to 2 decimals and formats; used only when writing reports.
inline std::string fixed2(double value) {
  // The 1e-9 nudge absorbs binary representation error of decimal halves (x.xx5).
  const double scaled = std::floor(std::abs(value) * 100.0 + 0.5 + 1e-9);
  const long long cents = static_cast<long long>(scaled);
  std::ostringstream os;
  if (value < 0 && cents != 0) os << '-';
  os << cents / 100 << '.' << (cents % 100 < 10 ? "0" : "") << cents % 100;
  return os.str();
}

inline std::string percent2(double fraction) { return fixed2(fraction * 100.0); }

}  // namespace egd
