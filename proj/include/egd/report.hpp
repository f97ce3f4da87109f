#pragma once

// Generation records on disk (one JSON object per line) and the plot-data
// tables derived from them: confidence samples and their KDE, per-layer
// energies, layer-selection histograms, yes-ratio bars, calibration rows and
// transfer matrices.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egd/decoding.hpp"
#include "egd/eval.hpp"
#include "egd/io.hpp"
#include "egd/numerics.hpp"

namespace egd {

struct GenerationLine {
  std::string item_id;
  std::string image_id;
  std::string strategy;
  std::string text;
  Generation generation;

  double first_confidence() const {
    return generation.record.steps.empty() ? 0.0 : generation.record.steps.front().confidence;
  }
};

inline nlohmann::json to_json(const GenerationLine& g) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : g.generation.record.steps) {
    nlohmann::json js = {{"token", s.token}, {"confidence", s.confidence}, {"layer", s.chosen_layer}};
    if (!s.layer_energies.empty()) js["energies"] = s.layer_energies;
    steps.push_back(std::move(js));
  }
  nlohmann::json j = {{"question_id", g.item_id},
                      {"strategy", g.strategy},
                      {"text", g.text},
                      {"tokens", g.generation.tokens},
                      {"confidence", g.first_confidence()},
                      {"divergences", g.generation.divergences},
                      {"steps", std::move(steps)}};
  if (!g.image_id.empty()) {
    j["image_id"] = g.image_id;
    j["caption"] = g.text;
  }
  return j;
}

inline GenerationLine generation_from_json(const nlohmann::json& j) {
  GenerationLine g;
  g.item_id = detail::json_id(j.at("question_id"));
  if (j.contains("image_id")) g.image_id = detail::json_id(j.at("image_id"));
  g.strategy = j.value("strategy", "");
  g.text = j.at("text").get<std::string>();
  g.generation.divergences = j.value("divergences", std::size_t{0});
  if (j.contains("tokens")) g.generation.tokens = j.at("tokens").get<std::vector<TokenId>>();
  if (j.contains("steps")) {
    for (const auto& js : j.at("steps")) {
      StepRecord s;
      s.token = js.at("token").get<TokenId>();
      s.confidence = js.at("confidence").get<double>();
      s.chosen_layer = js.value("layer", std::size_t{0});
      if (js.contains("energies")) s.layer_energies = js.at("energies").get<std::vector<double>>();
      g.generation.record.steps.push_back(std::move(s));
    }
  } else if (j.contains("confidence")) {
    // Answer files from elsewhere may only carry the first-token confidence.
    StepRecord s;
    s.confidence = j.at("confidence").get<double>();
    g.generation.record.steps.push_back(s);
  }
  return g;
}

inline std::string generations_to_jsonl(const std::vector<GenerationLine>& lines) {
  std::string out;
  for (const auto& g : lines) out += to_json(g).dump() + '\n';
  return out;
}

inline std::vector<GenerationLine> parse_generations_jsonl(std::istream& in) {
  std::vector<GenerationLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(generation_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("generations line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<GenerationLine> load_generations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open answers '" + path + "'");
  return parse_generations_jsonl(in);
}

inline std::vector<AnswerRecord> as_answer_records(const std::vector<GenerationLine>& lines) {
  std::vector<AnswerRecord> out;
  out.reserve(lines.size());
  for (const auto& g : lines) out.push_back({g.item_id, g.text, g.first_confidence()});
  return out;
}

// ---- tables ----------------------------------------------------------------

struct MetricRow {
  std::string group;
  MetricBundle bundle;
};

inline std::string metrics_csv(const std::vector<MetricRow>& rows, ParseRule rule) {
  CsvWriter csv({"group", "items", "accuracy", "precision", "recall", "specificity", "f1",
                 "yes_ratio", "gap", "tp", "fp", "tn", "fn", "unparsed", "degenerate", "parse_rule"});
  for (const auto& r : rows) {
    const auto& m = r.bundle;
    std::string degenerate;
    for (const auto& d : m.degenerate) degenerate += (degenerate.empty() ? "" : ";") + d;
    csv.row({r.group, std::to_string(m.counts.total()), percent2(m.accuracy), percent2(m.precision),
             percent2(m.recall), percent2(m.specificity), percent2(m.f1), percent2(m.yes_ratio),
             percent2(m.gap), std::to_string(m.counts.tp), std::to_string(m.counts.fp),
             std::to_string(m.counts.tn), std::to_string(m.counts.fn),
             std::to_string(m.counts.unparsed), degenerate, std::string(to_string(rule))});
  }
  return csv.str();
}

inline nlohmann::json to_json(const MetricBundle& m) {
  return {{"accuracy", m.accuracy},   {"precision", m.precision}, {"recall", m.recall},
          {"specificity", m.specificity}, {"f1", m.f1},       {"yes_ratio", m.yes_ratio},
          {"gap", m.gap},             {"tp", m.counts.tp},       {"fp", m.counts.fp},
          {"tn", m.counts.tn},        {"fn", m.counts.fn},       {"unparsed", m.counts.unparsed},
          {"degenerate", m.degenerate}};
}

/// Overall bundle plus one per split tag (dataset / setting), tags sorted.
inline std::vector<MetricRow> grouped_metrics(const std::vector<EvalItem>& items,
                                              const std::vector<ParsedAnswer>& answers) {
  std::vector<MetricRow> rows;
  rows.push_back({"all", compute_metrics(items, answers)});
  std::map<std::string, std::pair<std::vector<EvalItem>, std::vector<ParsedAnswer>>> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (const auto& tag : items[i].split_tags) {
      groups[tag].first.push_back(items[i]);
      groups[tag].second.push_back(answers[i]);
    }
  }
  for (const auto& [tag, g] : groups) rows.push_back({tag, compute_metrics(g.first, g.second)});
  return rows;
}

inline std::string mme_csv(const MmeScore& s) {
  CsvWriter csv({"subtask", "images", "questions", "acc", "acc_plus", "score"});
  for (const auto& st : s.subtasks) {
    csv.row({st.name, std::to_string(st.images), std::to_string(st.questions), fixed2(st.acc),
             fixed2(st.acc_plus), fixed2(st.score())});
  }
  csv.row({"total", "", "", "", "", fixed2(s.total)});
  return csv.str();
}

struct ConfidenceSample {
  std::string item_id;
  Verdict verdict = Verdict::unparsed;
  double confidence = 0.0;
};

inline std::vector<ConfidenceSample> confidence_samples(const std::vector<GenerationLine>& lines,
                                                        ParseRule rule) {
  std::vector<ConfidenceSample> out;
  out.reserve(lines.size());
  for (const auto& g : lines) out.push_back({g.item_id, parse_answer(g.text, rule), g.first_confidence()});
  return out;
}

inline std::string confidence_samples_csv(const std::vector<ConfidenceSample>& samples) {
  CsvWriter csv({"question_id", "verdict", "confidence"});
  for (const auto& s : samples) {
    csv.row({s.item_id, std::string(to_string(s.verdict)), fmt_real(s.confidence)});
  }
  return csv.str();
}

struct KdeTable {
  std::string csv;
  std::vector<std::string> skipped;  // verdicts with too few / constant samples
};

/// KDE of first-token confidence per verdict on an evenly spaced [0, 1] grid.
inline KdeTable confidence_kde(const std::vector<ConfidenceSample>& samples,
                               std::size_t grid_points = 101) {
  KdeTable t;
  CsvWriter csv({"verdict", "x", "density"});
  const auto grid = linspace(0.0, 1.0, grid_points);
  for (Verdict v : {Verdict::yes, Verdict::no}) {
    std::vector<double> xs;
    for (const auto& s : samples) {
      if (s.verdict == v) xs.push_back(s.confidence);
    }
    try {
      const auto density = gaussian_kde(xs, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        csv.row({std::string(to_string(v)), fmt_real(grid[i]), fmt_real(density[i])});
      }
    } catch (const DegenerateInput&) {
      t.skipped.emplace_back(to_string(v));
    }
  }
  t.csv = csv.str();
  return t;
}

inline std::string energy_samples_csv(const std::vector<GenerationLine>& lines) {
  CsvWriter csv({"question_id", "step", "layer", "energy", "chosen"});
  for (const auto& g : lines) {
    const auto& steps = g.generation.record.steps;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      for (std::size_t k = 0; k < steps[s].layer_energies.size(); ++k) {
        csv.row({g.item_id, std::to_string(s), std::to_string(k + 1),
                 fmt_real(steps[s].layer_energies[k]), k + 1 == steps[s].chosen_layer ? "1" : "0"});
      }
    }
  }
  return csv.str();
}

struct LayerEnergySummary {
  std::size_t layer = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline std::vector<LayerEnergySummary> energy_summary(const std::vector<GenerationLine>& lines) {
  std::map<std::size_t, std::vector<double>> by_layer;
  for (const auto& g : lines) {
    for (const auto& s : g.generation.record.steps) {
      for (std::size_t k = 0; k < s.layer_energies.size(); ++k) by_layer[k + 1].push_back(s.layer_energies[k]);
    }
  }
  std::vector<LayerEnergySummary> out;
  for (const auto& [layer, xs] : by_layer) {
    LayerEnergySummary e{layer, xs.size(), 0.0, xs.front(), xs.front()};
    for (double x : xs) {
      e.mean += x;
      e.min = std::min(e.min, x);
      e.max = std::max(e.max, x);
    }
    e.mean /= static_cast<double>(xs.size());
    out.push_back(e);
  }
  return out;
}

inline std::string energy_summary_csv(const std::vector<LayerEnergySummary>& rows) {
  CsvWriter csv({"layer", "count", "mean_energy", "min_energy", "max_energy"});
  for (const auto& r : rows) {
    csv.row({std::to_string(r.layer), std::to_string(r.count), fmt_real(r.mean), fmt_real(r.min),
             fmt_real(r.max)});
  }
  return csv.str();
}

/// How often each layer was selected, over all steps and over first steps.
struct LayerHistogram {
  std::map<std::size_t, std::size_t> all_steps;
  std::map<std::size_t, std::size_t> first_step;
  std::size_t total_steps = 0;
  std::size_t total_first = 0;
};

inline LayerHistogram layer_histogram(const std::vector<GenerationLine>& lines) {
  LayerHistogram h;
  for (const auto& g : lines) {
    const auto& steps = g.generation.record.steps;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      if (steps[s].chosen_layer == 0) continue;
      h.all_steps[steps[s].chosen_layer]++;
      h.total_steps++;
      if (s == 0) {
        h.first_step[steps[s].chosen_layer]++;
        h.total_first++;
      }
    }
  }
  return h;
}

inline std::string layer_histogram_csv(const LayerHistogram& h) {
  CsvWriter csv({"layer", "count", "fraction", "first_step_count", "first_step_fraction"});
  std::set<std::size_t> layers;
  for (const auto& [k, _] : h.all_steps) layers.insert(k);
  for (std::size_t k : layers) {
    const std::size_t c = h.all_steps.count(k) ? h.all_steps.at(k) : 0;
    const std::size_t f = h.first_step.count(k) ? h.first_step.at(k) : 0;
    csv.row({std::to_string(k), std::to_string(c),
             fmt_real(static_cast<double>(c) / static_cast<double>(h.total_steps)), std::to_string(f),
             fmt_real(h.total_first ? static_cast<double>(f) / static_cast<double>(h.total_first) : 0.0)});
  }
  return csv.str();
}

inline std::string yes_ratio_csv(const std::vector<MetricRow>& rows) {
  CsvWriter csv({"group", "items", "yes_ratio", "gap"});
  for (const auto& r : rows) {
    csv.row({r.group, std::to_string(r.bundle.counts.total()), percent2(r.bundle.yes_ratio),
             percent2(r.bundle.gap)});
  }
  return csv.str();
}

inline std::string calibration_csv(const CalibrationReport& c) {
  CsvWriter csv({"verdict", "accuracy", "mean_confidence", "gap", "answers"});
  for (const auto& r : c.rows) {
    csv.row({std::string(to_string(r.verdict)), fmt_real(r.accuracy), fmt_real(r.mean_confidence),
             fmt_real(r.gap()), std::to_string(r.answers)});
  }
  return csv.str();
}

inline std::string transfer_csv(const TransferCounts& t) {
  CsvWriter csv({"with_visual", "without_visual", "count"});
  csv.row({"yes", "yes", std::to_string(t.yes_yes)});
  csv.row({"yes", "no", std::to_string(t.yes_no)});
  csv.row({"no", "yes", std::to_string(t.no_yes)});
  csv.row({"no", "no", std::to_string(t.no_no)});
  return csv.str();
}

}  // namespace egd
