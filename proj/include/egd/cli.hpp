#pragma once

// Batch command-line surface. `run` is the whole program; tools/egd.cpp only
// forwards argv. Exit codes: 0 success, 1 usage, 2 data error, 3 protocol
// violation. Failures print one JSON object to the error stream.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "egd/chair.hpp"
#include "egd/decoding.hpp"
#include "egd/errors.hpp"
#include "egd/eval.hpp"
#include "egd/io.hpp"
#include "egd/parallel.hpp"
#include "egd/report.hpp"
#include "egd/toy_model.hpp"
#include "egd/trace_io.hpp"

namespace egd::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kProtocol = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReportSelectors {
  bool kde = false;
  bool energy_histogram = false;
  bool layer_histogram = false;
  bool calibration = false;
  bool transfer = false;
  bool yes_ratio = false;

  bool any() const { return kde || energy_histogram || layer_histogram || calibration || transfer || yes_ratio; }
};

struct RunConfig {
  std::string command;

  std::string dataset;
  std::string answers;
  std::string answers_novisual;
  std::string prompts;
  std::string traces;  // manifest
  std::string trace;   // single file
  std::string question_id;
  std::string tokens;
  std::string vocab;
  std::string annotations;
  std::string captions;
  std::string out;
  std::string out_dir;

  std::string task = "vqa";
  std::string strategy = "greedy";
  std::optional<std::size_t> max_new_tokens;
  std::optional<std::uint64_t> seed;
  DecodeParams decode;
  std::string parse_rule = "first-word";
  ToyModelConfig toy;
  bool copy_final_layers = false;
  std::size_t jobs = 1;
  ReportSelectors report;
};

namespace detail {

inline std::size_t default_max_new_tokens(const std::string& task) { return task == "caption" ? 64 : 16; }

inline std::filesystem::path out_path(const RunConfig& c, const std::string& name) {
  return std::filesystem::path(c.out_dir) / name;
}

inline std::vector<TokenId> json_ids(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<TokenId>>();
}

struct PromptLine {
  std::string item_id;
  std::string image_id;
  PromptTokens prompt;
};

inline std::vector<PromptLine> load_prompts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prompts '" + path + "'");
  std::vector<PromptLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PromptLine p;
      p.item_id = j.contains("question_id") ? egd::detail::json_id(j.at("question_id")) : std::to_string(lineno);
      if (j.contains("image_id")) p.image_id = egd::detail::json_id(j.at("image_id"));
      p.prompt.visual_tokens = json_ids(j, "visual_tokens");
      p.prompt.text_tokens = j.contains("text_tokens") ? json_ids(j, "text_tokens") : json_ids(j, "tokens");
      if (p.prompt.size() == 0) throw DataError("prompt has no tokens");
      out.push_back(std::move(p));
    } catch (const DataError& e) {
      throw DataError("prompts line " + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("prompts line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

struct TraceJob {
  std::string item_id;
  std::string image_id;
  std::string path;
};

inline std::vector<TraceJob> load_trace_jobs(const RunConfig& c) {
  std::vector<TraceJob> jobs;
  if (!c.trace.empty()) {
    const std::string id = c.question_id.empty() ? std::filesystem::path(c.trace).stem().string() : c.question_id;
    jobs.push_back({id, "", c.trace});
    return jobs;
  }
  std::ifstream in(c.traces);
  if (!in) throw DataError("cannot open trace manifest '" + c.traces + "'");
  const auto base = std::filesystem::path(c.traces).parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceJob t;
      t.item_id = egd::detail::json_id(j.at("question_id"));
      if (j.contains("image_id")) t.image_id = egd::detail::json_id(j.at("image_id"));
      std::filesystem::path p = j.at("trace").get<std::string>();
      t.path = (p.is_relative() ? base / p : p).string();
      jobs.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("trace manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return jobs;
}

inline LoadResult load_dataset_strict(const std::string& path) {
  LoadResult r = load_pope_jsonl(path);
  if (!r.errors.empty()) {
    std::string msg = "dataset '" + path + "' has " + std::to_string(r.errors.size()) + " malformed lines:";
    for (std::size_t i = 0; i < r.errors.size() && i < 20; ++i) {
      msg += " [line " + std::to_string(r.errors[i].line) + "] " + r.errors[i].message + ";";
    }
    throw DataError(msg);
  }
  return r;
}

inline DecodeParams decode_params(const RunConfig& c) {
  DecodeParams p = c.decode;
  p.strategy = parse_strategy(c.strategy);
  p.max_new_tokens = c.max_new_tokens.value_or(default_max_new_tokens(c.task));
  p.rng_seed = c.seed.value_or(0);
  return p;
}

inline void validate(const RunConfig& c) {
  auto need = [&](const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(c.command + ": " + flag + " is required");
  };
  const bool decoding = c.command == "decode" || c.command == "replay";
  if (decoding) {
    need(c.out, "--out");
    try {
      decode_params(c).validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    const bool samples = c.strategy == "nucleus" || (c.strategy == "energy" && c.decode.sample_selected_layer);
    if (samples && !c.seed) throw UsageError("sampling strategies require --seed for reproducible runs");
    if (c.jobs < 1) throw UsageError("--jobs must be >= 1");
  }
  if (c.command == "decode") {
    need(c.prompts, "--prompts");
    try {
      c.toy.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  } else if (c.command == "replay") {
    if (c.trace.empty() == c.traces.empty()) throw UsageError("replay: give exactly one of --trace or --traces");
  } else if (c.command == "eval-pope" || c.command == "eval-mmvp" || c.command == "eval-mme") {
    need(c.dataset, "--dataset");
    need(c.answers, "--answers");
    need(c.out_dir, "--out-dir");
  } else if (c.command == "chair") {
    need(c.vocab, "--vocab");
    need(c.annotations, "--annotations");
    need(c.captions, "--captions");
    need(c.out_dir, "--out-dir");
  } else if (c.command == "report") {
    need(c.answers, "--answers");
    need(c.out_dir, "--out-dir");
    if (c.report.calibration && c.dataset.empty()) throw UsageError("report --calibration needs --dataset");
    if (c.report.yes_ratio && c.dataset.empty()) throw UsageError("report --yes-ratio needs --dataset");
    if (c.report.transfer && c.answers_novisual.empty()) {
      throw UsageError("report --transfer needs --answers-novisual");
    }
  }
}

inline std::string now_summary(const std::string& command, const nlohmann::json& extra) {
  nlohmann::json j = {{"status", "ok"}, {"command", command}};
  j.update(extra);
  return j.dump();
}

// ---- commands --------------------------------------------------------------

inline int cmd_decode(const RunConfig& c, std::ostream& out) {
  ToyModelConfig cfg = c.toy;
  if (c.copy_final_layers) cfg.mode = LayerMode::copy_final;
  const ToyModel model(cfg);
  const ToyModelSource source(model);
  const DecodeParams params = decode_params(c);
  const TokenTable table = c.tokens.empty() ? TokenTable() : TokenTable::load(c.tokens);
  const auto prompts = load_prompts(c.prompts);

  auto lines = parallel_map(prompts.size(), c.jobs, [&](std::size_t i) {
    const auto tokens = prompts[i].prompt.concatenated();
    GenerationLine g;
    g.item_id = prompts[i].item_id;
    g.image_id = prompts[i].image_id;
    g.strategy = std::string(to_string(params.strategy));
    g.generation = decode(source, tokens, params);
    g.text = table.detokenize(g.generation.tokens);
    return g;
  });

  write_file_atomic(c.out, generations_to_jsonl(lines));
  out << now_summary("decode", {{"items", lines.size()}, {"model_checksum", model.checksum()},
                                {"strategy", to_string(params.strategy)}})
      << '\n';
  return kOk;
}

inline int cmd_replay(const RunConfig& c, std::ostream& out) {
  const DecodeParams base = decode_params(c);
  const TokenTable table = c.tokens.empty() ? TokenTable() : TokenTable::load(c.tokens);
  const auto jobs = load_trace_jobs(c);

  auto lines = parallel_map(jobs.size(), c.jobs, [&](std::size_t i) {
    const TraceSource source(read_trace_file(jobs[i].path));
    DecodeParams params = base;
    if (!c.max_new_tokens) {
      params.max_new_tokens = std::min<std::size_t>(params.max_new_tokens, source.num_steps());
      if (params.max_new_tokens == 0) throw DataError("trace '" + jobs[i].path + "' holds no steps");
    }
    GenerationLine g;
    g.item_id = jobs[i].item_id;
    g.image_id = jobs[i].image_id;
    g.strategy = std::string(to_string(params.strategy));
    try {
      g.generation = decode(source, source.header().prompt, params);
    } catch (const TraceExhausted& e) {
      throw DataError("trace '" + jobs[i].path + "': " + e.what());
    }
    g.text = table.detokenize(g.generation.tokens);
    return g;
  });

  std::size_t divergences = 0;
  for (const auto& g : lines) divergences += g.generation.divergences;
  write_file_atomic(c.out, generations_to_jsonl(lines));
  out << now_summary("replay", {{"items", lines.size()}, {"divergences", divergences},
                                {"strategy", to_string(base.strategy)}})
      << '\n';
  return kOk;
}

inline int cmd_eval_binary(const RunConfig& c, std::ostream& out) {
  const ParseRule rule = parse_rule_from(c.parse_rule);
  const LoadResult data = load_dataset_strict(c.dataset);
  if (data.items.empty()) throw DataError("dataset '" + c.dataset + "' is empty");
  const auto answers = align_answers(data.items, as_answer_records(load_generations_jsonl(c.answers)), rule);
  const auto rows = grouped_metrics(data.items, answers);

  std::string jsonl;
  for (const auto& r : rows) {
    nlohmann::json j = to_json(r.bundle);
    j["group"] = r.group;
    j["benchmark"] = c.command == "eval-mmvp" ? "mmvp" : "pope";
    j["parse_rule"] = to_string(rule);
    jsonl += j.dump() + '\n';
  }
  ArtifactSet artifacts;
  artifacts.add(out_path(c, "metrics.csv"), metrics_csv(rows, rule));
  artifacts.add(out_path(c, "metrics.jsonl"), jsonl);
  artifacts.commit();

  const auto& all = rows.front().bundle;
  out << now_summary(c.command, {{"items", all.counts.total()},
                                 {"accuracy", percent2(all.accuracy)},
                                 {"f1", percent2(all.f1)},
                                 {"gap", percent2(all.gap)},
                                 {"parse_rule", to_string(rule)}})
      << '\n';
  return kOk;
}

inline int cmd_eval_mme(const RunConfig& c, std::ostream& out) {
  const ParseRule rule = parse_rule_from(c.parse_rule);
  const LoadResult data = load_dataset_strict(c.dataset);
  const auto answers = align_answers(data.items, as_answer_records(load_generations_jsonl(c.answers)), rule);
  const MmeScore score = compute_mme(data.items, answers);

  nlohmann::json j = {{"total", score.total}, {"parse_rule", to_string(rule)}};
  for (const auto& st : score.subtasks) {
    j["subtasks"][st.name] = {{"acc", st.acc}, {"acc_plus", st.acc_plus}, {"score", st.score()}};
  }
  ArtifactSet artifacts;
  artifacts.add(out_path(c, "mme.csv"), mme_csv(score));
  artifacts.add(out_path(c, "mme.jsonl"), j.dump() + '\n');
  artifacts.commit();
  out << now_summary("eval-mme", {{"total", fixed2(score.total)}}) << '\n';
  return kOk;
}

inline int cmd_chair(const RunConfig& c, std::ostream& out) {
  const ObjectVocabulary vocab = load_object_vocabulary(c.vocab);
  const auto annotations = load_annotations(c.annotations, vocab);
  const auto corpus = load_caption_corpus(c.captions, annotations);
  std::vector<CaptionJudgment> judgments;
  const ChairScores s = score_corpus(corpus, vocab, &judgments);

  CsvWriter csv({"chair_s", "chair_i", "captions", "captions_with_hallucination", "mentioned",
                 "hallucinated", "no_mentions"});
  csv.row({percent2(s.chair_s), percent2(s.chair_i), std::to_string(s.captions),
           std::to_string(s.captions_with_hallucination), std::to_string(s.mentioned),
           std::to_string(s.hallucinated), s.no_mentions ? "1" : "0"});
  std::string per_caption;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    per_caption += nlohmann::json{{"image_id", corpus[i].image_id},
                                  {"mentioned", judgments[i].mentioned},
                                  {"hallucinated", judgments[i].hallucinated}}
                       .dump() +
                   '\n';
  }
  const nlohmann::json summary = {{"chair_s", s.chair_s}, {"chair_i", s.chair_i},
                                   {"captions", s.captions}, {"captions_with_hallucination", s.captions_with_hallucination},
                                   {"mentioned", s.mentioned}, {"hallucinated", s.hallucinated},
                                   {"no_mentions", s.no_mentions}};
  ArtifactSet artifacts;
  artifacts.add(out_path(c, "chair.csv"), csv.str());
  artifacts.add(out_path(c, "chair.jsonl"), summary.dump() + '\n');
  artifacts.add(out_path(c, "chair_captions.jsonl"), per_caption);
  artifacts.commit();
  out << now_summary("chair", {{"chair_s", percent2(s.chair_s)}, {"chair_i", percent2(s.chair_i)}}) << '\n';
  return kOk;
}

inline int cmd_report(const RunConfig& c, std::ostream& out) {
  ReportSelectors sel = c.report;
  if (!sel.any()) {
    sel.kde = sel.energy_histogram = sel.layer_histogram = true;
    sel.calibration = sel.yes_ratio = !c.dataset.empty();
    sel.transfer = !c.answers_novisual.empty();
  }
  const ParseRule rule = parse_rule_from(c.parse_rule);
  const auto lines = load_generations_jsonl(c.answers);
  ArtifactSet artifacts;
  nlohmann::json notes = nlohmann::json::object();

  if (sel.kde) {
    const auto samples = confidence_samples(lines, rule);
    const KdeTable kde = confidence_kde(samples);
    artifacts.add(out_path(c, "confidence_samples.csv"), confidence_samples_csv(samples));
    artifacts.add(out_path(c, "kde.csv"), kde.csv);
    if (!kde.skipped.empty()) notes["kde_skipped"] = kde.skipped;
  }
  if (sel.energy_histogram) {
    artifacts.add(out_path(c, "energy_samples.csv"), energy_samples_csv(lines));
    artifacts.add(out_path(c, "energy_summary.csv"), energy_summary_csv(energy_summary(lines)));
  }
  if (sel.layer_histogram) {
    artifacts.add(out_path(c, "layer_histogram.csv"), layer_histogram_csv(layer_histogram(lines)));
  }
  if (sel.calibration || sel.yes_ratio) {
    const LoadResult data = load_dataset_strict(c.dataset);
    const auto answers = align_answers(data.items, as_answer_records(lines), rule);
    if (sel.yes_ratio) artifacts.add(out_path(c, "yes_ratio.csv"), yes_ratio_csv(grouped_metrics(data.items, answers)));
    if (sel.calibration) {
      const auto cal = accuracy_vs_confidence(data.items, answers);
      artifacts.add(out_path(c, "calibration.csv"), calibration_csv(cal));
      if (!cal.omitted.empty()) notes["calibration_omitted"] = cal.omitted;
    }
  }
  if (sel.transfer) {
    auto verdicts = [rule](const std::vector<GenerationLine>& ls) {
      std::vector<IdVerdict> v;
      for (const auto& g : ls) v.push_back({g.item_id, parse_answer(g.text, rule)});
      return v;
    };
    const auto t = yes_ratio_transfer(verdicts(lines), verdicts(load_generations_jsonl(c.answers_novisual)));
    artifacts.add(out_path(c, "transfer.csv"), transfer_csv(t));
    if (t.unparsed) notes["transfer_unparsed"] = t.unparsed;
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& [p, _] : artifacts.files()) files.push_back(p.filename().string());
  artifacts.add(out_path(c, "report.json"), nlohmann::json{{"files", files}, {"notes", notes},
                                                            {"parse_rule", to_string(rule)}}.dump(2) + '\n');
  artifacts.commit();
  out << now_summary("report", {{"files", files}}) << '\n';
  return kOk;
}

inline void emit_error(std::ostream& err, const std::string& command, int code, const std::string& kind,
                       const std::string& message) {
  err << nlohmann::json{{"status", "error"}, {"command", command}, {"exit_code", code},
                        {"kind", kind}, {"message", message}}
             .dump()
      << '\n';
}

}  // namespace detail

inline void add_decode_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--strategy", c.strategy, "greedy | nucleus | energy")
      ->check(CLI::IsMember({"greedy", "nucleus", "energy"}));
  sub->add_option("--task", c.task, "vqa (16 new tokens) | caption (64)")->check(CLI::IsMember({"vqa", "caption"}));
  sub->add_option("--max-new-tokens", c.max_new_tokens, "Generation length cap");
  sub->add_option("--top-p", c.decode.top_p, "Nucleus mass in (0, 1]");
  sub->add_option("--temperature", c.decode.temperature, "Softmax temperature (> 0)");
  sub->add_option("--seed", c.seed, "Sampling seed (required for nucleus)");
  sub->add_flag("--sample-selected-layer", c.decode.sample_selected_layer,
                "Energy strategy: nucleus-sample from the selected layer");
  sub->add_flag("--record-energies", c.decode.record_energies, "Record per-layer energies for every strategy");
  sub->add_option("--tokens", c.tokens, "JSON array mapping token ids to text");
  sub->add_option("--jobs", c.jobs, "Worker threads");
  sub->add_option("--out", c.out, "Output generations (JSON lines)");
}

/// Parses argv (without the program name) into a RunConfig. Throws
/// CLI::ParseError or UsageError.
inline RunConfig parse_args(const std::vector<std::string>& args, std::ostream& out) {
  RunConfig c;
  CLI::App app{"Energy-guided decoding and hallucination evaluation toolkit", "egd"};
  app.require_subcommand(1);

  auto* decode = app.add_subcommand("decode", "Decode prompts with the built-in toy model");
  add_decode_options(decode, c);
  decode->add_option("--prompts", c.prompts, "Prompt lines {question_id, visual_tokens, text_tokens}");
  decode->add_option("--layers", c.toy.num_layers, "Toy model layers");
  decode->add_option("--hidden-dim", c.toy.hidden_dim, "Toy model hidden size");
  decode->add_option("--vocab-size", c.toy.vocab_size, "Toy model vocabulary (id 0 is end-of-sequence)");
  decode->add_option("--context-limit", c.toy.context_limit, "Toy model context limit");
  decode->add_option("--model-seed", c.toy.seed, "Toy model parameter seed");
  decode->add_flag("--copy-final-layers", c.copy_final_layers, "Every layer reports the final hidden state");

  auto* replay = app.add_subcommand("replay", "Decode offline over recorded traces");
  add_decode_options(replay, c);
  replay->add_option("--trace", c.trace, "Single trace file");
  replay->add_option("--question-id", c.question_id, "Item id for --trace (default: file stem)");
  replay->add_option("--traces", c.traces, "Manifest lines {question_id, trace[, image_id]}");

  for (const char* name : {"eval-pope", "eval-mmvp", "eval-mme"}) {
    auto* ev = app.add_subcommand(name, std::string("Score yes/no answers (") + name + ")");
    ev->add_option("--dataset", c.dataset, "Question lines");
    ev->add_option("--answers", c.answers, "Answer / generation lines");
    ev->add_option("--parse-rule", c.parse_rule, "first-word | substring")
        ->check(CLI::IsMember({"first-word", "substring"}));
    ev->add_option("--out-dir", c.out_dir, "Output directory");
    ev->add_option("--jobs", c.jobs, "Worker threads");
  }

  auto* chair = app.add_subcommand("chair", "CHAIR_S / CHAIR_I over captions");
  chair->add_option("--vocab", c.vocab, "Object vocabulary JSON");
  chair->add_option("--annotations", c.annotations, "Ground-truth objects per image JSON");
  chair->add_option("--captions", c.captions, "Caption lines {image_id, caption}");
  chair->add_option("--out-dir", c.out_dir, "Output directory");
  chair->add_option("--jobs", c.jobs, "Worker threads");

  auto* report = app.add_subcommand("report", "Emit plot data (CSV) from generations");
  report->add_option("--answers", c.answers, "Generation lines");
  report->add_option("--answers-novisual", c.answers_novisual, "Generations without visual input (transfer)");
  report->add_option("--dataset", c.dataset, "Question lines (calibration, yes-ratio)");
  report->add_option("--parse-rule", c.parse_rule, "first-word | substring")
      ->check(CLI::IsMember({"first-word", "substring"}));
  report->add_option("--out-dir", c.out_dir, "Output directory");
  report->add_flag("--kde", c.report.kde, "Confidence samples and KDE per verdict");
  report->add_flag("--energy-histogram", c.report.energy_histogram, "Per-layer energy samples");
  report->add_flag("--layer-histogram", c.report.layer_histogram, "Selected-layer histogram");
  report->add_flag("--calibration", c.report.calibration, "Accuracy vs confidence rows");
  report->add_flag("--transfer", c.report.transfer, "Yes-ratio transfer matrix");
  report->add_flag("--yes-ratio", c.report.yes_ratio, "Yes ratio per split");
  report->add_option("--jobs", c.jobs, "Worker threads");

  std::vector<const char*> argv{"egd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    throw;
  }
  c.command = app.get_subcommands().front()->get_name();
  detail::validate(c);
  return c;
}

inline int run(const RunConfig& c, std::ostream& out) {
  if (c.command == "decode") return detail::cmd_decode(c, out);
  if (c.command == "replay") return detail::cmd_replay(c, out);
  if (c.command == "eval-pope" || c.command == "eval-mmvp") return detail::cmd_eval_binary(c, out);
  if (c.command == "eval-mme") return detail::cmd_eval_mme(c, out);
  if (c.command == "chair") return detail::cmd_chair(c, out);
  if (c.command == "report") return detail::cmd_report(c, out);
  throw UsageError("unknown command '" + c.command + "'");
}

/// Full program: parse, validate, execute, map errors onto exit codes.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::string command = args.empty() ? "" : args.front();
  try {
    const RunConfig c = parse_args(args, out);
    command = c.command;
    return run(c, out);
  } catch (const CLI::CallForHelp&) {
    return kOk;
  } catch (const CLI::ParseError& e) {
    detail::emit_error(err, command, kUsage, "usage", e.what());
    return kUsage;
  } catch (const UsageError& e) {
    detail::emit_error(err, command, kUsage, "usage", e.what());
    return kUsage;
  } catch (const ProtocolViolation& e) {
    detail::emit_error(err, command, kProtocol, "protocol-violation", e.what());
    return kProtocol;
  } catch (const std::exception& e) {
    detail::emit_error(err, command, kDataError, "data", e.what());
    return kDataError;
  }
}

}  // namespace egd::cli
