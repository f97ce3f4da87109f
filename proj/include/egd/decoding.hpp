#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "egd/errors.hpp"
#include "egd/logit_lens.hpp"
#include "egd/numerics.hpp"
#include "egd/toy_model.hpp"

namespace egd {

enum class Strategy { greedy, nucleus, energy };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::nucleus: return "nucleus";
    case Strategy::energy: return "energy";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  if (name == "greedy") return Strategy::greedy;
  if (name == "nucleus") return Strategy::nucleus;
  if (name == "energy") return Strategy::energy;
  throw InvalidArgument("unknown strategy '" + std::string(name) + "'");
}

struct DecodeParams {
  Strategy strategy = Strategy::greedy;
  std::size_t max_new_tokens = 16;
  double top_p = 1.0;
  double temperature = 1.0;
  std::uint64_t rng_seed = 0;
  // Energy strategy only: sample from the nucleus of the selected layer
  // instead of taking its argmax.
  bool sample_selected_layer = false;
  // Record per-layer energies for greedy/nucleus steps too (energy-distribution reports).
  bool record_energies = false;

  void validate() const {
    if (max_new_tokens < 1) throw InvalidArgument("max_new_tokens must be >= 1");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidArgument("top_p must be in (0, 1]");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
      throw InvalidArgument("temperature must be > 0");
    }
  }
};

struct StepRecord {
  TokenId token = 0;
  double confidence = 0.0;        // softmax probability of `token` in the decoding distribution
  std::size_t chosen_layer = 0;   // 1-based
  std::vector<double> layer_energies;
};

struct GenerationRecord {
  std::vector<StepRecord> steps;
};

struct Generation {
  std::vector<TokenId> tokens;
  GenerationRecord record;
  std::size_t divergences = 0;  // replay only: steps where the token differs from the recorded one
};

/// Uniform doubles from a 64-bit Mersenne Twister. Conversion is done here
/// rather than through <random> distributions so streams are identical across
/// standard library implementations.
class SamplingRng {
 public:
  explicit SamplingRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Indices of the smallest probability-sorted prefix whose mass reaches top_p.
/// Sorted by descending probability, ties by ascending index.
inline std::vector<std::size_t> nucleus_set(std::span<const double> probs, double top_p) {
  if (probs.empty()) throw InvalidArgument("nucleus_set: empty distribution");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  double mass = 0.0;
  std::size_t keep = 0;
  // The 1e-12 slack keeps e.g. 3 x (1/3) from missing top_p = 1 by rounding.
  while (keep < order.size()) {
    mass += probs[order[keep++]];
    if (mass >= top_p - 1e-12) break;
  }
  order.resize(keep);
  return order;
}

inline std::size_t nucleus_sample(std::span<const double> probs, double top_p, SamplingRng& rng) {
  const auto kept = nucleus_set(probs, top_p);
  double mass = 0.0;
  for (std::size_t i : kept) mass += probs[i];
  const double u = rng.uniform() * mass;
  double acc = 0.0;
  for (std::size_t i : kept) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return kept.back();
}

/// Anything that can produce per-layer next-token logits for a step.
/// `sequence` is prompt plus tokens emitted so far; `step` counts from 0.
template <class S>
concept StepSource = requires(const S& s, std::span<const TokenId> sequence, std::size_t step) {
  { s.layer_logits(sequence, step) } -> std::convertible_to<std::vector<LogitVector>>;
  { s.context_limit() } -> std::convertible_to<std::size_t>;
};

/// Sources that know what token the original run produced at each step.
template <class S>
concept RecordedSource = StepSource<S> && requires(const S& s, std::size_t step) {
  { s.recorded_token(step) } -> std::convertible_to<std::optional<TokenId>>;
};

class ToyModelSource {
 public:
  explicit ToyModelSource(const ToyModel& model) : model_(&model) {}

  std::vector<LogitVector> layer_logits(std::span<const TokenId> sequence, std::size_t) const {
    return project_stack(model_->head(), model_->forward_last(sequence));
  }
  std::size_t context_limit() const { return model_->context_limit(); }

 private:
  const ToyModel* model_;
};

template <StepSource S>
Generation decode(const S& source, std::span<const TokenId> prompt, const DecodeParams& params) {
  params.validate();
  std::vector<TokenId> sequence(prompt.begin(), prompt.end());
  if (sequence.size() > source.context_limit()) {
    throw ContextOverflow(sequence.size(), source.context_limit());
  }
  SamplingRng rng(params.rng_seed);
  Generation gen;

  for (std::size_t step = 0; step < params.max_new_tokens; ++step) {
    if (sequence.size() > source.context_limit()) {
      throw ContextOverflow(sequence.size(), source.context_limit());
    }
    std::vector<LogitVector> layers = source.layer_logits(sequence, step);
    if (layers.empty()) throw InvalidArgument("decode: source returned no layers");

    StepRecord rec;
    LogitVector logits;
    if (params.strategy == Strategy::energy) {
      LayerSelection sel = select_from_logits(std::move(layers));
      rec.chosen_layer = sel.chosen_layer();
      rec.layer_energies = std::move(sel.energies);
      logits = std::move(sel.next_token_logits);
    } else {
      rec.chosen_layer = layers.size();
      if (params.record_energies) rec.layer_energies = energies_of(layers);
      logits = std::move(layers.back());
    }

    for (double& x : logits) x /= params.temperature;
    const ProbVector probs = softmax(logits);

    const bool sample = params.strategy == Strategy::nucleus ||
                        (params.strategy == Strategy::energy && params.sample_selected_layer);
    const std::size_t choice = sample ? nucleus_sample(probs, params.top_p, rng) : argmax(logits);
    rec.token = static_cast<TokenId>(choice);
    rec.confidence = probs[choice];

    if constexpr (RecordedSource<S>) {
      const std::optional<TokenId> recorded = source.recorded_token(step);
      if (recorded && *recorded != rec.token) ++gen.divergences;
    }

    gen.tokens.push_back(rec.token);
    sequence.push_back(rec.token);
    gen.record.steps.push_back(std::move(rec));
    if (gen.tokens.back() == kEosToken) break;
  }
  return gen;
}

template <StepSource S>
Generation decode_greedy(const S& source, std::span<const TokenId> prompt, DecodeParams params) {
  params.strategy = Strategy::greedy;
  return decode(source, prompt, params);
}

template <StepSource S>
Generation decode_nucleus(const S& source, std::span<const TokenId> prompt, DecodeParams params) {
  params.strategy = Strategy::nucleus;
  return decode(source, prompt, params);
}

template <StepSource S>
Generation decode_energy(const S& source, std::span<const TokenId> prompt, DecodeParams params) {
  params.strategy = Strategy::energy;
  return decode(source, prompt, params);
}

}  // namespace egd
