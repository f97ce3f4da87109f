#pragma once

// A tiny deterministic decoder that exposes per-layer last-position hidden
// states. Each layer applies an affine map plus tanh to its input and mixes in
// an exponentially decayed average of the previous layer's states over the
// prefix, so position t only ever sees positions <= t.

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egd/errors.hpp"
#include "egd/logit_lens.hpp"

namespace egd {

using TokenId = std::uint32_t;

inline constexpr TokenId kEosToken = 0;

enum class LayerMode {
  standard,
  copy_final,  // every layer reports the final layer's state
};

struct ToyModelConfig {
  std::size_t num_layers = 4;
  std::size_t hidden_dim = 8;
  std::size_t vocab_size = 16;
  std::size_t context_limit = 64;
  std::uint64_t seed = 0;
  LayerMode mode = LayerMode::standard;
  double prefix_decay = 0.5;

  void validate() const {
    if (num_layers < 1) throw InvalidArgument("toy model: num_layers must be >= 1");
    if (hidden_dim < 2) throw InvalidArgument("toy model: hidden_dim must be >= 2");
    if (vocab_size < 2) throw InvalidArgument("toy model: vocab_size must be >= 2");
    if (context_limit < 4) throw InvalidArgument("toy model: context_limit must be >= 4");
    if (!(prefix_decay >= 0.0 && prefix_decay < 1.0)) {
      throw InvalidArgument("toy model: prefix_decay must be in [0, 1)");
    }
  }
};

struct PromptTokens {
  std::vector<TokenId> visual_tokens;
  std::vector<TokenId> text_tokens;

  std::vector<TokenId> concatenated() const {
    std::vector<TokenId> out(visual_tokens);
    out.insert(out.end(), text_tokens.begin(), text_tokens.end());
    return out;
  }
  std::size_t size() const noexcept { return visual_tokens.size() + text_tokens.size(); }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based uniform in [-1, 1): the value depends only on (seed, stream,
/// index), never on call order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t bits =
      splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace detail

class ToyModel {
 public:
  struct Layer {
    std::vector<double> weight;  // hidden_dim x hidden_dim, row-major
    std::vector<double> bias;
    std::vector<double> mix;  // hidden_dim x hidden_dim, applied to the prefix average
  };

  explicit ToyModel(const ToyModelConfig& config) : config_(config) {
    config_.validate();
    const std::size_t d = config_.hidden_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<double> head(config_.vocab_size * d);
    for (std::size_t i = 0; i < head.size(); ++i) {
      head[i] = 2.0 * scale * detail::counter_uniform(config_.seed, 0, i);
    }
    head_ = UnembeddingHead(config_.vocab_size, d, std::move(head));

    layers_.resize(config_.num_layers);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      Layer& layer = layers_[k];
      const std::uint64_t base = 1 + 3 * k;
      layer.weight.resize(d * d);
      layer.mix.resize(d * d);
      layer.bias.resize(d);
      for (std::size_t i = 0; i < d * d; ++i) {
        layer.weight[i] = 1.5 * scale * detail::counter_uniform(config_.seed, base, i);
        layer.mix[i] = 0.5 * scale * detail::counter_uniform(config_.seed, base + 1, i);
      }
      for (std::size_t i = 0; i < d; ++i) {
        layer.bias[i] = 0.1 * detail::counter_uniform(config_.seed, base + 2, i);
      }
    }
  }

  const ToyModelConfig& config() const noexcept { return config_; }
  const UnembeddingHead& head() const noexcept { return head_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::size_t context_limit() const noexcept { return config_.context_limit; }

  /// FNV-1a over the bit patterns of every parameter.
  std::uint64_t checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix_in = [&h](std::span<const double> values) {
      for (double v : values) {
        h ^= std::bit_cast<std::uint64_t>(v);
        h *= 0x100000001b3ULL;
      }
    };
    mix_in(head_.weights());
    for (const auto& layer : layers_) {
      mix_in(layer.weight);
      mix_in(layer.bias);
      mix_in(layer.mix);
    }
    return h;
  }

  /// Hidden states of all layers at every position: result[k][t].
  std::vector<std::vector<std::vector<double>>> forward_all(std::span<const TokenId> tokens) const {
    check_sequence(tokens);
    const std::size_t d = config_.hidden_dim;
    const std::size_t n = tokens.size();

    std::vector<std::vector<double>> prev(n);
    for (std::size_t t = 0; t < n; ++t) {
      const auto row = head_.row(tokens[t]);
      prev[t].assign(row.begin(), row.end());
    }

    std::vector<std::vector<std::vector<double>>> out;
    out.reserve(layers_.size());
    for (const Layer& layer : layers_) {
      std::vector<std::vector<double>> cur(n, std::vector<double>(d));
      std::vector<double> avg(d, 0.0);
      double weight_sum = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        // Decayed prefix average over positions 0..t of the previous layer.
        weight_sum = config_.prefix_decay * weight_sum + 1.0;
        for (std::size_t i = 0; i < d; ++i) {
          avg[i] = config_.prefix_decay * avg[i] + prev[t][i];
        }
        for (std::size_t i = 0; i < d; ++i) {
          double acc = layer.bias[i];
          for (std::size_t j = 0; j < d; ++j) {
            acc += layer.weight[i * d + j] * prev[t][j];
            acc += layer.mix[i * d + j] * (avg[j] / weight_sum);
          }
          cur[t][i] = std::tanh(acc) + prev[t][i];
        }
      }
      out.push_back(cur);
      prev = std::move(cur);
    }
    return out;
  }

  LayerStack forward_last(std::span<const TokenId> tokens) const {
    auto all = forward_all(tokens);
    LayerStack stack;
    stack.layer_offset = 0;
    stack.hidden.reserve(all.size());
    for (auto& layer : all) stack.hidden.push_back(std::move(layer.back()));
    if (config_.mode == LayerMode::copy_final) {
      for (auto& h : stack.hidden) h = stack.hidden.back();
    }
    return stack;
  }

  LayerStack forward_last(const PromptTokens& prompt) const {
    return forward_last(prompt.concatenated());
  }

 private:
  void check_sequence(std::span<const TokenId> tokens) const {
    if (tokens.empty()) throw InvalidArgument("toy model: empty token sequence");
    if (tokens.size() > config_.context_limit) {
      throw ContextOverflow(tokens.size(), config_.context_limit);
    }
    for (TokenId id : tokens) {
      if (id >= config_.vocab_size) {
        throw InvalidArgument("toy model: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(config_.vocab_size));
      }
    }
  }

  ToyModelConfig config_;
  UnembeddingHead head_;
  std::vector<Layer> layers_;
};

inline ToyModel build_toy_model(const ToyModelConfig& config) { return ToyModel(config); }

}  // namespace egd
