#pragma once

// Logit lens: project each layer's last-position hidden state through the
// unembedding head and pick the layer whose logits have minimal energy.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egd/errors.hpp"
#include "egd/numerics.hpp"

namespace egd {

/// Row-major vocab_size x hidden_dim projection matrix.
template <std::floating_point T>
class BasicUnembeddingHead {
 public:
  BasicUnembeddingHead() = default;

  BasicUnembeddingHead(std::size_t vocab_size, std::size_t hidden_dim, std::vector<T> weights)
      : vocab_size_(vocab_size), hidden_dim_(hidden_dim), weights_(std::move(weights)) {
    if (vocab_size_ < 2) throw InvalidArgument("unembedding head: vocab_size must be >= 2");
    if (hidden_dim_ < 1) throw InvalidArgument("unembedding head: hidden_dim must be >= 1");
    if (weights_.size() != vocab_size_ * hidden_dim_) {
      throw InvalidArgument("unembedding head: expected " +
                            std::to_string(vocab_size_ * hidden_dim_) + " weights, got " +
                            std::to_string(weights_.size()));
    }
    for (const T w : weights_) {
      if (!std::isfinite(w)) throw InvalidArgument("unembedding head: non-finite weight");
    }
  }

  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::span<const T> weights() const noexcept { return weights_; }

  std::span<const T> row(std::size_t token) const {
    return std::span<const T>(weights_).subspan(token * hidden_dim_, hidden_dim_);
  }

 private:
  std::size_t vocab_size_ = 0;
  std::size_t hidden_dim_ = 0;
  std::vector<T> weights_;
};

using UnembeddingHead = BasicUnembeddingHead<double>;

/// Hidden states of every eligible layer at the last context position.
/// `hidden[k]` is layer k+1; the embedding output is never included.
/// `layer_offset` is 1 when the producing runtime exposed an embedding output
/// at index 0 that was dropped, so runtime index = k + layer_offset.
template <std::floating_point T>
struct BasicLayerStack {
  std::vector<std::vector<T>> hidden;
  unsigned layer_offset = 0;

  std::size_t num_layers() const noexcept { return hidden.size(); }
};

using LayerStack = BasicLayerStack<double>;

struct LayerSelection {
  std::size_t chosen_index = 0;  // 0-based; layer number is chosen_index + 1
  std::vector<double> energies;
  LogitVector next_token_logits;

  std::size_t chosen_layer() const noexcept { return chosen_index + 1; }
};

template <std::floating_point H, std::floating_point X>
LogitVector project_layer(const BasicUnembeddingHead<H>& head, std::span<const X> hidden) {
  if (hidden.size() != head.hidden_dim()) {
    throw InvalidArgument("project_layer: hidden length " + std::to_string(hidden.size()) +
                          " != head hidden_dim " + std::to_string(head.hidden_dim()));
  }
  LogitVector logits(head.vocab_size());
  for (std::size_t v = 0; v < head.vocab_size(); ++v) {
    const auto row = head.row(v);
    double acc = 0.0;
    for (std::size_t d = 0; d < hidden.size(); ++d) {
      acc += static_cast<double>(row[d]) * static_cast<double>(hidden[d]);
    }
    logits[v] = acc;
  }
  return logits;
}

template <std::floating_point H, std::floating_point X>
LogitVector project_layer(const BasicUnembeddingHead<H>& head, const std::vector<X>& hidden) {
  return project_layer(head, std::span<const X>(hidden));
}

namespace detail {

template <std::floating_point T>
void check_stack(const BasicLayerStack<T>& stack) {
  if (stack.hidden.empty()) throw InvalidArgument("layer stack: no layers");
}

}  // namespace detail

template <std::floating_point H, std::floating_point X>
std::vector<LogitVector> project_stack(const BasicUnembeddingHead<H>& head,
                                       const BasicLayerStack<X>& stack) {
  detail::check_stack(stack);
  std::vector<LogitVector> out;
  out.reserve(stack.num_layers());
  for (const auto& h : stack.hidden) out.push_back(project_layer(head, h));
  return out;
}

inline std::vector<double> energies_of(const std::vector<LogitVector>& layer_logits) {
  std::vector<double> e;
  e.reserve(layer_logits.size());
  for (const auto& logits : layer_logits) e.push_back(energy(logits));
  return e;
}

template <std::floating_point H, std::floating_point X>
std::vector<double> layer_energies(const BasicUnembeddingHead<H>& head,
                                   const BasicLayerStack<X>& stack) {
  return energies_of(project_stack(head, stack));
}

/// Selection over already-projected per-layer logits (also the entry point
/// for traces that store logits instead of hidden states).
inline LayerSelection select_from_logits(std::vector<LogitVector> layer_logits) {
  if (layer_logits.empty()) throw InvalidArgument("select_layer: no layers");
  LayerSelection sel;
  sel.energies = energies_of(layer_logits);
  sel.chosen_index = argmin_tiebreak_high(sel.energies);
  sel.next_token_logits = std::move(layer_logits[sel.chosen_index]);
  return sel;
}

template <std::floating_point H, std::floating_point X>
LayerSelection select_layer(const BasicUnembeddingHead<H>& head,
                            const BasicLayerStack<X>& stack) {
  return select_from_logits(project_stack(head, stack));
}

}  // namespace egd
