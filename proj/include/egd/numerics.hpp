#pragma once

// Reductions over logit vectors. Inputs may be float or double; every
// accumulation runs in double.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "egd/errors.hpp"

namespace egd {

using LogitVector = std::vector<double>;
using ProbVector = std::vector<double>;

namespace detail {

template <std::floating_point T>
void require_finite(std::span<const T> v, const char* op) {
  for (const T x : v) {
    if (!std::isfinite(x)) {
      throw InvalidArgument(std::string(op) + ": non-finite entry");
    }
  }
}

template <std::floating_point T>
double max_of(std::span<const T> v) {
  return static_cast<double>(*std::max_element(v.begin(), v.end()));
}

}  // namespace detail

/// log(sum(exp(v))) with the maximum factored out.
template <std::floating_point T>
double logsumexp(std::span<const T> v) {
  if (v.empty()) throw InvalidArgument("logsumexp: empty input");
  detail::require_finite(v, "logsumexp");
  const double m = detail::max_of(v);
  double sum = 0.0;
  for (const T x : v) sum += std::exp(static_cast<double>(x) - m);
  // sum >= 1 because the maximum contributes exp(0).
  return m + std::log(sum);
}

template <std::floating_point T>
double logsumexp(const std::vector<T>& v) {
  return logsumexp(std::span<const T>(v));
}

/// Energy score: lower means the logits put more total mass on the
/// vocabulary, i.e. the representation looks more in-distribution.
template <std::floating_point T>
double energy(std::span<const T> v) {
  return -logsumexp(v);
}

template <std::floating_point T>
double energy(const std::vector<T>& v) {
  return energy(std::span<const T>(v));
}

template <std::floating_point T>
ProbVector softmax(std::span<const T> v) {
  const double lse = logsumexp(v);
  ProbVector p(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = std::exp(static_cast<double>(v[i]) - lse);
    total += p[i];
  }
  // Rescale so the sum is 1 to the last ulp instead of to rounding error of lse.
  for (double& x : p) x /= total;
  return p;
}

template <std::floating_point T>
ProbVector softmax(const std::vector<T>& v) {
  return softmax(std::span<const T>(v));
}

/// Index of the smallest value; among equal minima the largest index wins.
template <std::floating_point T>
std::size_t argmin_tiebreak_high(std::span<const T> values) {
  if (values.empty()) throw InvalidArgument("argmin_tiebreak_high: empty input");
  detail::require_finite(values, "argmin_tiebreak_high");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[best]) best = i;
  }
  return best;
}

template <std::floating_point T>
std::size_t argmin_tiebreak_high(const std::vector<T>& values) {
  return argmin_tiebreak_high(std::span<const T>(values));
}

/// Index of the largest value; among equal maxima the smallest index wins
/// (the usual token-id convention for greedy decoding).
template <std::floating_point T>
std::size_t argmax(std::span<const T> values) {
  if (values.empty()) throw InvalidArgument("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <std::floating_point T>
std::size_t argmax(const std::vector<T>& values) {
  return argmax(std::span<const T>(values));
}

struct SampleMoments {
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator
};

inline SampleMoments sample_moments(std::span<const double> samples) {
  SampleMoments m;
  const auto n = static_cast<double>(samples.size());
  for (double x : samples) m.mean += x;
  m.mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - m.mean) * (x - m.mean);
  m.stddev = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return m;
}

/// Silverman's rule of thumb, 1.06 * sigma * n^(-1/5).
inline double silverman_bandwidth(std::span<const double> samples) {
  const SampleMoments m = sample_moments(samples);
  return 1.06 * m.stddev * std::pow(static_cast<double>(samples.size()), -0.2);
}

/// Gaussian kernel density estimate of `samples` evaluated at each grid point.
inline std::vector<double> gaussian_kde(std::span<const double> samples,
                                        std::span<const double> grid) {
  if (samples.size() < 2) throw DegenerateInput("gaussian_kde: need at least 2 samples");
  if (grid.empty()) throw InvalidArgument("gaussian_kde: empty grid");
  detail::require_finite(samples, "gaussian_kde");
  detail::require_finite(grid, "gaussian_kde");
  const double h = silverman_bandwidth(samples);
  if (!(h > 0.0)) throw DegenerateInput("gaussian_kde: zero sample variance");

  const double norm = 1.0 / (static_cast<double>(samples.size()) * h *
                             std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> density(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double s : samples) {
      const double z = (grid[g] - s) / h;
      acc += std::exp(-0.5 * z * z);
    }
    density[g] = acc * norm;
  }
  return density;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw InvalidArgument("linspace: need at least 2 points");
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t below = 0;  // samples < lo
  std::size_t above = 0;  // samples > hi

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_lower(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
};

/// Equal-width bins over [lo, hi]; the last bin is closed on the right.
inline Histogram histogram(std::span<const double> samples, std::size_t bins, double lo,
                           double hi) {
  if (bins == 0) throw InvalidArgument("histogram: zero bins");
  if (!(hi > lo)) throw InvalidArgument("histogram: empty range");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0), 0, 0};
  const double width = h.bin_width();
  for (double x : samples) {
    if (x < lo) {
      ++h.below;
    } else if (x > hi) {
      ++h.above;
    } else {
      auto idx = static_cast<std::size_t>((x - lo) / width);
      h.counts[std::min(idx, bins - 1)]++;
    }
  }
  return h;
}

}  // namespace egd
