#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sembridge/error.hpp"

namespace sembridge {

/// A point on the probability simplex stored by its support.
/// Entries are (index, weight) with weight > 0, indices ascending.
struct SparseWeightVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::size_t, double>> entries;

  std::vector<double> to_dense() const {
    std::vector<double> out(dim, 0.0);
    for (auto [i, w] : entries) out[i] = w;
    return out;
  }

  double weight(std::size_t index) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), index,
                               [](const auto& e, std::size_t i) { return e.first < i; });
    return (it != entries.end() && it->first == index) ? it->second : 0.0;
  }

  double total() const {
    double s = 0.0;
    for (auto [i, w] : entries) s += w;
    return s;
  }

  std::size_t support_size() const noexcept { return entries.size(); }

  /// Entries sorted by descending weight (ties: ascending index), truncated to k.
  std::vector<std::pair<std::size_t, double>> top(std::size_t k) const {
    auto sorted = entries;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
  }
};

struct EntmaxConfig {
  double alpha = 4.0;
  double bisection_tol = 1e-9;
  int max_iters = 100;

  void validate() const {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) fail(ErrorKind::config, "entmax alpha must be >= 1");
    if (!(bisection_tol > 0.0)) fail(ErrorKind::config, "entmax bisection_tol must be > 0");
    if (max_iters < 1) fail(ErrorKind::config, "entmax max_iters must be >= 1");
  }
};

namespace detail {

inline void check_finite(std::span<const double> s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) fail(ErrorKind::validation, "non-finite score at index " + std::to_string(i));
  }
}

inline SparseWeightVector from_dense(const std::vector<double>& p) {
  SparseWeightVector out{p.size(), {}};
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out.entries.emplace_back(i, p[i]);
  }
  return out;
}

}  // namespace detail

inline SparseWeightVector softmax(std::span<const double> s) {
  detail::check_finite(s);
  if (s.empty()) return {};
  const double m = *std::max_element(s.begin(), s.end());
  std::vector<double> p(s.size());
  double z = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) z += (p[i] = std::exp(s[i] - m));
  for (auto& x : p) x /= z;
  return detail::from_dense(p);
}

/// Euclidean projection onto the simplex by the sort-and-threshold rule.
inline SparseWeightVector sparsemax(std::span<const double> s) {
  detail::check_finite(s);
  if (s.empty()) return {};
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double support_sum = 0.0;
  std::size_t k = 0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    if (1.0 + static_cast<double>(j + 1) * sorted[j] > prefix) {
      k = j + 1;
      support_sum = prefix;
    }
  }
  const double tau = (support_sum - 1.0) / static_cast<double>(k);
  std::vector<double> p(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p[i] = std::max(s[i] - tau, 0.0);
  return detail::from_dense(p);
}

/// Threshold and residual left by the bisection, for diagnostics.
struct BisectionTrace {
  double tau = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Generic alpha-entmax by bisection on the threshold, for any alpha > 1.
/// Bypasses the closed-form dispatch so alpha=2 can be cross-checked against
/// sparsemax.
inline SparseWeightVector entmax_bisect(std::span<const double> s, const EntmaxConfig& cfg,
                                        BisectionTrace* trace = nullptr) {
  cfg.validate();
  if (cfg.alpha == 1.0) fail(ErrorKind::config, "bisection requires alpha > 1");
  detail::check_finite(s);
  if (s.empty()) return {};

  const double am1 = cfg.alpha - 1.0;
  const double inv = 1.0 / am1;

  // Scaled scores, sorted descending: the mass function then reads a prefix
  // and is evaluated in an order independent of the input permutation.
  std::vector<double> z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = am1 * s[i];
  std::vector<double> zs = z;
  std::sort(zs.begin(), zs.end(), std::greater<>());

  auto mass = [&](double tau) {
    double f = 0.0;
    for (double v : zs) {
      if (v <= tau) break;
      f += std::pow(v - tau, inv);
    }
    return f;
  };

  double lo = zs.front() - 1.0;  // mass(lo) >= 1
  double hi = zs.front();        // mass(hi) == 0
  double tau = lo;
  double residual = mass(lo) - 1.0;
  int iter = 0;
  bool exhausted = false;
  while (std::abs(residual) > cfg.bisection_tol && iter < cfg.max_iters) {
    tau = 0.5 * (lo + hi);
    if (tau <= lo || tau >= hi) {
      // The bracket is down to adjacent doubles. Near a support boundary the
      // mass has unbounded slope for alpha > 2, so the tolerance may not be
      // reachable; lo is the best representable threshold.
      tau = lo;
      residual = mass(lo) - 1.0;
      exhausted = true;
      break;
    }
    const double f = mass(tau);
    residual = f - 1.0;
    if (f >= 1.0) {
      lo = tau;
    } else {
      hi = tau;
    }
    ++iter;
  }
  if (!exhausted && std::abs(residual) > cfg.bisection_tol) {
    fail(ErrorKind::solver, "entmax bisection did not converge after " + std::to_string(iter) +
                                " iterations (residual " + std::to_string(residual) + ")");
  }
  if (trace) *trace = {tau, residual, iter};

  std::vector<double> p(s.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (z[i] > tau) total += (p[i] = std::pow(z[i] - tau, inv));
  }
  for (auto& x : p) x /= total;
  return detail::from_dense(p);
}

/// alpha-entmax: softmax at alpha=1, sparsemax at alpha=2, bisection otherwise.
inline SparseWeightVector entmax(std::span<const double> s, const EntmaxConfig& cfg) {
  cfg.validate();
  if (cfg.alpha == 1.0) return softmax(s);
  if (cfg.alpha == 2.0) return sparsemax(s);
  return entmax_bisect(s, cfg);
}

inline std::vector<std::size_t> support(const SparseWeightVector& p) {
  std::vector<std::size_t> out;
  out.reserve(p.entries.size());
  for (auto [i, w] : p.entries) {
    if (w > 0.0) out.push_back(i);
  }
  return out;
}

}  // namespace sembridge
