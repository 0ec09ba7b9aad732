#pragma once

// Test-only reference implementations. None of these share code paths with
// the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sembridge/retrieval.hpp"

namespace oracle {

/// alpha-entmax by exhaustive grid search over the threshold followed by
/// repeated local grid refinement. Valid for alpha > 1.
inline std::vector<double> entmax_grid(const std::vector<double>& s, double alpha) {
  const double am1 = alpha - 1.0;
  std::vector<double> z(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = am1 * s[i];
  const double zmax = *std::max_element(z.begin(), z.end());
  auto mass = [&](double tau) {
    double f = 0.0;
    for (double v : z) f += v > tau ? std::pow(v - tau, 1.0 / am1) : 0.0;
    return f;
  };
  double lo = zmax - 1.0;
  double hi = zmax;
  double best = lo;
  constexpr int grid = 500;
  for (int round = 0; round < 8; ++round) {
    double best_err = INFINITY;
    const double step = (hi - lo) / grid;
    for (int g = 0; g <= grid; ++g) {
      const double tau = lo + step * g;
      const double err = std::abs(mass(tau) - 1.0);
      if (err < best_err) {
        best_err = err;
        best = tau;
      }
    }
    lo = best - step;
    hi = best + step;
  }
  std::vector<double> p(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p[i] = z[i] > best ? std::pow(z[i] - best, 1.0 / am1) : 0.0;
  return p;
}

/// Brute-force ranking: score every document, order by (score desc, id asc).
inline std::vector<sembridge::SearchHit> brute_force_search(const std::vector<sembridge::SparseVector>& docs,
                                                            const sembridge::SparseVector& query, std::size_t k) {
  std::vector<sembridge::SearchHit> all;
  for (const auto& d : docs) {
    double score = 0.0;
    bool shared = false;
    for (auto [qt, qw] : query.entries) {
      for (auto [dt, dw] : d.entries) {
        if (qt == dt) {
          score += static_cast<double>(qw) * static_cast<double>(dw);
          shared = true;
        }
      }
    }
    if (shared) all.push_back({d.id, score});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

inline std::vector<double> uniform_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

inline sembridge::SparseVector random_sparse(std::mt19937_64& gen, const std::string& id, std::size_t vocab,
                                             std::size_t max_terms) {
  std::uniform_int_distribution<std::size_t> nterms(1, max_terms);
  std::uniform_int_distribution<std::uint32_t> term(0, static_cast<std::uint32_t>(vocab - 1));
  // Coarse weights make exact score ties common.
  std::uniform_int_distribution<int> weight(1, 8);
  sembridge::SparseVector v{id, {}};
  const std::size_t n = nterms(gen);
  for (std::size_t i = 0; i < n; ++i) v.entries.emplace_back(term(gen), 0.25f * static_cast<float>(weight(gen)));
  v.canonicalize();
  return v;
}

}  // namespace oracle
