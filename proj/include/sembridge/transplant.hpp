#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sembridge/bridge.hpp"
#include "sembridge/corevec.hpp"
#include "sembridge/entmax.hpp"
#include "sembridge/error.hpp"
#include "sembridge/parallel.hpp"
#include "sembridge/rng.hpp"
#include "sembridge/vocab.hpp"

namespace sembridge {

enum class Strategy { sembridge, random, mean, univariate, multivariate, focus_like, ofa_like };
enum class Fallback { mean, random };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::sembridge: return "sembridge";
    case Strategy::random: return "random";
    case Strategy::mean: return "mean";
    case Strategy::univariate: return "univariate";
    case Strategy::multivariate: return "multivariate";
    case Strategy::focus_like: return "focus_like";
    case Strategy::ofa_like: return "ofa_like";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::sembridge, Strategy::random, Strategy::mean, Strategy::univariate, Strategy::multivariate,
                 Strategy::focus_like, Strategy::ofa_like}) {
    if (to_string(s) == name) return s;
  }
  fail(ErrorKind::config, "unknown strategy \"" + std::string(name) + "\"");
}

inline std::string_view to_string(Fallback f) { return f == Fallback::mean ? "mean" : "random"; }

inline Fallback parse_fallback(std::string_view name) {
  if (name == "mean") return Fallback::mean;
  if (name == "random") return Fallback::random;
  fail(ErrorKind::config, "unknown fallback \"" + std::string(name) + "\"");
}

/// True for strategies whose rows are built from bridge-space similarities.
inline bool uses_bridge(Strategy s) {
  return s == Strategy::sembridge || s == Strategy::focus_like || s == Strategy::ofa_like;
}

struct TransplantConfig {
  Strategy strategy = Strategy::sembridge;
  double alpha = 4.0;
  std::uint64_t seed = 42;
  Fallback fallback = Fallback::mean;
  std::size_t ofa_rank = 0;  // 0: min(d, 100)
  std::size_t ofa_top_k = 10;
  double sigma_random = 0.02;
  std::size_t report_top_k = 8;  // 0: keep every weight
  std::vector<TokenId> exclude_source_ids;
  double bisection_tol = 1e-9;
  int max_iters = 100;

  EntmaxConfig entmax_config() const { return {alpha, bisection_tol, max_iters}; }

  void validate() const {
    if (!(alpha >= 1.0)) fail(ErrorKind::config, "alpha must be >= 1");
    if (!(sigma_random > 0.0)) fail(ErrorKind::config, "sigma_random must be > 0");
    if (ofa_top_k < 1) fail(ErrorKind::config, "ofa_top_k must be >= 1");
    entmax_config().validate();
  }

  std::string label() const {
    if (strategy == Strategy::sembridge) {
      std::string a = nlohmann::json(alpha).dump();
      return "sembridge(alpha=" + a + ")";
    }
    return std::string(to_string(strategy));
  }
};

inline void to_json(nlohmann::json& j, const TransplantConfig& c) {
  j = {{"strategy", to_string(c.strategy)},
       {"alpha", c.alpha},
       {"seed", c.seed},
       {"fallback", to_string(c.fallback)},
       {"ofa_rank", c.ofa_rank},
       {"ofa_top_k", c.ofa_top_k},
       {"sigma_random", c.sigma_random},
       {"report_top_k", c.report_top_k},
       {"exclude_source_ids", c.exclude_source_ids},
       {"bisection_tol", c.bisection_tol},
       {"max_iters", c.max_iters}};
}

inline void from_json(const nlohmann::json& j, TransplantConfig& c) {
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.alpha = j.value("alpha", 4.0);
  c.seed = j.value("seed", std::uint64_t{42});
  c.fallback = parse_fallback(j.value("fallback", std::string("mean")));
  c.ofa_rank = j.value("ofa_rank", std::size_t{0});
  c.ofa_top_k = j.value("ofa_top_k", std::size_t{10});
  c.sigma_random = j.value("sigma_random", 0.02);
  c.report_top_k = j.value("report_top_k", std::size_t{8});
  c.exclude_source_ids = j.value("exclude_source_ids", std::vector<TokenId>{});
  c.bisection_tol = j.value("bisection_tol", 1e-9);
  c.max_iters = j.value("max_iters", 100);
}

// ---------------------------------------------------------------------------
// Report

enum class ProvenanceKind { copied, synthesized, fallback };

struct ProvenanceRecord {
  ProvenanceKind kind = ProvenanceKind::synthesized;
  std::string method;                                // strategy or fallback name
  std::optional<TokenId> source_id;                  // copied rows
  std::size_t support_size = 0;                      // weighted rows
  std::vector<std::pair<TokenId, double>> weights;   // descending weight, possibly truncated

  bool has_weights() const noexcept { return support_size > 0; }
};

struct TransplantReport {
  std::size_t overlap_copied = 0;
  std::size_t synthesized = 0;
  std::size_t fallback = 0;
  std::map<std::size_t, std::size_t> support_histogram;
  std::vector<ProvenanceRecord> records;  // indexed by target id
  TransplantConfig config;
  double wall_time_ms = 0.0;
};

inline std::string_view to_string(ProvenanceKind k) {
  switch (k) {
    case ProvenanceKind::copied: return "copied";
    case ProvenanceKind::synthesized: return "synthesized";
    case ProvenanceKind::fallback: return "fallback";
  }
  return "synthesized";
}

/// Serialized form. Wall time is deliberately absent so reports are
/// byte-identical across runs; it lives in the run manifest instead.
inline nlohmann::json report_json(const TransplantReport& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (auto [size, count] : r.support_histogram) hist.push_back({{"support_size", size}, {"count", count}});
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    const auto& rec = r.records[t];
    nlohmann::json j = {{"target_id", t}, {"kind", to_string(rec.kind)}, {"method", rec.method}};
    if (rec.source_id) j["source_id"] = *rec.source_id;
    if (rec.has_weights()) {
      j["support_size"] = rec.support_size;
      nlohmann::json w = nlohmann::json::array();
      for (auto [id, weight] : rec.weights) w.push_back({id, weight});
      j["weights"] = std::move(w);
    }
    records.push_back(std::move(j));
  }
  return {{"config", r.config},
          {"counts", {{"overlap_copied", r.overlap_copied}, {"synthesized", r.synthesized}, {"fallback", r.fallback}}},
          {"support_histogram", hist},
          {"records", records}};
}

inline TransplantReport report_from_json(const nlohmann::json& j) {
  TransplantReport r;
  try {
    r.config = j.at("config").get<TransplantConfig>();
    r.overlap_copied = j.at("counts").at("overlap_copied").get<std::size_t>();
    r.synthesized = j.at("counts").at("synthesized").get<std::size_t>();
    r.fallback = j.at("counts").at("fallback").get<std::size_t>();
    for (const auto& h : j.at("support_histogram")) {
      r.support_histogram[h.at("support_size").get<std::size_t>()] = h.at("count").get<std::size_t>();
    }
    for (const auto& jr : j.at("records")) {
      ProvenanceRecord rec;
      const auto kind = jr.at("kind").get<std::string>();
      rec.kind = kind == "copied" ? ProvenanceKind::copied
                 : kind == "fallback" ? ProvenanceKind::fallback
                                      : ProvenanceKind::synthesized;
      rec.method = jr.value("method", std::string());
      if (jr.contains("source_id")) rec.source_id = jr["source_id"].get<TokenId>();
      rec.support_size = jr.value("support_size", std::size_t{0});
      if (jr.contains("weights")) {
        for (const auto& w : jr["weights"]) rec.weights.emplace_back(w.at(0).get<TokenId>(), w.at(1).get<double>());
      }
      if (jr.at("target_id").get<std::size_t>() != r.records.size()) {
        fail(ErrorKind::validation, "report records must be in ascending target-id order");
      }
      r.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, std::string("malformed transplant report: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Row initializers

namespace detail {

inline DenseVector weighted_row(const SparseWeightVector& p, const EmbeddingMatrix& source_emb,
                                std::span<const std::size_t> index_to_row = {}) {
  std::vector<double> acc(source_emb.cols(), 0.0);
  for (auto [i, w] : p.entries) {
    const std::size_t r = index_to_row.empty() ? i : index_to_row[i];
    auto row = source_emb.row(r);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += w * static_cast<double>(row[c]);
  }
  return DenseVector(acc.begin(), acc.end());
}

}  // namespace detail

/// Weighted average of source rows under alpha-entmax of the similarities.
/// Only the support contributes.
inline std::pair<DenseVector, SparseWeightVector> init_sembridge_row(const SimilarityRow& sim,
                                                                     const EmbeddingMatrix& source_emb,
                                                                     const EntmaxConfig& cfg) {
  if (sim.values.size() != source_emb.rows()) {
    fail(ErrorKind::validation, "similarity row length " + std::to_string(sim.values.size()) +
                                    " != source rows " + std::to_string(source_emb.rows()));
  }
  SparseWeightVector p = entmax(sim.values, cfg);
  return {detail::weighted_row(p, source_emb), std::move(p)};
}

/// Same, with the candidate pool restricted to `candidates` (ascending source
/// ids). Returned weights are indexed by source id.
inline std::pair<DenseVector, SparseWeightVector> init_sembridge_row(const SimilarityRow& sim,
                                                                     const EmbeddingMatrix& source_emb,
                                                                     const EntmaxConfig& cfg,
                                                                     std::span<const std::size_t> candidates) {
  std::vector<double> sub(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) sub[k] = sim.values.at(candidates[k]);
  SparseWeightVector p = entmax(sub, cfg);
  DenseVector row = detail::weighted_row(p, source_emb, candidates);
  SparseWeightVector mapped{source_emb.rows(), {}};
  for (auto [k, w] : p.entries) mapped.entries.emplace_back(candidates[k], w);
  return {std::move(row), std::move(mapped)};
}

inline EmbeddingMatrix init_random_rows(std::span<const TokenId> ids, std::size_t d, std::uint64_t seed, double sigma,
                                        std::uint64_t stream = rng::random_init) {
  EmbeddingMatrix out(ids.size(), d);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto row = out.row(k);
    for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(sigma * rng::normal(seed, stream, ids[k], j));
  }
  return out;
}

inline DenseVector init_mean_row(const EmbeddingMatrix& source_emb) {
  if (source_emb.empty()) fail(ErrorKind::config, "mean initialization needs a nonempty source matrix");
  std::vector<double> acc(source_emb.cols(), 0.0);
  for (std::size_t r = 0; r < source_emb.rows(); ++r) {
    auto row = source_emb.row(r);
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += row[c];
  }
  DenseVector out(acc.size());
  for (std::size_t c = 0; c < acc.size(); ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(source_emb.rows()));
  return out;
}

/// Global mean and population variance over every entry.
struct GaussianStats {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline GaussianStats global_stats(const EmbeddingMatrix& source_emb) {
  if (source_emb.empty()) fail(ErrorKind::config, "statistical initialization needs a nonempty source matrix");
  const auto& data = source_emb.data();
  double mu = 0.0;
  for (float v : data) mu += v;
  mu /= static_cast<double>(data.size());
  double var = 0.0;
  for (float v : data) var += (v - mu) * (v - mu);
  var /= static_cast<double>(data.size());
  return {{mu}, {var}};
}

inline GaussianStats column_stats(const EmbeddingMatrix& source_emb) {
  if (source_emb.empty()) fail(ErrorKind::config, "statistical initialization needs a nonempty source matrix");
  const std::size_t d = source_emb.cols();
  const auto n = static_cast<double>(source_emb.rows());
  GaussianStats st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < source_emb.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) st.mean[c] += source_emb.at(r, c);
  }
  for (auto& m : st.mean) m /= n;
  for (std::size_t r = 0; r < source_emb.rows(); ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = source_emb.at(r, c) - st.mean[c];
      st.variance[c] += dv * dv;
    }
  }
  for (auto& v : st.variance) v /= n;
  return st;
}

inline EmbeddingMatrix init_univariate_rows(const EmbeddingMatrix& source_emb, std::span<const TokenId> ids,
                                            std::uint64_t seed) {
  const auto st = global_stats(source_emb);
  const double sd = std::sqrt(st.variance[0]);
  EmbeddingMatrix out(ids.size(), source_emb.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto row = out.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<float>(st.mean[0] + sd * rng::normal(seed, rng::univariate_init, ids[k], j));
    }
  }
  return out;
}

inline EmbeddingMatrix init_multivariate_rows(const EmbeddingMatrix& source_emb, std::span<const TokenId> ids,
                                              std::uint64_t seed) {
  const auto st = column_stats(source_emb);
  EmbeddingMatrix out(ids.size(), source_emb.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto row = out.row(k);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<float>(st.mean[j] +
                                  std::sqrt(st.variance[j]) * rng::normal(seed, rng::multivariate_init, ids[k], j));
    }
  }
  return out;
}

/// FOCUS-style row: sparsemax over similarities to the overlapping tokens,
/// combining the source rows those tokens were copied from. `overlap_sources`
/// is aligned with `sim_to_overlap`.
inline std::pair<DenseVector, SparseWeightVector> init_focus_like(std::span<const double> sim_to_overlap,
                                                                  std::span<const std::size_t> overlap_sources,
                                                                  const EmbeddingMatrix& source_emb) {
  if (sim_to_overlap.empty()) fail(ErrorKind::config, "focus_like requires a nonempty overlap set");
  if (sim_to_overlap.size() != overlap_sources.size()) {
    fail(ErrorKind::validation, "focus_like similarity/overlap length mismatch");
  }
  SparseWeightVector p = sparsemax(sim_to_overlap);
  DenseVector row = detail::weighted_row(p, source_emb, overlap_sources);
  std::map<std::size_t, double> merged;
  for (auto [k, w] : p.entries) merged[overlap_sources[k]] += w;
  SparseWeightVector by_source{source_emb.rows(), {merged.begin(), merged.end()}};
  return {std::move(row), std::move(by_source)};
}

/// Truncated SVD E ~ F P with F = U_r S_r (token coordinates) and P = V_r^T
/// (primitive embeddings).
struct OfaFactorization {
  Eigen::MatrixXd coords;      // rows x rank
  Eigen::MatrixXd primitives;  // rank x d

  static OfaFactorization compute(const EmbeddingMatrix& source_emb, std::size_t rank) {
    const auto n = static_cast<Eigen::Index>(source_emb.rows());
    const auto d = static_cast<Eigen::Index>(source_emb.cols());
    if (rank < 1 || static_cast<Eigen::Index>(rank) > d) {
      fail(ErrorKind::config, "ofa rank must be in [1, " + std::to_string(d) + "], got " + std::to_string(rank));
    }
    if (n == 0) fail(ErrorKind::config, "ofa_like needs a nonempty source matrix");
    Eigen::MatrixXd e(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) e(r, c) = source_emb.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) fail(ErrorKind::numeric, "SVD of the source embedding matrix failed");
    const auto r = static_cast<Eigen::Index>(std::min<std::size_t>(rank, static_cast<std::size_t>(svd.singularValues().size())));
    OfaFactorization f;
    f.coords = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
    f.primitives = svd.matrixV().leftCols(r).transpose();
    return f;
  }

  DenseVector project(const SparseWeightVector& w) const {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(coords.cols());
    for (auto [i, weight] : w.entries) c += weight * coords.row(static_cast<Eigen::Index>(i));
    Eigen::RowVectorXd out = c * primitives;
    DenseVector row(static_cast<std::size_t>(out.size()));
    for (Eigen::Index k = 0; k < out.size(); ++k) row[static_cast<std::size_t>(k)] = static_cast<float>(out(k));
    return row;
  }
};

/// Softmax over the top_k largest similarities among `candidates` (ties to the
/// lower id); other weights are zero.
inline SparseWeightVector ofa_weights(const SimilarityRow& sim, std::size_t top_k, std::span<const std::size_t> candidates) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  const std::size_t k = std::min(top_k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return sim.values[a] != sim.values[b] ? sim.values[a] > sim.values[b] : a < b;
                    });
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<double> top(k);
  for (std::size_t i = 0; i < k; ++i) top[i] = sim.values[order[i]];
  SparseWeightVector local = softmax(top);
  SparseWeightVector out{sim.values.size(), {}};
  for (auto [i, w] : local.entries) out.entries.emplace_back(order[i], w);
  return out;
}

inline DenseVector init_ofa_like(const EmbeddingMatrix& source_emb, const SimilarityRow& sim, std::size_t rank,
                                 std::size_t top_k) {
  std::vector<std::size_t> all(source_emb.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return OfaFactorization::compute(source_emb, rank).project(ofa_weights(sim, top_k, all));
}

// ---------------------------------------------------------------------------
// Full transplant

struct TransplantResult {
  EmbeddingMatrix embeddings;
  TransplantReport report;
};

inline TransplantResult transplant(const EmbeddingMatrix& source_emb, const Vocabulary& source_vocab,
                                   const Vocabulary& target_vocab, const OverlapMap& overlap,
                                   const BridgeEmbeddings* bridge_src, const BridgeEmbeddings* bridge_tgt,
                                   const TransplantConfig& cfg, unsigned threads = 1) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (source_emb.rows() != source_vocab.size()) {
    fail(ErrorKind::alignment, "source embeddings have " + std::to_string(source_emb.rows()) +
                                   " rows but source vocabulary has " + std::to_string(source_vocab.size()));
  }
  if (overlap.target_size() != target_vocab.size()) {
    fail(ErrorKind::alignment, "overlap map covers " + std::to_string(overlap.target_size()) +
                                   " target ids but target vocabulary has " + std::to_string(target_vocab.size()));
  }
  for (auto [t, s] : overlap.pairs()) {
    if (s >= source_emb.rows()) fail(ErrorKind::validation, "overlap maps to invalid source id " + std::to_string(s));
  }

  const std::size_t d = source_emb.cols();
  const std::vector<TokenId> remaining = overlap.remaining();
  const bool bridged = uses_bridge(cfg.strategy) && !remaining.empty();

  if (bridged) {
    if (!bridge_src || !bridge_tgt) {
      fail(ErrorKind::config, std::string("strategy ") + std::string(to_string(cfg.strategy)) +
                                  " requires both source and target bridge embeddings");
    }
    if (bridge_src->size() != source_vocab.size() || bridge_tgt->size() != target_vocab.size()) {
      fail(ErrorKind::alignment, "bridge vocabularies do not match the source/target vocabularies");
    }
    if (bridge_src->dim() != bridge_tgt->dim()) {
      fail(ErrorKind::alignment, "bridge dims differ: source " + std::to_string(bridge_src->dim()) + ", target " +
                                     std::to_string(bridge_tgt->dim()));
    }
  }

  // Candidate pool: source ids with a bridge vector, minus the exclusion list.
  std::vector<std::size_t> candidates;
  if (bridged) {
    std::vector<bool> excluded(source_vocab.size(), false);
    for (auto id : cfg.exclude_source_ids) {
      if (id < excluded.size()) excluded[id] = true;
    }
    for (std::size_t s = 0; s < source_vocab.size(); ++s) {
      if (!excluded[s] && bridge_src->has_vector(static_cast<TokenId>(s))) candidates.push_back(s);
    }
  }

  // FOCUS pool: overlapping target tokens with a target-side bridge vector.
  std::vector<TokenId> focus_targets;
  std::vector<std::size_t> focus_sources;
  if (bridged && cfg.strategy == Strategy::focus_like) {
    for (auto [t, s] : overlap.pairs()) {
      if (bridge_tgt->has_vector(t)) {
        focus_targets.push_back(t);
        focus_sources.push_back(s);
      }
    }
    if (focus_targets.empty()) fail(ErrorKind::config, "focus_like requires at least one overlapping token with a bridge vector");
  }
  if (bridged && cfg.strategy != Strategy::focus_like && candidates.empty()) {
    fail(ErrorKind::config, "no source token has a bridge vector after exclusions");
  }

  std::optional<OfaFactorization> ofa;
  if (bridged && cfg.strategy == Strategy::ofa_like) {
    const std::size_t rank = cfg.ofa_rank == 0 ? std::min<std::size_t>(d, 100) : cfg.ofa_rank;
    ofa = OfaFactorization::compute(source_emb, rank);
  }

  // Rows that need the fallback: remaining tokens whose target bridge vector is missing.
  std::vector<bool> needs_fallback(target_vocab.size(), false);
  if (bridged) {
    for (auto t : remaining) needs_fallback[t] = !bridge_tgt->has_vector(t);
  }
  const bool any_fallback = std::any_of(needs_fallback.begin(), needs_fallback.end(), [](bool b) { return b; });

  std::optional<DenseVector> mean_row;
  if (cfg.strategy == Strategy::mean || (any_fallback && cfg.fallback == Fallback::mean)) {
    if (source_emb.empty()) fail(ErrorKind::config, "mean initialization/fallback needs a nonempty source matrix");
    mean_row = init_mean_row(source_emb);
  }

  TransplantResult result{EmbeddingMatrix(target_vocab.size(), d), {}};
  auto& out = result.embeddings;
  auto& report = result.report;
  report.config = cfg;
  report.records.resize(target_vocab.size());

  for (auto [t, s] : overlap.pairs()) {
    out.set_row(t, source_emb.row(s));
    report.records[t] = {ProvenanceKind::copied, "overlap", s, 0, {}};
  }

  auto record_weights = [&](ProvenanceRecord& rec, const SparseWeightVector& p) {
    rec.support_size = p.support_size();
    const std::size_t keep = cfg.report_top_k == 0 ? p.support_size() : cfg.report_top_k;
    for (auto [i, w] : p.top(keep)) rec.weights.emplace_back(static_cast<TokenId>(i), w);
  };

  const std::string method(to_string(cfg.strategy));

  switch (cfg.strategy) {
    case Strategy::random: {
      auto rows = init_random_rows(remaining, d, cfg.seed, cfg.sigma_random);
      for (std::size_t k = 0; k < remaining.size(); ++k) out.set_row(remaining[k], rows.row(k));
      break;
    }
    case Strategy::mean:
      for (auto t : remaining) out.set_row(t, *mean_row);
      break;
    case Strategy::univariate: {
      auto rows = init_univariate_rows(source_emb, remaining, cfg.seed);
      for (std::size_t k = 0; k < remaining.size(); ++k) out.set_row(remaining[k], rows.row(k));
      break;
    }
    case Strategy::multivariate: {
      auto rows = init_multivariate_rows(source_emb, remaining, cfg.seed);
      for (std::size_t k = 0; k < remaining.size(); ++k) out.set_row(remaining[k], rows.row(k));
      break;
    }
    case Strategy::sembridge:
    case Strategy::focus_like:
    case Strategy::ofa_like: {
      const EntmaxConfig ecfg = cfg.entmax_config();
      parallel_for(remaining.size(), threads, [&](std::size_t k) {
        const TokenId t = remaining[k];
        if (needs_fallback[t]) return;
        auto& rec = report.records[t];
        rec.kind = ProvenanceKind::synthesized;
        rec.method = method;
        const auto target_vec = bridge_tgt->vector(t);
        if (cfg.strategy == Strategy::focus_like) {
          std::vector<double> sims(focus_targets.size());
          for (std::size_t i = 0; i < focus_targets.size(); ++i) {
            sims[i] = std::clamp(dot(target_vec, bridge_tgt->vector(focus_targets[i])), -1.0, 1.0);
          }
          auto [row, p] = init_focus_like(sims, focus_sources, source_emb);
          out.set_row(t, row);
          record_weights(rec, p);
          return;
        }
        const SimilarityRow sim = similarity_row(target_vec, *bridge_src, t);
        if (cfg.strategy == Strategy::sembridge) {
          auto [row, p] = init_sembridge_row(sim, source_emb, ecfg, candidates);
          out.set_row(t, row);
          record_weights(rec, p);
        } else {
          const SparseWeightVector p = ofa_weights(sim, cfg.ofa_top_k, candidates);
          out.set_row(t, ofa->project(p));
          record_weights(rec, p);
        }
      });
      break;
    }
  }

  if (!uses_bridge(cfg.strategy)) {
    for (auto t : remaining) report.records[t] = {ProvenanceKind::synthesized, method, std::nullopt, 0, {}};
  }

  // Fallback rows, keyed by target id like every other random draw.
  std::vector<TokenId> fallback_ids;
  for (auto t : remaining) {
    if (needs_fallback[t]) fallback_ids.push_back(t);
  }
  if (!fallback_ids.empty()) {
    if (cfg.fallback == Fallback::mean) {
      for (auto t : fallback_ids) out.set_row(t, *mean_row);
    } else {
      auto rows = init_random_rows(fallback_ids, d, cfg.seed, cfg.sigma_random, rng::fallback_random);
      for (std::size_t k = 0; k < fallback_ids.size(); ++k) out.set_row(fallback_ids[k], rows.row(k));
    }
    for (auto t : fallback_ids) {
      report.records[t] = {ProvenanceKind::fallback, std::string(to_string(cfg.fallback)), std::nullopt, 0, {}};
    }
  }

  for (const auto& rec : report.records) {
    switch (rec.kind) {
      case ProvenanceKind::copied: ++report.overlap_copied; break;
      case ProvenanceKind::synthesized: ++report.synthesized; break;
      case ProvenanceKind::fallback: ++report.fallback; break;
    }
    if (rec.has_weights()) ++report.support_histogram[rec.support_size];
  }

  out.validate_finite();
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace sembridge
