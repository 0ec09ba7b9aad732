#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sembridge/transplant.hpp"

using namespace sembridge;

namespace {

Vocabulary numbered(std::size_t n, const std::string& prefix) {
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < n; ++i) toks.push_back(prefix + std::to_string(i));
  return Vocabulary(toks);
}

EmbeddingMatrix gaussian(std::mt19937_64& gen, std::size_t rows, std::size_t cols, float scale = 1.0f) {
  std::normal_distribution<float> dist(0.0f, scale);
  std::vector<float> data(rows * cols);
  for (auto& x : data) x = dist(gen);
  return EmbeddingMatrix(rows, cols, std::move(data));
}

TransplantConfig config(Strategy s, double alpha = 4.0) {
  TransplantConfig c;
  c.strategy = s;
  c.alpha = alpha;
  return c;
}

/// Random problem: source of n tokens, target of m tokens of which the first
/// `shared` are copies of source tokens 0..shared-1.
struct Problem {
  Vocabulary source_vocab, target_vocab;
  EmbeddingMatrix source_emb;
  BridgeEmbeddings bridge_src, bridge_tgt;
  OverlapMap overlap;

  Problem(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t shared, std::size_t d = 12, std::size_t db = 8) {
    std::mt19937_64 gen(seed);
    source_vocab = numbered(n, "s");
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < m; ++i) toks.push_back(i < shared ? "s" + std::to_string(i) : "t" + std::to_string(i));
    target_vocab = Vocabulary(toks);
    source_emb = gaussian(gen, n, d);
    bridge_src = BridgeEmbeddings(source_vocab, gaussian(gen, n, db));
    bridge_tgt = BridgeEmbeddings(target_vocab, gaussian(gen, m, db));
    overlap = compute_overlap(source_vocab, target_vocab, NormalizationPolicy{});
  }

  TransplantResult run(const TransplantConfig& cfg, unsigned threads = 1) const {
    return transplant(source_emb, source_vocab, target_vocab, overlap, &bridge_src, &bridge_tgt, cfg, threads);
  }
};

double max_row_norm(const EmbeddingMatrix& e) {
  double best = 0.0;
  for (std::size_t r = 0; r < e.rows(); ++r) best = std::max(best, l2_norm(e.row(r)));
  return best;
}

}  // namespace

TEST(Transplant, IdenticalVocabulariesReproduceSourceExactly) {
  std::mt19937_64 gen(1);
  const auto vocab = numbered(20, "w");
  const auto emb = gaussian(gen, 20, 6);
  const auto bridge = BridgeEmbeddings(vocab, gaussian(gen, 20, 4));
  const auto overlap = compute_overlap(vocab, vocab, NormalizationPolicy{});
  const auto result = transplant(emb, vocab, vocab, overlap, &bridge, &bridge, config(Strategy::sembridge));
  EXPECT_EQ(result.embeddings, emb);
  EXPECT_EQ(result.report.synthesized, 0u);
  EXPECT_EQ(result.report.overlap_copied, 20u);
}

TEST(Transplant, MeanStrategyTwoRows) {
  const Vocabulary src({"a", "b"});
  const Vocabulary tgt({"x", "y", "z"});
  const EmbeddingMatrix emb(2, 2, {1, 0, 3, 2});
  const auto overlap = compute_overlap(src, tgt, NormalizationPolicy{});
  const auto result = transplant(emb, src, tgt, overlap, nullptr, nullptr, config(Strategy::mean));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(result.embeddings.at(r, 0), 2.0f);
    EXPECT_EQ(result.embeddings.at(r, 1), 1.0f);
  }
}

TEST(Transplant, AlphaFourOneHotCopiesSourceRow) {
  const Vocabulary src({"a", "b"});
  const Vocabulary tgt({"x"});
  const EmbeddingMatrix emb(2, 3, {0.1f, -0.7f, 2.5f, 9.0f, 9.0f, 9.0f});
  const BridgeEmbeddings bsrc(src, EmbeddingMatrix(2, 2, {1.0f, 0.0f, -0.5f, static_cast<float>(std::sqrt(0.75))}));
  const BridgeEmbeddings btgt(tgt, EmbeddingMatrix(1, 2, {1.0f, 0.0f}));
  const auto overlap = compute_overlap(src, tgt, NormalizationPolicy{});
  const auto result = transplant(emb, src, tgt, overlap, &bsrc, &btgt, config(Strategy::sembridge));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(result.embeddings.at(0, c), emb.at(0, c));
  const auto& rec = result.report.records[0];
  EXPECT_EQ(rec.kind, ProvenanceKind::synthesized);
  EXPECT_EQ(rec.support_size, 1u);
  EXPECT_EQ(rec.weights.at(0).first, 0u);
}

TEST(SembridgeRow, WorkedExamples) {
  const EmbeddingMatrix two(2, 2, {2, 0, 0, 2});
  for (double alpha : {1.0, 2.0, 3.0, 4.0}) {
    EntmaxConfig cfg;
    cfg.alpha = alpha;
    const auto [row, p] = init_sembridge_row(SimilarityRow{0, {0.4, 0.4}}, two, cfg);
    EXPECT_NEAR(row[0], 1.0f, 1e-7);
    EXPECT_NEAR(row[1], 1.0f, 1e-7);
  }

  const EmbeddingMatrix three(3, 2, {4, 0, 0, 8, 100, 100});
  EntmaxConfig sparse;
  sparse.alpha = 2.0;
  const auto [row, p] = init_sembridge_row(SimilarityRow{0, {1.0, 0.5, -0.2}}, three, sparse);
  EXPECT_EQ(p.weight(0), 0.75);
  EXPECT_EQ(p.weight(1), 0.25);
  EXPECT_EQ(p.weight(2), 0.0);
  EXPECT_EQ(row[0], 3.0f);
  EXPECT_EQ(row[1], 2.0f);

  EXPECT_THROW(init_sembridge_row(SimilarityRow{0, {1.0}}, three, sparse), Error);
}

TEST(StatisticalInit, RandomIsDeterministicAndScaled) {
  const std::vector<TokenId> ids{3, 5, 8, 13};
  const auto a = init_random_rows(ids, 64, 99, 0.02);
  const auto b = init_random_rows(ids, 64, 99, 0.02);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_random_rows(ids, 64, 100, 0.02));
  // A row depends on its own id only, not on its position in the batch.
  const std::vector<TokenId> single{8};
  const auto c = init_random_rows(single, 64, 99, 0.02);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(c.at(0, j), a.at(2, j));
  double sq = 0.0;
  for (float v : a.data()) sq += static_cast<double>(v) * v;
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(a.data().size())), 0.02, 0.004);
}

TEST(StatisticalInit, UnivariateMatchesGlobalMoments) {
  std::vector<float> data(200);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = i % 2 ? 2.0f : 0.0f;
  const EmbeddingMatrix src(20, 10, data);
  const auto st = global_stats(src);
  EXPECT_EQ(st.mean[0], 1.0);
  EXPECT_EQ(st.variance[0], 1.0);

  std::vector<TokenId> ids(1000);
  for (TokenId i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto rows = init_univariate_rows(src, ids, 7);
  double mean = 0.0;
  for (float v : rows.data()) mean += v;
  mean /= static_cast<double>(rows.data().size());
  double var = 0.0;
  for (float v : rows.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(rows.data().size() - 1);
  EXPECT_EQ(rows.data().size(), 10000u);
  EXPECT_NEAR(mean, 1.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(StatisticalInit, MultivariateZeroVarianceCollapses) {
  const EmbeddingMatrix src(4, 2, {0, 5, 0, 5, 0, 5, 0, 5});
  const std::vector<TokenId> ids{0, 1, 2, 3, 4, 5};
  const auto rows = init_multivariate_rows(src, ids, 11);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    EXPECT_EQ(rows.at(r, 0), 0.0f);
    EXPECT_EQ(rows.at(r, 1), 5.0f);
  }
}

TEST(StatisticalInit, MultivariateFollowsColumnMoments) {
  std::mt19937_64 gen(12);
  std::vector<float> data;
  std::normal_distribution<float> a(3.0f, 0.5f), b(-1.0f, 2.0f);
  for (int r = 0; r < 500; ++r) {
    data.push_back(a(gen));
    data.push_back(b(gen));
  }
  const EmbeddingMatrix src(500, 2, data);
  const auto st = column_stats(src);
  std::vector<TokenId> ids(20000);
  for (TokenId i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto rows = init_multivariate_rows(src, ids, 5);
  const auto sampled = column_stats(rows);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(sampled.mean[c], st.mean[c], 0.05);
    EXPECT_NEAR(sampled.variance[c] / st.variance[c], 1.0, 0.05);
  }
}

TEST(FocusLike, WorkedExamples) {
  const EmbeddingMatrix src(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  const std::vector<std::size_t> sources{2, 0, 3};

  const auto [copy, p1] = init_focus_like(std::vector<double>{1.0, -0.5, -0.7}, sources, src);
  EXPECT_EQ(copy[0], 5.0f);
  EXPECT_EQ(copy[1], 6.0f);

  const auto [mid, p2] = init_focus_like(std::vector<double>{0.3, 0.3, -0.9}, sources, src);
  EXPECT_NEAR(mid[0], 3.0f, 1e-6);
  EXPECT_NEAR(mid[1], 4.0f, 1e-6);

  const auto [row, p3] = init_focus_like(std::vector<double>{1.0, 0.5, -0.2}, sources, src);
  EXPECT_EQ(p3.weight(2), 0.75);
  EXPECT_EQ(p3.weight(0), 0.25);
  EXPECT_EQ(p3.weight(3), 0.0);

  EXPECT_THROW(init_focus_like(std::vector<double>{}, std::vector<std::size_t>{}, src), Error);
}

TEST(FocusLike, EmptyOverlapIsConfigError) {
  Problem prob(3, 10, 6, 0);
  try {
    prob.run(config(Strategy::focus_like));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(OfaLike, FullRankReconstruction) {
  std::mt19937_64 gen(31);
  const auto src = gaussian(gen, 30, 6);
  const auto f = OfaFactorization::compute(src, 6);
  for (std::size_t j = 0; j < src.rows(); ++j) {
    const auto row = f.project(SparseWeightVector{30, {{j, 1.0}}});
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(row[c], src.at(j, c), 1e-4);
  }
  const auto mid = f.project(SparseWeightVector{30, {{4, 0.5}, {9, 0.5}}});
  for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(mid[c], 0.5f * (src.at(4, c) + src.at(9, c)), 1e-4);
}

TEST(OfaLike, RankOneMatrixIsExact) {
  const std::vector<float> u{1, -2, 0.5f, 3}, v{0.2f, 1, -1};
  std::vector<float> data;
  for (float a : u) {
    for (float b : v) data.push_back(a * b);
  }
  const EmbeddingMatrix src(4, 3, data);
  const auto f = OfaFactorization::compute(src, 1);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto row = f.project(SparseWeightVector{4, {{j, 1.0}}});
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(row[c], src.at(j, c), 1e-5);
  }
  EXPECT_THROW(OfaFactorization::compute(src, 4), Error);
  EXPECT_THROW(OfaFactorization::compute(src, 0), Error);
}

TEST(OfaLike, WeightsAreSoftmaxOverTopK) {
  const SimilarityRow sim{0, {0.1, 0.9, 0.5, 0.9, -0.3}};
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  const auto p = ofa_weights(sim, 2, all);
  EXPECT_EQ(p.support_size(), 2u);
  EXPECT_NEAR(p.weight(1), 0.5, 1e-12);
  EXPECT_NEAR(p.weight(3), 0.5, 1e-12);
  Problem prob(8, 40, 20, 5);
  const auto r = prob.run(config(Strategy::ofa_like));
  EXPECT_EQ(r.report.synthesized, 15u);
  EXPECT_EQ(r.report.support_histogram.at(10), 15u);
}

TEST(TransplantProperties, OverlapRowsBitIdenticalAndCountsPartition) {
  for (auto s : {Strategy::sembridge, Strategy::random, Strategy::mean, Strategy::univariate, Strategy::multivariate,
                 Strategy::focus_like, Strategy::ofa_like}) {
    Problem prob(40, 60, 30, 10);
    const auto r = prob.run(config(s));
    for (auto [t, src] : prob.overlap.pairs()) {
      for (std::size_t c = 0; c < prob.source_emb.cols(); ++c) EXPECT_EQ(r.embeddings.at(t, c), prob.source_emb.at(src, c));
    }
    EXPECT_EQ(r.report.overlap_copied + r.report.synthesized + r.report.fallback, prob.target_vocab.size());
    EXPECT_EQ(r.report.overlap_copied, 10u);
  }
}

TEST(TransplantProperties, SembridgeRowsAreConvexCombinations) {
  for (double alpha : {1.0, 1.5, 2.0, 4.0}) {
    Problem prob(50 + static_cast<std::uint64_t>(alpha * 10), 80, 40, 5);
    auto cfg = config(Strategy::sembridge, alpha);
    cfg.report_top_k = 0;
    const auto r = prob.run(cfg);
    const double bound = max_row_norm(prob.source_emb) + 1e-6;
    for (auto t : prob.overlap.remaining()) {
      EXPECT_LE(l2_norm(r.embeddings.row(t)), bound);
      const auto& rec = r.report.records[t];
      std::vector<double> rebuilt(prob.source_emb.cols(), 0.0);
      double total = 0.0;
      for (auto [s, w] : rec.weights) {
        EXPECT_GT(w, 0.0);
        total += w;
        for (std::size_t c = 0; c < rebuilt.size(); ++c) rebuilt[c] += w * prob.source_emb.at(s, c);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
      for (std::size_t c = 0; c < rebuilt.size(); ++c) EXPECT_NEAR(rebuilt[c], r.embeddings.at(t, c), 1e-6);
      if (alpha == 1.0) {
        EXPECT_EQ(rec.support_size, prob.source_vocab.size());
      }
    }
  }
}

TEST(TransplantProperties, DeterministicAcrossThreadCounts) {
  Problem prob(60, 100, 50, 10);
  for (auto s : {Strategy::sembridge, Strategy::random, Strategy::multivariate, Strategy::focus_like, Strategy::ofa_like}) {
    const auto one = prob.run(config(s), 1);
    const auto again = prob.run(config(s), 1);
    const auto many = prob.run(config(s), 7);
    EXPECT_EQ(one.embeddings, again.embeddings);
    EXPECT_EQ(one.embeddings, many.embeddings);
    EXPECT_EQ(report_json(one.report).dump(), report_json(many.report).dump());
  }
}

TEST(TransplantProperties, HigherAlphaGivesSmallerMedianSupport) {
  Problem prob(70, 300, 100, 0);
  auto median_support = [&](double alpha) {
    const auto r = prob.run(config(Strategy::sembridge, alpha));
    std::vector<std::size_t> sizes;
    for (const auto& rec : r.report.records) sizes.push_back(rec.support_size);
    std::nth_element(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(sizes.size() / 2), sizes.end());
    return sizes[sizes.size() / 2];
  };
  EXPECT_LT(median_support(4.0), median_support(2.0));
}

TEST(Transplant, MissingTargetBridgeUsesFallback) {
  const Vocabulary src({"a", "b"});
  const Vocabulary tgt({"x", "y"});
  const EmbeddingMatrix emb(2, 2, {1, 0, 3, 2});
  const BridgeEmbeddings bsrc(src, EmbeddingMatrix(2, 2, {1, 0, 0, 1}));
  const BridgeEmbeddings btgt(tgt, EmbeddingMatrix(2, 2, {0, 0, 0, 1}));
  const auto overlap = compute_overlap(src, tgt, NormalizationPolicy{});

  const auto r = transplant(emb, src, tgt, overlap, &bsrc, &btgt, config(Strategy::sembridge));
  EXPECT_EQ(r.report.fallback, 1u);
  EXPECT_EQ(r.report.records[0].kind, ProvenanceKind::fallback);
  EXPECT_EQ(r.embeddings.at(0, 0), 2.0f);
  EXPECT_EQ(r.embeddings.at(0, 1), 1.0f);
  EXPECT_EQ(r.embeddings.at(1, 0), 3.0f);

  auto cfg = config(Strategy::sembridge);
  cfg.fallback = Fallback::random;
  const auto rr = transplant(emb, src, tgt, overlap, &bsrc, &btgt, cfg);
  EXPECT_EQ(rr.report.records[0].method, "random");
  EXPECT_LT(l2_norm(rr.embeddings.row(0)), 0.2);
}

TEST(Transplant, ExcludedSourceIdsNeverReceiveWeight) {
  Problem prob(80, 40, 20, 0);
  auto cfg = config(Strategy::sembridge, 1.0);
  cfg.report_top_k = 0;
  cfg.exclude_source_ids = {0, 1, 2};
  const auto r = prob.run(cfg);
  for (const auto& rec : r.report.records) {
    EXPECT_EQ(rec.support_size, 37u);
    for (auto [s, w] : rec.weights) EXPECT_GE(s, 3u);
  }
}

TEST(Transplant, ConfigurationErrors) {
  Problem prob(90, 10, 5, 1);
  try {
    transplant(prob.source_emb, prob.source_vocab, prob.target_vocab, prob.overlap, nullptr, nullptr,
               config(Strategy::sembridge));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_THROW(prob.run(config(Strategy::sembridge, 0.5)), Error);
  auto cfg = config(Strategy::random);
  cfg.sigma_random = 0.0;
  EXPECT_THROW(prob.run(cfg), Error);
  EXPECT_THROW(parse_strategy("nonsense"), Error);
}

TEST(TransplantReport, JsonRoundTrip) {
  Problem prob(100, 30, 15, 4);
  const auto r = prob.run(config(Strategy::sembridge, 2.0));
  const auto j = report_json(r.report);
  EXPECT_FALSE(j.contains("wall_time_ms"));
  const auto back = report_from_json(j);
  EXPECT_EQ(report_json(back).dump(), j.dump());
  EXPECT_EQ(back.records[0].source_id, std::optional<TokenId>(0));
}
