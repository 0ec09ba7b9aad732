#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sembridge/bridge.hpp"
#include "sembridge/corevec.hpp"
#include "sembridge/error.hpp"
#include "sembridge/retrieval.hpp"
#include "sembridge/rng.hpp"
#include "sembridge/transplant.hpp"
#include "sembridge/vocab.hpp"

namespace sembridge::synth {

struct SyntheticLanguageSpec {
  std::size_t n_source = 2000;
  std::size_t n_target = 500;
  double overlap_fraction = 0.1;
  std::size_t bridge_dim = 32;
  std::size_t model_dim = 48;
  double noise_sigma = 0.05;
  std::size_t docs = 500;
  std::size_t queries = 100;
  std::size_t doc_len = 32;
  std::size_t query_len = 6;
  double aligned_token_rate = 0.5;  // share of doc tokens drawn from source tokens that have a target twin
  std::uint64_t seed = 42;

  void validate() const {
    if (n_target > n_source) fail(ErrorKind::config, "n_target must not exceed n_source");
    if (n_source < 1 || n_target < 1) fail(ErrorKind::config, "vocabulary sizes must be >= 1");
    if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) fail(ErrorKind::config, "overlap_fraction must be in [0, 1]");
    if (bridge_dim < 2 || model_dim < 2) fail(ErrorKind::config, "dims must be >= 2");
    if (!(noise_sigma >= 0.0)) fail(ErrorKind::config, "noise_sigma must be >= 0");
    if (docs < 1 || queries < 1 || doc_len < 1 || query_len < 1) fail(ErrorKind::config, "counts must be >= 1");
    if (!(aligned_token_rate >= 0.0 && aligned_token_rate <= 1.0)) {
      fail(ErrorKind::config, "aligned_token_rate must be in [0, 1]");
    }
  }

  friend bool operator==(const SyntheticLanguageSpec&, const SyntheticLanguageSpec&) = default;
};

inline void to_json(nlohmann::json& j, const SyntheticLanguageSpec& s) {
  j = {{"n_source", s.n_source},     {"n_target", s.n_target},   {"overlap_fraction", s.overlap_fraction},
       {"bridge_dim", s.bridge_dim}, {"model_dim", s.model_dim}, {"noise_sigma", s.noise_sigma},
       {"docs", s.docs},             {"queries", s.queries},     {"doc_len", s.doc_len},
       {"query_len", s.query_len},   {"aligned_token_rate", s.aligned_token_rate}, {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, SyntheticLanguageSpec& s) {
  SyntheticLanguageSpec d;
  s.n_source = j.value("n_source", d.n_source);
  s.n_target = j.value("n_target", d.n_target);
  s.overlap_fraction = j.value("overlap_fraction", d.overlap_fraction);
  s.bridge_dim = j.value("bridge_dim", d.bridge_dim);
  s.model_dim = j.value("model_dim", d.model_dim);
  s.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  s.docs = j.value("docs", d.docs);
  s.queries = j.value("queries", d.queries);
  s.doc_len = j.value("doc_len", d.doc_len);
  s.query_len = j.value("query_len", d.query_len);
  s.aligned_token_rate = j.value("aligned_token_rate", d.aligned_token_rate);
  s.seed = j.value("seed", d.seed);
}

/// Target id -> true source counterpart. Injective, total over the target vocabulary.
struct GroundTruthAlignment {
  std::vector<TokenId> counterpart;
  std::vector<bool> is_overlap;
};

struct TokenSequence {
  std::string id;
  std::vector<TokenId> tokens;
};

struct SyntheticWorld {
  SyntheticLanguageSpec spec;
  Vocabulary source_vocab;
  Vocabulary target_vocab;
  EmbeddingMatrix source_emb;
  EmbeddingMatrix source_bridge_raw;
  EmbeddingMatrix target_bridge_raw;
  BridgeEmbeddings bridge_src;
  BridgeEmbeddings bridge_tgt;
  GroundTruthAlignment alignment;
  std::vector<TokenSequence> docs;     // source-language token ids
  std::vector<TokenSequence> queries;  // target-language token ids
  Qrels qrels;
};

namespace detail {

inline std::string padded(char prefix, std::size_t n, std::size_t width) {
  std::string digits = std::to_string(n);
  return std::string(1, prefix) + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

/// Lowercase Latin word of fixed width, unique per id.
inline std::string latin_word(std::size_t id, std::size_t width) {
  std::string s(width, 'a');
  for (std::size_t k = width; k-- > 0;) {
    s[k] = static_cast<char>('a' + id % 26);
    id /= 26;
  }
  return s;
}

inline void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

/// Two Hangul syllables, unique per id below 11172^2.
inline std::string hangul_word(std::size_t id) {
  constexpr std::size_t syllables = 11172;
  std::string s;
  append_utf8(s, static_cast<char32_t>(0xAC00 + (id / syllables) % syllables));
  append_utf8(s, static_cast<char32_t>(0xAC00 + id % syllables));
  return s;
}

inline std::size_t latin_width(std::size_t n) {
  std::size_t w = 1;
  for (std::size_t cap = 26; cap < n; cap *= 26) ++w;
  return w;
}

inline EmbeddingMatrix unit_gaussian_rows(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream) {
  EmbeddingMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < cols; ++c) row[c] = static_cast<float>(rng::normal(seed, stream, r, c));
    normalize_row_in_place(row);
  }
  return m;
}

}  // namespace detail

/// Deterministic world: every draw is keyed by (seed, entity kind, entity id).
inline SyntheticWorld generate_world(const SyntheticLanguageSpec& spec) {
  spec.validate();
  SyntheticWorld w;
  w.spec = spec;
  const std::uint64_t seed = spec.seed;

  const std::size_t width = detail::latin_width(spec.n_source);
  std::vector<std::string> src_tokens(spec.n_source);
  for (std::size_t i = 0; i < spec.n_source; ++i) src_tokens[i] = detail::latin_word(i, width);

  w.source_bridge_raw = detail::unit_gaussian_rows(spec.n_source, spec.bridge_dim, seed, rng::world_source_bridge);
  w.source_emb = detail::unit_gaussian_rows(spec.n_source, spec.model_dim, seed, rng::world_source_embedding);

  // Counterparts: the n_target source ids with the smallest keyed hash.
  std::vector<TokenId> order(spec.n_source);
  std::iota(order.begin(), order.end(), TokenId{0});
  std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    const auto ka = rng::key(seed, rng::world_alignment, a, 0);
    const auto kb = rng::key(seed, rng::world_alignment, b, 0);
    return ka != kb ? ka < kb : a < b;
  });
  const auto n_overlap = static_cast<std::size_t>(std::floor(spec.overlap_fraction * static_cast<double>(spec.n_target)));
  w.alignment.counterpart.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.n_target));
  w.alignment.is_overlap.assign(spec.n_target, false);

  std::vector<std::string> tgt_tokens(spec.n_target);
  w.target_bridge_raw = EmbeddingMatrix(spec.n_target, spec.bridge_dim);
  for (std::size_t t = 0; t < spec.n_target; ++t) {
    const TokenId c = w.alignment.counterpart[t];
    auto row = w.target_bridge_raw.row(t);
    const auto twin = w.source_bridge_raw.row(c);
    if (t < n_overlap) {
      w.alignment.is_overlap[t] = true;
      tgt_tokens[t] = src_tokens[c];
      std::copy(twin.begin(), twin.end(), row.begin());
      continue;
    }
    tgt_tokens[t] = detail::hangul_word(t);
    if (spec.noise_sigma == 0.0) {
      std::copy(twin.begin(), twin.end(), row.begin());
      continue;
    }
    for (std::size_t j = 0; j < spec.bridge_dim; ++j) {
      row[j] = static_cast<float>(twin[j] + spec.noise_sigma * rng::normal(seed, rng::world_target_noise, t, j));
    }
    normalize_row_in_place(row);
  }

  w.source_vocab = Vocabulary(std::move(src_tokens));
  w.target_vocab = Vocabulary(std::move(tgt_tokens));
  w.bridge_src = BridgeEmbeddings(w.source_vocab, w.source_bridge_raw);
  w.bridge_tgt = BridgeEmbeddings(w.target_vocab, w.target_bridge_raw);

  std::vector<std::optional<TokenId>> target_of(spec.n_source);
  for (std::size_t t = 0; t < spec.n_target; ++t) target_of[w.alignment.counterpart[t]] = static_cast<TokenId>(t);

  const std::size_t id_width = std::to_string(std::max(spec.docs, spec.queries)).size();
  w.docs.resize(spec.docs);
  for (std::size_t d = 0; d < spec.docs; ++d) {
    auto& doc = w.docs[d];
    doc.id = detail::padded('d', d, id_width);
    doc.tokens.resize(spec.doc_len);
    for (std::size_t p = 0; p < spec.doc_len; ++p) {
      const bool aligned = rng::uniform(seed, rng::world_doc_tokens, d, p, 3) < spec.aligned_token_rate;
      doc.tokens[p] = aligned ? w.alignment.counterpart[rng::below(spec.n_target, seed, rng::world_doc_tokens, d, p)]
                              : static_cast<TokenId>(rng::below(spec.n_source, seed, rng::world_doc_tokens, d, p));
    }
  }

  // Each query translates a fragment of one originating doc; that doc is the
  // single relevant document.
  w.queries.resize(spec.queries);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    auto& query = w.queries[q];
    query.id = detail::padded('q', q, id_width);
    for (std::uint64_t attempt = 0;; ++attempt) {
      const std::size_t origin = rng::below(spec.docs, seed, rng::world_query, q, attempt);
      std::vector<std::size_t> positions;
      for (std::size_t p = 0; p < spec.doc_len; ++p) {
        if (target_of[w.docs[origin].tokens[p]]) positions.push_back(p);
      }
      if (positions.empty()) {
        if (attempt > 1000) fail(ErrorKind::config, "no document contains a translatable token");
        continue;
      }
      const std::size_t take = std::min(spec.query_len, positions.size());
      for (std::size_t i = 0; i < take; ++i) {  // keyed partial Fisher-Yates
        const std::size_t j = i + rng::below(positions.size() - i, seed, rng::world_query, q, (attempt << 20) + 1 + i);
        std::swap(positions[i], positions[j]);
        query.tokens.push_back(*target_of[w.docs[origin].tokens[positions[i]]]);
      }
      w.qrels[query.id][w.docs[origin].id] = 1;
      break;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// World files

inline void write_sequences(const std::vector<TokenSequence>& seqs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& s : seqs) out << nlohmann::json{{"id", s.id}, {"tokens", s.tokens}}.dump() << '\n';
}

inline std::vector<TokenSequence> read_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<TokenSequence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("tokens").get<std::vector<TokenId>>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, path.string() + ": " + e.what());
    }
  }
  return out;
}

/// File names inside a world directory.
namespace files {
inline constexpr const char* spec = "spec.json";
inline constexpr const char* source_vocab = "source.vocab.jsonl";
inline constexpr const char* source_emb = "source.emb.embm";
inline constexpr const char* source_bridge = "source.bridge.embm";
inline constexpr const char* target_vocab = "target.vocab.jsonl";
inline constexpr const char* target_bridge = "target.bridge.embm";
inline constexpr const char* alignment = "alignment.json";
inline constexpr const char* docs = "docs.tokens.jsonl";
inline constexpr const char* queries = "queries.tokens.jsonl";
inline constexpr const char* qrels = "qrels.txt";
}  // namespace files

inline void write_world(const SyntheticWorld& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / files::spec, std::ios::trunc);
    out << nlohmann::json(w.spec).dump(2) << '\n';
  }
  write_vocabulary(w.source_vocab, dir / files::source_vocab);
  write_vocabulary(w.target_vocab, dir / files::target_vocab);
  write_matrix(w.source_emb, dir / files::source_emb);
  write_matrix(w.source_bridge_raw, dir / files::source_bridge);
  write_matrix(w.target_bridge_raw, dir / files::target_bridge);
  {
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t t = 0; t < w.alignment.counterpart.size(); ++t) {
      pairs.push_back({{"target_id", t}, {"source_id", w.alignment.counterpart[t]}, {"overlap", static_cast<bool>(w.alignment.is_overlap[t])}});
    }
    std::ofstream out(dir / files::alignment, std::ios::trunc);
    out << nlohmann::json{{"alignment", pairs}}.dump() << '\n';
  }
  write_sequences(w.docs, dir / files::docs);
  write_sequences(w.queries, dir / files::queries);
  write_qrels(w.qrels, dir / files::qrels);
}

inline SyntheticWorld read_world(const std::filesystem::path& dir) {
  SyntheticWorld w;
  {
    std::ifstream in(dir / files::spec);
    if (!in) fail(ErrorKind::io, "cannot open " + (dir / files::spec).string());
    try {
      w.spec = nlohmann::json::parse(in).get<SyntheticLanguageSpec>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, std::string("world spec: ") + e.what());
    }
  }
  w.source_vocab = read_vocabulary(dir / files::source_vocab);
  w.target_vocab = read_vocabulary(dir / files::target_vocab);
  w.source_emb = read_matrix(dir / files::source_emb);
  w.source_bridge_raw = read_matrix(dir / files::source_bridge);
  w.target_bridge_raw = read_matrix(dir / files::target_bridge);
  w.bridge_src = BridgeEmbeddings(w.source_vocab, w.source_bridge_raw);
  w.bridge_tgt = BridgeEmbeddings(w.target_vocab, w.target_bridge_raw);
  {
    std::ifstream in(dir / files::alignment);
    if (!in) fail(ErrorKind::io, "cannot open " + (dir / files::alignment).string());
    try {
      auto j = nlohmann::json::parse(in);
      for (const auto& p : j.at("alignment")) {
        w.alignment.counterpart.push_back(p.at("source_id").get<TokenId>());
        w.alignment.is_overlap.push_back(p.at("overlap").get<bool>());
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, std::string("alignment: ") + e.what());
    }
  }
  w.docs = read_sequences(dir / files::docs);
  w.queries = read_sequences(dir / files::queries);
  w.qrels = read_qrels(dir / files::qrels);
  return w;
}

// ---------------------------------------------------------------------------
// Tied-projection encoder

/// Raw score of output dim j: sum over input tokens of max(emb[t] . out[j], 0).
/// Keeps the top_k positive dims (ties to the lower dim).
inline std::vector<SparseVector> tied_projection_encode_all(const std::vector<TokenSequence>& seqs,
                                                            const EmbeddingMatrix& emb, const EmbeddingMatrix& output,
                                                            std::size_t top_k, unsigned threads = 1) {
  if (emb.cols() != output.cols()) {
    fail(ErrorKind::validation, "encoder width mismatch: " + std::to_string(emb.cols()) + " vs " + std::to_string(output.cols()));
  }
  std::vector<TokenId> distinct;
  for (const auto& s : seqs) {
    for (auto t : s.tokens) {
      if (t >= emb.rows()) fail(ErrorKind::validation, "token id " + std::to_string(t) + " outside embedding matrix");
      distinct.push_back(t);
    }
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const std::size_t n_out = output.rows();
  std::vector<std::vector<double>> activation(distinct.size());
  parallel_for(distinct.size(), threads, [&](std::size_t k) {
    auto& a = activation[k];
    a.resize(n_out);
    const auto in = emb.row(distinct[k]);
    for (std::size_t j = 0; j < n_out; ++j) a[j] = std::max(dot(in, output.row(j)), 0.0);
  });
  auto slot = [&](TokenId t) {
    return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), t) - distinct.begin());
  };

  std::vector<SparseVector> out(seqs.size());
  parallel_for(seqs.size(), threads, [&](std::size_t i) {
    std::vector<double> score(n_out, 0.0);
    for (auto t : seqs[i].tokens) {
      const auto& a = activation[slot(t)];
      for (std::size_t j = 0; j < n_out; ++j) score[j] += a[j];
    }
    std::vector<std::uint32_t> dims;
    for (std::size_t j = 0; j < n_out; ++j) {
      if (static_cast<float>(score[j]) > 0.0f) dims.push_back(static_cast<std::uint32_t>(j));
    }
    const std::size_t keep = std::min(top_k, dims.size());
    std::partial_sort(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(keep), dims.end(),
                      [&](auto a, auto b) { return score[a] != score[b] ? score[a] > score[b] : a < b; });
    dims.resize(keep);
    std::sort(dims.begin(), dims.end());
    out[i].id = seqs[i].id;
    for (auto j : dims) out[i].entries.emplace_back(j, static_cast<float>(score[j]));
  });
  return out;
}

inline SparseVector tied_projection_encode(const std::vector<TokenId>& token_ids, const EmbeddingMatrix& emb,
                                           const EmbeddingMatrix& output, std::size_t top_k) {
  return tied_projection_encode_all({TokenSequence{"", token_ids}}, emb, output, top_k).front();
}

// ---------------------------------------------------------------------------
// Alignment quality

/// Fraction of weighted synthesized target tokens whose true counterpart is
/// among their k highest-weight source tokens.
inline double alignment_precision_at_k(const TransplantReport& report, const GroundTruthAlignment& truth, std::size_t k) {
  if (k < 1) fail(ErrorKind::config, "precision cutoff must be >= 1");
  std::size_t considered = 0;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < report.records.size(); ++t) {
    const auto& rec = report.records[t];
    if (rec.kind != ProvenanceKind::synthesized) continue;
    if (!rec.has_weights()) {
      fail(ErrorKind::inapplicable, "strategy \"" + rec.method + "\" records no per-token weights");
    }
    if (rec.weights.size() < std::min(k, rec.support_size)) {
      fail(ErrorKind::inapplicable, "report keeps " + std::to_string(rec.weights.size()) +
                                        " weights per token; precision@" + std::to_string(k) + " needs more");
    }
    ++considered;
    const std::size_t n = std::min(k, rec.weights.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (rec.weights[i].first == truth.counterpart.at(t)) {
        ++hits;
        break;
      }
    }
  }
  if (considered == 0) fail(ErrorKind::inapplicable, "report has no synthesized tokens");
  return static_cast<double>(hits) / static_cast<double>(considered);
}

// ---------------------------------------------------------------------------
// Zero-shot benchmark

struct BenchOptions {
  std::size_t encoder_top_k = 64;
  std::size_t search_depth = 100;
  std::size_t ndcg_k = 10;
  unsigned threads = 1;
};

inline void to_json(nlohmann::json& j, const BenchOptions& o) {
  j = {{"encoder_top_k", o.encoder_top_k}, {"search_depth", o.search_depth}, {"ndcg_k", o.ndcg_k}};
}

struct BenchRow {
  std::string strategy;
  double ndcg = 0.0;
  double flops = 0.0;
  std::optional<double> precision_at_1;
};

struct QueryEvaluation {
  double ndcg = 0.0;
  double flops = 0.0;
  Run run;
  std::vector<SparseVector> query_vectors;
};

/// Encoded source documents, shared by every strategy.
struct EncodedCorpus {
  std::vector<SparseVector> docs;
  InvertedIndex index;
};

inline EncodedCorpus encode_corpus(const SyntheticWorld& w, const BenchOptions& opt) {
  EncodedCorpus c;
  c.docs = tied_projection_encode_all(w.docs, w.source_emb, w.source_emb, opt.encoder_top_k, opt.threads);
  c.index = build_index(c.docs);
  return c;
}

/// Encodes the target-language queries with `target_emb` and scores them.
inline QueryEvaluation evaluate_query_embeddings(const SyntheticWorld& w, const EncodedCorpus& corpus,
                                                 const EmbeddingMatrix& target_emb, const BenchOptions& opt) {
  QueryEvaluation ev;
  ev.query_vectors = tied_projection_encode_all(w.queries, target_emb, w.source_emb, opt.encoder_top_k, opt.threads);
  for (const auto& q : ev.query_vectors) ev.run[q.id] = search(corpus.index, q, opt.search_depth);
  ev.ndcg = ndcg_at_k(ev.run, w.qrels, opt.ndcg_k).mean_ndcg;
  ev.flops = flops_metric(ev.query_vectors, corpus.docs);
  return ev;
}

/// Target embeddings that copy each token's true counterpart row.
inline EmbeddingMatrix oracle_target_embeddings(const SyntheticWorld& w) {
  EmbeddingMatrix out(w.target_vocab.size(), w.source_emb.cols());
  for (std::size_t t = 0; t < out.rows(); ++t) out.set_row(t, w.source_emb.row(w.alignment.counterpart[t]));
  return out;
}

inline std::vector<BenchRow> run_zero_shot_bench(const SyntheticWorld& w, const std::vector<TransplantConfig>& strategies,
                                                 const BenchOptions& opt = {}) {
  const OverlapMap overlap = compute_overlap(w.source_vocab, w.target_vocab, NormalizationPolicy{});
  const EncodedCorpus corpus = encode_corpus(w, opt);
  std::vector<BenchRow> rows;
  for (const auto& cfg : strategies) {
    TransplantConfig c = cfg;
    auto result = transplant(w.source_emb, w.source_vocab, w.target_vocab, overlap, &w.bridge_src, &w.bridge_tgt, c,
                             opt.threads);
    const auto ev = evaluate_query_embeddings(w, corpus, result.embeddings, opt);
    BenchRow row{c.label(), ev.ndcg, ev.flops, std::nullopt};
    if (uses_bridge(c.strategy) && result.report.synthesized > 0) {
      row.precision_at_1 = alignment_precision_at_k(result.report, w.alignment, 1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json bench_json(const std::vector<BenchRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"strategy", r.strategy},
                   {"ndcg_at_10", r.ndcg},
                   {"flops", r.flops},
                   {"precision_at_1", r.precision_at_1 ? nlohmann::json(*r.precision_at_1) : nlohmann::json(nullptr)}});
  }
  return out;
}

inline std::string bench_table(const std::vector<BenchRow>& rows) {
  std::size_t width = std::string("strategy").size();
  for (const auto& r : rows) width = std::max(width, r.strategy.size());
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %10s  %7s\n", static_cast<int>(width), "strategy", "nDCG@10", "FLOPS", "P@1");
  os << buf;
  for (const auto& r : rows) {
    std::string p = r.precision_at_1 ? std::to_string(*r.precision_at_1).substr(0, 6) : "-";
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %10.4f  %7s\n", static_cast<int>(width), r.strategy.c_str(), r.ndcg,
                  r.flops, p.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace sembridge::synth
