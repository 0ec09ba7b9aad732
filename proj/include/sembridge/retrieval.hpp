#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sembridge/error.hpp"
#include "sembridge/vocab.hpp"

namespace sembridge {

/// Vocabulary-space term weights. Entries sorted by token id, weights > 0.
struct SparseVector {
  std::string id;
  std::vector<std::pair<TokenId, float>> entries;

  /// Sorts, merges duplicate ids by summation and drops non-positive weights.
  void canonicalize() {
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& b) { return a.first < b.first; });
    std::vector<std::pair<TokenId, float>> merged;
    for (auto [t, w] : entries) {
      if (!merged.empty() && merged.back().first == t) {
        merged.back().second += w;
      } else {
        merged.emplace_back(t, w);
      }
    }
    std::erase_if(merged, [](auto& e) { return !(e.second > 0.0f); });
    entries = std::move(merged);
  }

  void validate(std::size_t vocab_bound = 0) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto [t, w] = entries[i];
      if (!(w > 0.0f) || !std::isfinite(w)) {
        fail(ErrorKind::validation, "vector \"" + id + "\": weight for token " + std::to_string(t) + " must be finite and > 0");
      }
      if (i > 0 && entries[i - 1].first >= t) {
        fail(ErrorKind::validation, "vector \"" + id + "\": token ids must be unique and ascending");
      }
      if (vocab_bound && t >= vocab_bound) {
        fail(ErrorKind::validation, "vector \"" + id + "\": token id " + std::to_string(t) + " out of vocabulary bound");
      }
    }
  }
};

inline double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double acc = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      acc += static_cast<double>(i->second) * static_cast<double>(j->second);
      ++i;
      ++j;
    }
  }
  return acc;
}

struct Posting {
  std::uint32_t doc;  // dense doc number; numbering follows ascending doc id
  float weight;
};

/// Exact term-at-a-time inverted index over sparse document vectors.
class InvertedIndex {
 public:
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }

  const std::vector<Posting>* postings(TokenId token) const {
    auto it = postings_.find(token);
    return it == postings_.end() ? nullptr : &it->second;
  }
  const std::map<TokenId, std::vector<Posting>>& all_postings() const noexcept { return postings_; }

  friend InvertedIndex build_index(std::vector<SparseVector> corpus);

 private:
  std::vector<std::string> doc_ids_;
  std::map<TokenId, std::vector<Posting>> postings_;
};

inline InvertedIndex build_index(std::vector<SparseVector> corpus) {
  std::sort(corpus.begin(), corpus.end(), [](auto& a, auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < corpus.size(); ++i) {
    if (corpus[i].id == corpus[i - 1].id) fail(ErrorKind::validation, "duplicate doc id \"" + corpus[i].id + "\"");
  }
  InvertedIndex index;
  index.doc_ids_.reserve(corpus.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    corpus[d].validate();
    index.doc_ids_.push_back(corpus[d].id);
    for (auto [t, w] : corpus[d].entries) index.postings_[t].push_back({static_cast<std::uint32_t>(d), w});
  }
  return index;
}

struct SearchHit {
  std::string doc_id;
  double score;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// Top-k by sparse dot product; ties by ascending doc id; docs sharing no
/// token with the query are omitted.
inline std::vector<SearchHit> search(const InvertedIndex& index, const SparseVector& query, std::size_t k) {
  if (k < 1) fail(ErrorKind::config, "search k must be >= 1");
  std::vector<double> acc(index.doc_count(), 0.0);
  std::vector<bool> touched(index.doc_count(), false);
  std::vector<std::uint32_t> hits;
  for (auto [t, qw] : query.entries) {
    const auto* list = index.postings(t);
    if (!list) continue;
    for (const auto& p : *list) {
      acc[p.doc] += static_cast<double>(qw) * static_cast<double>(p.weight);
      if (!touched[p.doc]) {
        touched[p.doc] = true;
        hits.push_back(p.doc);
      }
    }
  }
  auto better = [&](std::uint32_t a, std::uint32_t b) { return acc[a] != acc[b] ? acc[a] > acc[b] : a < b; };
  const std::size_t n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);
  std::vector<SearchHit> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({index.doc_id(hits[i]), acc[hits[i]]});
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

/// (query id, doc id) -> graded relevance.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// Ranked doc ids per query id.
using Run = std::map<std::string, std::vector<SearchHit>>;

struct EvalResult {
  std::map<std::string, double> per_query_ndcg;
  double mean_ndcg = 0.0;
  double flops = 0.0;
  std::size_t query_count = 0;
};

/// nDCG@k with gain 2^rel - 1 and discount log2(rank + 1). The query set is the
/// union of run and qrels queries; queries without relevant docs score 0.
inline EvalResult ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  if (k < 1) fail(ErrorKind::config, "nDCG cutoff must be >= 1");
  std::set<std::string> queries;
  for (const auto& [q, _] : run) queries.insert(q);
  for (const auto& [q, _] : qrels) queries.insert(q);

  EvalResult res;
  double total = 0.0;
  for (const auto& q : queries) {
    const auto qr = qrels.find(q);
    std::vector<int> ideal;
    if (qr != qrels.end()) {
      for (const auto& [_, rel] : qr->second) {
        if (rel > 0) ideal.push_back(rel);
      }
    }
    double score = 0.0;
    if (!ideal.empty()) {
      std::sort(ideal.begin(), ideal.end(), std::greater<>());
      double idcg = 0.0;
      for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
      }
      double dcg = 0.0;
      if (auto r = run.find(q); r != run.end()) {
        for (std::size_t i = 0; i < std::min(k, r->second.size()); ++i) {
          auto it = qr->second.find(r->second[i].doc_id);
          const int rel = it == qr->second.end() ? 0 : it->second;
          if (rel > 0) dcg += (std::exp2(rel) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
      }
      score = dcg / idcg;
    }
    res.per_query_ndcg[q] = score;
    total += score;
  }
  res.query_count = queries.size();
  res.mean_ndcg = queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
  return res;
}

/// Expected multiplications per query-document pair:
/// sum_j P(q_j != 0) * P(d_j != 0).
inline double flops_metric(const std::vector<SparseVector>& queries, const std::vector<SparseVector>& docs) {
  if (queries.empty() || docs.empty()) fail(ErrorKind::validation, "FLOPS needs nonempty query and document sets");
  std::unordered_map<TokenId, std::size_t> q_active;
  std::unordered_map<TokenId, std::size_t> d_active;
  for (const auto& q : queries) {
    for (auto [t, w] : q.entries) {
      if (w != 0.0f) ++q_active[t];
    }
  }
  for (const auto& d : docs) {
    for (auto [t, w] : d.entries) {
      if (w != 0.0f) ++d_active[t];
    }
  }
  std::vector<std::pair<TokenId, std::size_t>> ordered(q_active.begin(), q_active.end());
  std::sort(ordered.begin(), ordered.end());
  double flops = 0.0;
  for (auto [t, nq] : ordered) {
    if (auto it = d_active.find(t); it != d_active.end()) {
      flops += (static_cast<double>(nq) / static_cast<double>(queries.size())) *
               (static_cast<double>(it->second) / static_cast<double>(docs.size()));
    }
  }
  return flops;
}

/// sum_j (mean_i |w_ij|)^2 over a batch of vocabulary-space vectors.
inline double flops_regularizer(const std::vector<SparseVector>& batch, std::size_t vocab_size) {
  if (batch.empty()) fail(ErrorKind::validation, "FLOPs regularizer needs a nonempty batch");
  std::vector<double> sums(vocab_size, 0.0);
  for (const auto& v : batch) {
    for (auto [t, w] : v.entries) {
      if (t >= vocab_size) fail(ErrorKind::validation, "token id " + std::to_string(t) + " out of vocabulary bound");
      sums[t] += std::abs(static_cast<double>(w));
    }
  }
  const auto n = static_cast<double>(batch.size());
  double total = 0.0;
  for (double s : sums) total += (s / n) * (s / n);
  return total;
}

/// Mean over i of -log softmax_j(q_i . p_j)[i], in-batch negatives.
inline double infonce_loss(const std::vector<SparseVector>& queries, const std::vector<SparseVector>& positives) {
  if (queries.empty() || queries.size() != positives.size()) {
    fail(ErrorKind::validation, "InfoNCE needs equal-length, nonempty query/positive batches");
  }
  const std::size_t b = queries.size();
  double total = 0.0;
  std::vector<double> s(b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) s[j] = sparse_dot(queries[i], positives[j]);
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - m);
    total += -(s[i] - m - std::log(z));
  }
  return total / static_cast<double>(b);
}

// ---------------------------------------------------------------------------
// File formats

inline SparseVector sparse_vector_from_json(const nlohmann::json& obj) {
  if (!obj.is_object() || !obj.contains("id") || !obj.contains("vector") || !obj["vector"].is_object()) {
    fail(ErrorKind::format, "expected {\"id\": string, \"vector\": {token_id: weight}}");
  }
  SparseVector v;
  v.id = obj["id"].is_string() ? obj["id"].get<std::string>() : obj["id"].dump();
  for (const auto& [key, weight] : obj["vector"].items()) {
    std::size_t pos = 0;
    unsigned long token = 0;
    try {
      token = std::stoul(key, &pos);
    } catch (...) {
      pos = 0;
    }
    if (pos != key.size() || key.empty()) fail(ErrorKind::format, "vector \"" + v.id + "\": bad token id \"" + key + "\"");
    if (!weight.is_number()) fail(ErrorKind::format, "vector \"" + v.id + "\": non-numeric weight");
    v.entries.emplace_back(static_cast<TokenId>(token), weight.get<float>());
  }
  std::sort(v.entries.begin(), v.entries.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::erase_if(v.entries, [](auto& e) { return e.second == 0.0f; });
  v.validate();
  return v;
}

inline std::vector<SparseVector> read_sparse_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<SparseVector> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sparse_vector_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// One JSON object per line. Keys within "vector" follow ascending token id.
inline void write_sparse_vectors(const std::vector<SparseVector>& vectors, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& v : vectors) {
    out << "{\"id\":" << nlohmann::json(v.id).dump() << ",\"vector\":{";
    for (std::size_t i = 0; i < v.entries.size(); ++i) {
      out << (i ? "," : "") << '"' << v.entries[i].first << "\":" << nlohmann::json(v.entries[i].second).dump();
    }
    out << "}}\n";
  }
}

/// Lines "qid 0 docid rel".
inline Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string qid, iter, docid, extra;
    long rel = 0;
    if (!(ss >> qid)) continue;
    if (!(ss >> iter >> docid >> rel) || (ss >> extra)) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": expected \"qid 0 docid rel\"");
    }
    if (rel < 0) fail(ErrorKind::validation, path.string() + ":" + std::to_string(lineno) + ": negative relevance");
    qrels[qid][docid] = static_cast<int>(rel);
  }
  return qrels;
}

inline void write_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& [q, docs] : qrels) {
    for (const auto& [d, rel] : docs) out << q << " 0 " << d << ' ' << rel << '\n';
  }
}

/// Lines "qid Q0 docid rank score runtag", rank starting at 1.
inline void write_run(const Run& run, const std::string& tag, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  char buf[64];
  for (const auto& [q, hits] : run) {
    for (std::size_t i = 0; i < hits.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g", hits[i].score);
      out << q << " Q0 " << hits[i].doc_id << ' ' << (i + 1) << ' ' << buf << ' ' << tag << '\n';
    }
  }
}

inline Run read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::map<std::string, std::vector<std::pair<long, SearchHit>>> staged;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string qid, q0, docid, tag;
    long rank = 0;
    double score = 0.0;
    if (!(ss >> qid)) continue;
    if (!(ss >> q0 >> docid >> rank >> score >> tag)) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": expected \"qid Q0 docid rank score tag\"");
    }
    staged[qid].emplace_back(rank, SearchHit{docid, score});
  }
  Run run;
  for (auto& [q, hits] : staged) {
    std::stable_sort(hits.begin(), hits.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (auto& [_, h] : hits) run[q].push_back(std::move(h));
  }
  return run;
}

}  // namespace sembridge
