#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sembridge/corevec.hpp"
#include "sembridge/error.hpp"
#include "sembridge/parallel.hpp"
#include "sembridge/vocab.hpp"

namespace sembridge {

/// Token ids without a usable bridge vector, per side.
struct MissingTokenSet {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

/// Bridge-space vectors for one vocabulary. Rows are unit-normalized; rows that
/// arrived as all-zero stay zero and are listed in missing().
class BridgeEmbeddings {
 public:
  BridgeEmbeddings() = default;

  BridgeEmbeddings(Vocabulary vocab, EmbeddingMatrix matrix) : vocab_(std::move(vocab)), matrix_(std::move(matrix)) {
    if (matrix_.rows() != vocab_.size()) {
      fail(ErrorKind::alignment, "bridge matrix has " + std::to_string(matrix_.rows()) + " rows but vocabulary has " +
                                     std::to_string(vocab_.size()) + " tokens");
    }
    for (std::size_t r = 0; r < matrix_.rows(); ++r) {
      if (squared_norm(matrix_.row(r)) == 0.0) {
        missing_.push_back(static_cast<TokenId>(r));
      } else {
        normalize_row_in_place(matrix_.row(r));
      }
    }
    present_.assign(matrix_.rows(), true);
    for (auto id : missing_) present_[id] = false;
  }

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const EmbeddingMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return matrix_.cols(); }
  std::size_t size() const noexcept { return matrix_.rows(); }
  bool normalized() const noexcept { return true; }

  const std::vector<TokenId>& missing() const noexcept { return missing_; }
  bool has_vector(TokenId id) const { return present_.at(id); }
  std::span<const float> vector(TokenId id) const { return matrix_.row(id); }

 private:
  Vocabulary vocab_;
  EmbeddingMatrix matrix_;
  std::vector<TokenId> missing_;
  std::vector<bool> present_;
};

inline BridgeEmbeddings load_bridge(const std::filesystem::path& vocab_path, const std::filesystem::path& matrix_path) {
  return BridgeEmbeddings(read_vocabulary(vocab_path), read_matrix(matrix_path));
}

/// Cosine similarities of one target token against every source token, in
/// source-id order. The full target x source matrix is never materialized.
struct SimilarityRow {
  TokenId target_id = 0;
  std::vector<double> values;
};

inline SimilarityRow similarity_row(std::span<const float> target_vec, const BridgeEmbeddings& source,
                                    TokenId target_id = 0) {
  if (target_vec.size() != source.dim()) {
    fail(ErrorKind::validation, "bridge dimension mismatch: target " + std::to_string(target_vec.size()) +
                                    " vs source " + std::to_string(source.dim()));
  }
  SimilarityRow out{target_id, std::vector<double>(source.size())};
  for (std::size_t i = 0; i < source.size(); ++i) {
    out.values[i] = std::clamp(dot(target_vec, source.vector(static_cast<TokenId>(i))), -1.0, 1.0);
  }
  return out;
}

/// Emits one SimilarityRow per id in `targets`, in ascending id order. Rows of
/// each chunk are computed concurrently; emission stays sequential.
inline void stream_similarities(const BridgeEmbeddings& target_bridge, std::vector<TokenId> targets,
                                const BridgeEmbeddings& source, std::size_t chunk_rows,
                                const std::function<void(const SimilarityRow&)>& sink, unsigned threads = 1) {
  if (chunk_rows < 1) fail(ErrorKind::config, "chunk_rows must be >= 1");
  std::sort(targets.begin(), targets.end());
  std::vector<SimilarityRow> chunk;
  for (std::size_t begin = 0; begin < targets.size(); begin += chunk_rows) {
    const std::size_t end = std::min(targets.size(), begin + chunk_rows);
    chunk.assign(end - begin, {});
    parallel_for(end - begin, threads, [&](std::size_t k) {
      const TokenId id = targets[begin + k];
      chunk[k] = similarity_row(target_bridge.vector(id), source, id);
    });
    for (const auto& row : chunk) sink(row);
  }
}

}  // namespace sembridge
