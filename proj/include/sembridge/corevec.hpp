#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sembridge/error.hpp"

namespace sembridge {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

using DenseVector = std::vector<float>;

/// Row-major float32 matrix. Row i holds the embedding of token id i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ * cols_ != data_.size()) {
      fail(ErrorKind::validation, "matrix shape " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                      " does not match " + std::to_string(data_.size()) + " values");
    }
    validate_finite();
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<float> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  float at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<float>& data() const noexcept { return data_; }

  void set_row(std::size_t i, std::span<const float> values) {
    if (values.size() != cols_) {
      fail(ErrorKind::validation, "row width " + std::to_string(values.size()) + " != " + std::to_string(cols_));
    }
    std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }

  void validate_finite() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        fail(ErrorKind::validation, "non-finite entry at row " + std::to_string(i / cols_) + ", col " +
                                        std::to_string(i % cols_));
      }
    }
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// ---------------------------------------------------------------------------
// Kernels. Accumulation is in double, rounded once by the caller.

inline double dot(std::span<const float> u, std::span<const float> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  return acc;
}

inline double squared_norm(std::span<const float> u) { return dot(u, u); }

inline double l2_norm(std::span<const float> u) { return std::sqrt(squared_norm(u)); }

inline double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    fail(ErrorKind::validation, "cosine dimension mismatch: " + std::to_string(u.size()) + " vs " +
                                    std::to_string(v.size()));
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) fail(ErrorKind::degenerate, "cosine of zero-norm vector");
  // Symmetric by construction: dot and the norm product commute.
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

/// Rows with zero norm, ascending.
inline std::vector<std::size_t> zero_rows(const EmbeddingMatrix& m) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (squared_norm(m.row(r)) == 0.0) out.push_back(r);
  }
  return out;
}

inline void normalize_row_in_place(std::span<float> row) {
  std::span<const float> view(row.data(), row.size());
  const double n = l2_norm(view);
  for (auto& x : row) x = static_cast<float>(static_cast<double>(x) / n);
}

inline EmbeddingMatrix l2_normalize_rows(const EmbeddingMatrix& m) {
  if (auto zeros = zero_rows(m); !zeros.empty()) {
    std::string ids;
    for (std::size_t i = 0; i < zeros.size(); ++i) ids += (i ? "," : "") + std::to_string(zeros[i]);
    fail(ErrorKind::degenerate, "zero-norm rows cannot be normalized: " + ids);
  }
  EmbeddingMatrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) normalize_row_in_place(out.row(r));
  return out;
}

// ---------------------------------------------------------------------------
// EMBM binary format:
//   "EMBM" | u32 version=1 | u64 rows | u64 cols | u8 dtype=0 (f32) | rows*cols f32
// All integers and floats little-endian, no padding.

namespace embm {

inline constexpr char magic[4] = {'E', 'M', 'B', 'M'};
inline constexpr std::uint32_t version = 1;
inline constexpr std::uint8_t dtype_f32 = 0;
inline constexpr std::size_t header_size = 4 + 4 + 8 + 8 + 1;

namespace detail {

template <class T>
char* put_le(char* out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  std::memcpy(out, bits.data(), sizeof(T));
  return out + sizeof(T);
}

template <class T>
T get_le(const char* p) {
  std::array<unsigned char, sizeof(T)> bits;
  std::memcpy(bits.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::vector<char> encode(const EmbeddingMatrix& m) {
  std::vector<char> out(header_size + m.data().size() * 4);
  char* p = out.data();
  std::memcpy(p, magic, 4);
  p = detail::put_le<std::uint32_t>(p + 4, version);
  p = detail::put_le<std::uint64_t>(p, m.rows());
  p = detail::put_le<std::uint64_t>(p, m.cols());
  p = detail::put_le<std::uint8_t>(p, dtype_f32);
  for (float v : m.data()) p = detail::put_le<float>(p, v);
  return out;
}

inline EmbeddingMatrix decode(std::span<const char> bytes) {
  if (bytes.size() < header_size) {
    fail(ErrorKind::format, "truncated EMBM header at byte offset " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) fail(ErrorKind::format, "bad EMBM magic at byte offset 0");
  if (auto v = detail::get_le<std::uint32_t>(bytes.data() + 4); v != version) {
    fail(ErrorKind::format, "unsupported EMBM version " + std::to_string(v) + " at byte offset 4");
  }
  const auto rows = detail::get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = detail::get_le<std::uint64_t>(bytes.data() + 16);
  if (auto dt = static_cast<std::uint8_t>(bytes[24]); dt != dtype_f32) {
    fail(ErrorKind::format, "unsupported EMBM dtype " + std::to_string(dt) + " at byte offset 24");
  }
  if (cols != 0 && rows > (bytes.size() / 4) / cols + 1) {
    fail(ErrorKind::format, "EMBM payload truncated at byte offset " + std::to_string(bytes.size()));
  }
  const std::size_t count = rows * cols;
  const std::size_t expected = header_size + count * 4;
  if (bytes.size() != expected) {
    fail(ErrorKind::format, (bytes.size() < expected ? "EMBM payload truncated at byte offset "
                                                     : "trailing bytes after EMBM payload at byte offset ") +
                                std::to_string(std::min(bytes.size(), expected)));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = detail::get_le<float>(bytes.data() + header_size + i * 4);
  return EmbeddingMatrix(rows, cols, std::move(data));
}

}  // namespace embm

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::io, "short write to " + path.string());
}

inline EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return embm::decode(bytes);
}

inline void write_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  write_file_bytes(path, embm::encode(m));
}

}  // namespace sembridge
