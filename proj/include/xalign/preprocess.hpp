#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/matrix.hpp"

namespace xalign {

enum class PreprocessMode { None, CenterNormalize };

constexpr std::string_view to_string(PreprocessMode mode) noexcept {
  return mode == PreprocessMode::None ? "none" : "center-normalize";
}

inline std::optional<PreprocessMode> parse_preprocess_mode(std::string_view text) {
  if (text == "none") return PreprocessMode::None;
  if (text == "center-normalize" || text == "center_normalize") return PreprocessMode::CenterNormalize;
  return std::nullopt;
}

// Norms below this are treated as zero by l2_normalize.
inline constexpr double kZeroNormThreshold = 1e-12;

// Column means accumulated sequentially with Neumaier compensation so the
// result is independent of any parallel split.
inline std::vector<double> column_means(const Matrix& m) {
  const std::size_t cols = m.cols();
  std::vector<double> sum(cols, 0.0), comp(cols, 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = sum[c] + row[c];
      if (std::abs(sum[c]) >= std::abs(row[c]))
        comp[c] += (sum[c] - t) + row[c];
      else
        comp[c] += (row[c] - t) + sum[c];
      sum[c] = t;
    }
  }
  for (std::size_t c = 0; c < cols; ++c)
    sum[c] = (sum[c] + comp[c]) / static_cast<double>(m.rows());
  return sum;
}

inline Matrix center(const Matrix& m) {
  const auto means = column_means(m);
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < out.cols(); ++c) row[c] -= means[c];
  }
  return out;
}

inline Matrix l2_normalize(const Matrix& m) {
  Matrix out = m;
  std::vector<std::size_t> zero_rows;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = norm2(row);
    if (n < kZeroNormThreshold) {
      zero_rows.push_back(r);
      continue;
    }
    for (double& v : row) v /= n;
  }
  if (!zero_rows.empty()) {
    std::string msg = "zero-norm rows at indices";
    for (std::size_t i = 0; i < zero_rows.size() && i < 10; ++i)
      msg += " " + std::to_string(zero_rows[i]);
    if (zero_rows.size() > 10) msg += " ... (" + std::to_string(zero_rows.size()) + " total)";
    throw Error(ErrorKind::ZeroVectorRow, msg).with_locations(std::move(zero_rows));
  }
  return out;
}

// center_normalize: subtract the per-dimension mean, then scale every row to
// unit length. After this, dot product equals cosine similarity.
inline Embedding apply_mode(const Embedding& embedding, PreprocessMode mode) {
  if (mode == PreprocessMode::None) return embedding;
  try {
    return Embedding(embedding.vocab, l2_normalize(center(embedding.matrix)));
  } catch (Error& e) {
    if (e.kind() != ErrorKind::ZeroVectorRow) throw;
    std::string msg = "rows equal to the column mean:";
    for (std::size_t i = 0; i < e.locations().size() && i < 10; ++i)
      msg += " '" + embedding.vocab[e.locations()[i]] + "'";
    throw Error(ErrorKind::ZeroVectorRow, msg).with_locations(e.locations());
  }
}

}  // namespace xalign
