#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "xalign/dictionary.hpp"
#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/format.hpp"
#include "xalign/matrix.hpp"
#include "xalign/preprocess.hpp"
#include "xalign/svd.hpp"

namespace xalign {

struct AlignmentMeta {
  PreprocessMode mode = PreprocessMode::None;
  std::size_t anchors = 0;
  std::string source_id;
  std::string target_id;
  // Set when the cross-covariance is rank deficient (smallest singular value
  // below 1e-10 of the largest). W is still orthogonal but not unique.
  bool degenerate_anchors = false;
  std::map<std::string, std::string> extra;
};

// Orthogonal d x d map W taking source vectors x (as columns) to W x in the
// target space.
struct AlignmentMap {
  Matrix w;
  AlignmentMeta meta;

  std::size_t dim() const noexcept { return w.rows(); }
};

inline constexpr double kDegenerateRatio = 1e-10;

// min over orthogonal W of ||W X - Y||_F, with X and Y holding the anchor
// vectors as columns. The minimizer is W = U V^T where U S V^T = SVD(Y X^T).
// Reflections are allowed (no determinant correction).
inline AlignmentMap solve_procrustes(const AnchorMatrices& anchors, const SvdOptions& options = {}) {
  if (anchors.source.rows() != anchors.target.rows() || anchors.source.cols() != anchors.target.cols())
    fail(ErrorKind::DimensionMismatch, "anchor matrices differ in shape");
  if (anchors.count() == 0) fail(ErrorKind::NoAnchorsRetained, "no anchors");

  const std::size_t d = anchors.dim();
  const std::size_t m = anchors.count();
  // cross(i, j) = sum_k Y(i, k) X(j, k) with anchors as columns; here the
  // anchors are rows, so accumulate outer products row by row.
  Matrix cross(d, d);
  for (std::size_t k = 0; k < m; ++k) {
    auto y = anchors.target.row(k);
    auto x = anchors.source.row(k);
    for (std::size_t i = 0; i < d; ++i) {
      const double yi = y[i];
      if (yi == 0.0) continue;
      auto out = cross.row(i);
      for (std::size_t j = 0; j < d; ++j) out[j] += yi * x[j];
    }
  }

  const SvdResult svd = svd_square(cross, options);
  AlignmentMap map;
  map.w = multiply(svd.u, svd.vt);
  map.meta.anchors = m;
  map.meta.degenerate_anchors =
      svd.sigma[0] == 0.0 || svd.sigma[d - 1] < kDegenerateRatio * svd.sigma[0];
  return map;
}

inline Embedding apply_map(const AlignmentMap& map, const Embedding& embedding) {
  if (embedding.dim() != map.dim())
    fail(ErrorKind::DimensionMismatch, "embedding dimension " + std::to_string(embedding.dim()) +
                                           " != map dimension " + std::to_string(map.dim()));
  // Row i of the result is W x_i, i.e. x_i^T W^T.
  return Embedding(embedding.vocab, multiply_transposed(embedding.matrix, map.w));
}

inline std::vector<double> map_vector(const AlignmentMap& map, std::span<const double> x) {
  if (x.size() != map.dim()) fail(ErrorKind::DimensionMismatch, "vector dimension mismatch");
  std::vector<double> out(map.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(map.w.row(i), x);
  return out;
}

// Text persistence:
//   d <d>
//   <d lines of d values, row-major W, shortest round-trip decimal>
//   #meta key=value
inline void write_map(const AlignmentMap& map, std::ostream& out) {
  const std::size_t d = map.dim();
  out << "d " << d << '\n';
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j) out << ' ';
      out << format_exact(map.w(i, j));
    }
    out << '\n';
  }
  out << "#meta mode=" << to_string(map.meta.mode) << '\n';
  out << "#meta anchors=" << map.meta.anchors << '\n';
  out << "#meta source=" << map.meta.source_id << '\n';
  out << "#meta target=" << map.meta.target_id << '\n';
  out << "#meta degenerate_anchors=" << (map.meta.degenerate_anchors ? "true" : "false") << '\n';
  for (const auto& [k, v] : map.meta.extra) out << "#meta " << k << '=' << v << '\n';
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "failed to write alignment map");
}

inline AlignmentMap read_map(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("d ", 0) != 0)
    fail_at(ErrorKind::MalformedMap, 1, "expected header 'd <dim>'");
  const auto d = parse_integer(std::string_view(line).substr(2));
  if (!d || *d <= 0) fail_at(ErrorKind::MalformedMap, 1, "bad dimension in '" + line + "'");
  const auto dim = static_cast<std::size_t>(*d);

  AlignmentMap map;
  map.w = Matrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) fail_at(ErrorKind::MalformedMap, i + 2, "missing matrix row");
    const auto fields = detail::split_spaces(line);
    if (fields.size() != dim) fail_at(ErrorKind::MalformedMap, i + 2, "wrong number of values");
    for (std::size_t j = 0; j < dim; ++j)
      if (parse_double(fields[j], map.w(i, j)) != NumberParse::Ok)
        fail_at(ErrorKind::MalformedMap, i + 2, "bad value '" + std::string(fields[j]) + "'");
  }
  bool saw_mode = false;
  std::size_t line_no = dim + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("#meta ", 0) != 0) fail_at(ErrorKind::MalformedMap, line_no, "unexpected line");
    const std::string kv = line.substr(6);
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail_at(ErrorKind::MalformedMap, line_no, "metadata needs key=value");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "mode") {
      const auto mode = parse_preprocess_mode(value);
      if (!mode) fail_at(ErrorKind::MalformedMap, line_no, "unknown mode '" + value + "'");
      map.meta.mode = *mode;
      saw_mode = true;
    } else if (key == "anchors") {
      const auto n = parse_integer(value);
      if (!n || *n < 0) fail_at(ErrorKind::MalformedMap, line_no, "bad anchor count");
      map.meta.anchors = static_cast<std::size_t>(*n);
    } else if (key == "source") {
      map.meta.source_id = value;
    } else if (key == "target") {
      map.meta.target_id = value;
    } else if (key == "degenerate_anchors") {
      map.meta.degenerate_anchors = value == "true";
    } else {
      map.meta.extra[key] = value;
    }
  }
  if (!saw_mode) fail(ErrorKind::MalformedMap, "alignment map has no '#meta mode=' line");
  return map;
}

inline void save_map(const AlignmentMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path + "' for writing");
  write_map(map, out);
}

inline AlignmentMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot open alignment map '" + path + "'");
  return read_map(in);
}

}  // namespace xalign
