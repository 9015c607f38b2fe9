#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "xalign/error.hpp"
#include "xalign/format.hpp"
#include "xalign/matrix.hpp"

namespace xalign {

struct SvdResult {
  Matrix u;                    // d x d, orthogonal
  std::vector<double> sigma;   // non-increasing, non-negative
  Matrix vt;                   // d x d, orthogonal (V transposed)
  std::size_t sweeps = 0;
};

struct SvdOptions {
  double tol = 1e-12;
  std::size_t max_sweeps = 60;
};

inline Matrix reconstruct(const SvdResult& svd) {
  Matrix us = svd.u;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= svd.sigma[c];
  return multiply(us, svd.vt);
}

namespace detail {

// Modified Gram-Schmidt over the rows of `basis` (each row one vector), done
// twice per vector. Rows whose residual collapses are replaced by the first
// standard basis vector that is independent of the rows already fixed.
inline void orthonormalize_rows(Matrix& basis, const std::vector<bool>& trusted) {
  const std::size_t n = basis.rows();
  const std::size_t d = basis.cols();
  std::vector<double> candidate(d);
  std::size_t next_unit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = basis.row(i);
    bool ok = trusted[i];
    if (ok) {
      const double before = norm2(row);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < i; ++k) {
          const double proj = dot(row, basis.row(k));
          for (std::size_t c = 0; c < d; ++c) row[c] -= proj * basis(k, c);
        }
      const double after = norm2(row);
      ok = after > 0.5 * before && after > 0.0;
      if (ok)
        for (double& v : row) v /= after;
    }
    while (!ok) {
      if (next_unit >= d) fail(ErrorKind::NoConvergence, "could not complete orthonormal basis");
      std::fill(candidate.begin(), candidate.end(), 0.0);
      candidate[next_unit++] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < i; ++k) {
          const double proj = dot(candidate, basis.row(k));
          for (std::size_t c = 0; c < d; ++c) candidate[c] -= proj * basis(k, c);
        }
      const double len = norm2(candidate);
      if (len > 0.5) {
        for (std::size_t c = 0; c < d; ++c) row[c] = candidate[c] / len;
        ok = true;
      }
    }
  }
}

}  // namespace detail

// Cyclic one-sided (Hestenes) Jacobi SVD of a square matrix.
//
// Plane rotations are applied to pairs of columns of M until every pair is
// orthogonal to within `tol` (relative to the column norms). The rotated
// columns are U*Sigma; the accumulated rotations are V. Pairs are visited in
// fixed row-cyclic order, so the result is a deterministic function of M.
//
// Sign convention: the largest-magnitude entry of each column of U is
// non-negative (first such entry on ties); V absorbs the flip.
inline SvdResult svd_square(const Matrix& m, const SvdOptions& options = {}) {
  const std::size_t d = m.rows();
  if (d == 0 || m.cols() != d) fail(ErrorKind::DimensionMismatch, "svd_square needs a non-empty square matrix");
  for (double v : m.values())
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteValue, "svd input contains NaN or Inf");

  // Row k of `cols` is column k of the working matrix; row k of `vcols` is
  // column k of V.
  Matrix cols = m.transposed();
  Matrix vcols = Matrix::identity(d);

  std::size_t sweep = 0;
  double residual = 0.0;
  bool converged = d == 1;
  while (!converged) {
    if (sweep == options.max_sweeps)
      fail(ErrorKind::NoConvergence, "Jacobi SVD did not converge in " + std::to_string(sweep) +
                                         " sweeps; residual " + format_exact(residual));
    ++sweep;
    residual = 0.0;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        auto cp = cols.row(p);
        auto cq = cols.row(q);
        const double alpha = dot(cp, cp);
        const double beta = dot(cq, cq);
        const double gamma = dot(cp, cq);
        if (alpha == 0.0 || beta == 0.0) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, off);
        if (off <= options.tol) continue;
        rotated = true;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < d; ++i) {
          const double a = cp[i];
          const double b = cq[i];
          cp[i] = c * a - s * b;
          cq[i] = s * a + c * b;
        }
        auto vp = vcols.row(p);
        auto vq = vcols.row(q);
        for (std::size_t i = 0; i < d; ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    converged = !rotated;
  }

  std::vector<double> norms(d);
  for (std::size_t k = 0; k < d; ++k) norms[k] = norm2(cols.row(k));

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double largest = norms[order[0]];
  const double negligible = largest * static_cast<double>(d) * 1e-15;

  SvdResult out;
  out.sweeps = sweep;
  out.sigma.resize(d);
  Matrix ucols(d, d);  // row k = column k of U
  Matrix vsorted(d, d);
  std::vector<bool> trusted(d);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t src = order[k];
    out.sigma[k] = norms[src];
    trusted[k] = norms[src] > negligible && norms[src] > 0.0;
    auto dst = ucols.row(k);
    auto from = cols.row(src);
    for (std::size_t i = 0; i < d; ++i) dst[i] = trusted[k] ? from[i] / norms[src] : 0.0;
    std::ranges::copy(vcols.row(src), vsorted.row(k).begin());
  }
  // Columns of tiny singular values carry little accurate direction; clean up
  // U so it is orthogonal to working precision.
  detail::orthonormalize_rows(ucols, trusted);

  for (std::size_t k = 0; k < d; ++k) {
    auto uk = ucols.row(k);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::abs(uk[i]) > std::abs(uk[arg])) arg = i;
    if (uk[arg] < 0.0) {
      for (double& v : uk) v = -v;
      for (double& v : vsorted.row(k)) v = -v;
    }
  }

  out.u = ucols.transposed();
  out.vt = std::move(vsorted);
  return out;
}

}  // namespace xalign
