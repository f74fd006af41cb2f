#pragma once

// One-sided (Hestenes) Jacobi SVD.
//
// Columns of a working copy of A are rotated pairwise until every pair is
// orthogonal relative to its norms; the column norms are then the singular
// values and the accumulated rotations form V. Wide inputs are handled through
// their transpose so the rotations always act on the shorter dimension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "imclr/error.hpp"
#include "imclr/matrix.hpp"

namespace imclr {

struct SvdResult {
  Matrix u;                   // m x r, orthonormal columns
  std::vector<double> sigma;  // r values, non-increasing
  Matrix vt;                  // r x n, orthonormal rows
};

struct SvdOptions {
  double tolerance = 1e-12;  // max |a_p·a_q| / (|a_p||a_q|) accepted as orthogonal
  std::size_t max_sweeps = 100;
};

namespace detail {

// Column-major scratch so that column rotations touch contiguous memory.
struct ColumnStore {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  double* col(std::size_t j) { return v.data() + j * rows; }
  const double* col(std::size_t j) const { return v.data() + j * rows; }
};

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Jacobi on a tall-or-square matrix (rows >= cols). Returns U (rows x cols),
// sigma (cols), V (cols x cols), unsorted.
struct JacobiOutput {
  ColumnStore u;
  std::vector<double> sigma;
  ColumnStore v;
};

inline JacobiOutput jacobi_tall(const Matrix& a, const SvdOptions& opt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  JacobiOutput out;
  out.u = {m, n, std::vector<double>(m * n)};
  out.v = {n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.u.col(j)[i] = a(i, j);
  for (std::size_t j = 0; j < n; ++j) out.v.col(j)[j] = 1.0;

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = dot(out.u.col(j), out.u.col(j), m);

  std::size_t sweep = 0;
  bool rotated = true;
  while (rotated) {
    if (sweep == opt.max_sweeps) {
      throw ConvergenceError("svd: no convergence after " + std::to_string(sweep) +
                                 " sweeps on " + a.shape() + " input",
                             sweep);
    }
    ++sweep;
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = norms[p];
        const double beta = norms[q];
        if (alpha == 0.0 || beta == 0.0) continue;
        double* cp = out.u.col(p);
        double* cq = out.u.col(q);
        const double gamma = dot(cp, cq, m);
        if (std::abs(gamma) <= opt.tolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = cp[i];
          const double y = cq[i];
          cp[i] = c * x - s * y;
          cq[i] = s * x + c * y;
        }
        double* vp = out.v.col(p);
        double* vq = out.v.col(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
        // Recompute rather than update to keep drift out of the stopping test.
        norms[p] = dot(cp, cp, m);
        norms[q] = dot(cq, cq, m);
      }
    }
  }

  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.sigma[j] = std::sqrt(norms[j]);
  return out;
}

// Replace column j of q (length rows) by a unit vector orthogonal to every
// column in `fixed`. Candidates are the standard basis vectors; the one that
// survives projection best is taken, with two rounds of Gram-Schmidt.
inline void complete_column(ColumnStore& q, std::size_t j, const std::vector<std::size_t>& fixed) {
  const std::size_t m = q.rows;
  std::vector<double> best;
  double best_norm = -1.0;
  std::vector<double> cand(m);
  for (std::size_t e = 0; e < m; ++e) {
    std::fill(cand.begin(), cand.end(), 0.0);
    cand[e] = 1.0;
    for (int round = 0; round < 2; ++round) {
      for (std::size_t f : fixed) {
        const double* qf = q.col(f);
        const double proj = dot(qf, cand.data(), m);
        for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * qf[i];
      }
    }
    const double nrm = std::sqrt(dot(cand.data(), cand.data(), m));
    if (nrm > best_norm + 1e-12) {
      best_norm = nrm;
      best = cand;
      if (nrm > 0.7) break;  // comfortably independent; stop searching
    }
  }
  double* qj = q.col(j);
  for (std::size_t i = 0; i < m; ++i) qj[i] = best[i] / best_norm;
}

}  // namespace detail

/// Full thin SVD: a = u * diag(sigma) * vt with r = min(m, n).
///
/// Sign convention: the largest-magnitude entry of every left singular vector
/// is non-negative (first index wins on ties), so factors are deterministic.
inline SvdResult svd(const Matrix& a, const SvdOptions& opt = {}) {
  if (a.empty()) throw DimensionError("svd: empty input");
  if (!a.all_finite()) throw RangeError("svd: input has non-finite entries");

  const bool wide = a.rows() < a.cols();
  const Matrix work = wide ? transpose(a) : a;
  detail::JacobiOutput jo = detail::jacobi_tall(work, opt);

  const std::size_t rows = work.rows();
  const std::size_t r = work.cols();

  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return jo.sigma[x] > jo.sigma[y]; });

  const double smax = jo.sigma[order.front()];
  const double negligible =
      smax * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, r));

  // Sorted U (of the tall problem) and V.
  detail::ColumnStore uq{rows, r, std::vector<double>(rows * r)};
  detail::ColumnStore vq{r, r, std::vector<double>(r * r)};
  std::vector<double> sigma(r);
  std::vector<std::size_t> good;
  std::vector<std::size_t> deficient;
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t src = order[k];
    sigma[k] = jo.sigma[src];
    std::copy_n(jo.v.col(src), r, vq.col(k));
    if (sigma[k] > negligible && sigma[k] > 0.0) {
      const double inv = 1.0 / sigma[k];
      const double* c = jo.u.col(src);
      double* dst = uq.col(k);
      for (std::size_t i = 0; i < rows; ++i) dst[i] = c[i] * inv;
      good.push_back(k);
    } else {
      deficient.push_back(k);
    }
  }
  for (std::size_t k : deficient) {
    detail::complete_column(uq, k, good);
    good.push_back(k);
  }

  // Tall problem gives work = uq * S * vq^T. For a wide input, a = vq * S * uq^T.
  const detail::ColumnStore& left = wide ? vq : uq;
  const detail::ColumnStore& right = wide ? uq : vq;

  SvdResult res{Matrix(a.rows(), r), std::move(sigma), Matrix(r, a.cols())};
  for (std::size_t k = 0; k < r; ++k) {
    const double* lk = left.col(k);
    const double* rk = right.col(k);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < a.rows(); ++i)
      if (std::abs(lk[i]) > std::abs(lk[arg])) arg = i;
    const double sign = lk[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < a.rows(); ++i) res.u(i, k) = sign * lk[i] + 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) res.vt(k, j) = sign * rk[j] + 0.0;
  }
  return res;
}

/// Rank-k factors of the truncated SVD: l = U_k Σ_k (m x k), r = V_k^T (k x n).
inline std::pair<Matrix, Matrix> truncate(const SvdResult& s, std::size_t k) {
  const std::size_t r = s.sigma.size();
  if (k < 1 || k > r) {
    throw RankError("truncate: rank " + std::to_string(k) + " outside [1, " + std::to_string(r) +
                    "]");
  }
  Matrix l(s.u.rows(), k);
  for (std::size_t i = 0; i < s.u.rows(); ++i)
    for (std::size_t j = 0; j < k; ++j) l(i, j) = s.u(i, j) * s.sigma[j];
  Matrix rt(k, s.vt.cols());
  for (std::size_t i = 0; i < k; ++i)
    std::copy(s.vt.row(i).begin(), s.vt.row(i).end(), rt.row(i).begin());
  return {std::move(l), std::move(rt)};
}

/// sqrt(Σ_{i>k} σ_i²): the optimal rank-k residual by Eckart–Young.
inline double tail_norm(std::span<const double> sigma, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = k; i < sigma.size(); ++i) s += sigma[i] * sigma[i];
  return std::sqrt(s);
}

}  // namespace imclr
