#pragma once

// Low-rank (D) and group low-rank (D_g) decomposition of a weight matrix.
//
// Grouping splits the *columns* of the output-major weight matrix W (m x n,
// n = c_in*kh*kw) into g contiguous spans and compresses each span on its own
// with a rank-k truncated SVD. Because every group gets its own optimal
// factors, the grouped residual never exceeds the whole-matrix residual at the
// same k (see theorem1_check).

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "imclr/error.hpp"
#include "imclr/matrix.hpp"
#include "imclr/svd.hpp"

namespace imclr {

struct ColumnSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t width() const noexcept { return end - begin; }
  friend bool operator==(const ColumnSpan&, const ColumnSpan&) = default;
};

struct LowRankPair {
  Matrix l;  // m x k
  Matrix r;  // k x n
  std::size_t rank = 0;
};

struct LowRankGroup {
  Matrix l;  // m x k
  Matrix r;  // k x width
  ColumnSpan span;
};

struct GroupedLowRank {
  std::vector<LowRankGroup> groups;
  std::size_t rank = 0;
  std::size_t rows = 0;  // m
  std::size_t cols = 0;  // n
  std::size_t group_count() const noexcept { return groups.size(); }
};

struct ErrorReport {
  double epsilon = 0.0;
  double epsilon_g = 0.0;
  bool inequality_holds = false;
};

/// Near-equal contiguous spans covering [0, n); widths differ by at most one
/// and the earlier spans take the remainder.
inline std::vector<ColumnSpan> group_spans(std::size_t n, std::size_t g) {
  if (g < 1 || g > n) {
    throw RangeError("group count " + std::to_string(g) + " outside [1, " + std::to_string(n) +
                     "]");
  }
  std::vector<ColumnSpan> spans;
  spans.reserve(g);
  const std::size_t base = n / g;
  const std::size_t extra = n % g;
  std::size_t at = 0;
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t w = base + (i < extra ? 1 : 0);
    spans.push_back({at, at + w});
    at += w;
  }
  return spans;
}

/// Throws RankError unless 1 <= k <= min(m, width) for every group.
inline void check_group_rank(std::size_t m, std::size_t n, std::size_t k, std::size_t g) {
  const auto spans = group_spans(n, g);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const std::size_t limit = std::min(m, spans[i].width());
    if (k < 1 || k > limit) {
      throw RankError("rank " + std::to_string(k) + " invalid for group " + std::to_string(i) +
                      " (" + Matrix::shape_string(m, spans[i].width()) + ", max rank " +
                      std::to_string(limit) + ")");
    }
  }
}

inline bool group_rank_feasible(std::size_t m, std::size_t n, std::size_t k, std::size_t g) {
  if (g < 1 || g > n || k < 1) return false;
  return k <= std::min(m, n / g);  // the narrowest span has floor(n/g) columns
}

inline LowRankPair decompose(const Matrix& w, std::size_t k) {
  const std::size_t limit = std::min(w.rows(), w.cols());
  if (k < 1 || k > limit) {
    throw RankError("rank " + std::to_string(k) + " outside [1, " + std::to_string(limit) +
                    "] for " + w.shape() + " matrix");
  }
  auto [l, r] = truncate(svd(w), k);
  return {std::move(l), std::move(r), k};
}

/// Rank-k factors from an SVD that has already been computed.
inline LowRankPair decompose(const SvdResult& s, std::size_t k) {
  auto [l, r] = truncate(s, k);
  return {std::move(l), std::move(r), k};
}

/// Per-group SVDs, computed once and reused for every rank.
struct GroupSvd {
  std::vector<SvdResult> svds;
  std::vector<ColumnSpan> spans;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

inline GroupSvd group_svd(const Matrix& w, std::size_t g) {
  GroupSvd gs{{}, group_spans(w.cols(), g), w.rows(), w.cols()};
  gs.svds.reserve(g);
  for (const auto& span : gs.spans) gs.svds.push_back(svd(submatrix(w, span.begin, span.end)));
  return gs;
}

inline GroupedLowRank group_decompose(const GroupSvd& gs, std::size_t k) {
  check_group_rank(gs.rows, gs.cols, k, gs.spans.size());
  GroupedLowRank out{{}, k, gs.rows, gs.cols};
  out.groups.reserve(gs.spans.size());
  for (std::size_t i = 0; i < gs.spans.size(); ++i) {
    auto [l, r] = truncate(gs.svds[i], k);
    out.groups.push_back({std::move(l), std::move(r), gs.spans[i]});
  }
  return out;
}

inline GroupedLowRank group_decompose(const Matrix& w, std::size_t k, std::size_t g) {
  check_group_rank(w.rows(), w.cols(), k, g);
  return group_decompose(group_svd(w, g), k);
}

inline Matrix reconstruct(const LowRankPair& d) { return matmul(d.l, d.r); }

inline Matrix reconstruct(const GroupedLowRank& d) {
  Matrix out(d.rows, d.cols);
  for (const auto& grp : d.groups) {
    const Matrix part = matmul(grp.l, grp.r);
    for (std::size_t i = 0; i < part.rows(); ++i)
      std::copy(part.row(i).begin(), part.row(i).end(), out.row(i).begin() + grp.span.begin);
  }
  return out;
}

inline std::size_t parameter_count(const LowRankPair& d) {
  return d.rank * (d.l.rows() + d.r.cols());
}

inline std::size_t parameter_count(const GroupedLowRank& d) {
  return d.group_count() * d.rows * d.rank + d.rank * d.cols;
}

inline bool within_theorem1_bound(double epsilon, double epsilon_g) {
  return epsilon_g <= epsilon + 1e-9 * std::max(1.0, epsilon);
}

/// Both residuals for the same (w, k): whole-matrix rank-k versus g groups of
/// rank k each.
inline ErrorReport theorem1_check(const Matrix& w, std::size_t k, std::size_t g) {
  const LowRankPair whole = decompose(w, k);
  const GroupedLowRank grouped = group_decompose(w, k, g);
  ErrorReport rep;
  rep.epsilon = frobenius_norm(w - reconstruct(whole));
  rep.epsilon_g = frobenius_norm(w - reconstruct(grouped));
  rep.inequality_holds = within_theorem1_bound(rep.epsilon, rep.epsilon_g);
  return rep;
}

/// L_cat = [L_1 ... L_g] (m x g*k).
inline Matrix concatenated_left(const GroupedLowRank& d) {
  std::vector<Matrix> ls;
  ls.reserve(d.groups.size());
  for (const auto& grp : d.groups) ls.push_back(grp.l);
  return hconcat(ls);
}

/// R_bd (g*k x n): R_i placed in rows [i*k, (i+1)*k) over its column span.
inline Matrix block_diagonal_right(const GroupedLowRank& d) {
  Matrix out(d.group_count() * d.rank, d.cols);
  for (std::size_t i = 0; i < d.groups.size(); ++i) {
    const auto& grp = d.groups[i];
    for (std::size_t t = 0; t < d.rank; ++t)
      std::copy(grp.r.row(t).begin(), grp.r.row(t).end(),
                out.row(i * d.rank + t).begin() + grp.span.begin);
  }
  return out;
}

}  // namespace imclr
