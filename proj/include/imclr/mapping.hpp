#pragma once

// Weight mappings onto crossbar arrays: im2col, shift-and-duplicate-kernel
// (SDK), and the two-stage low-rank SDK mappings.
//
// Orientation. The algebra below works on output-major ("math") matrices
// whose rows are output channels. Arrays store the transpose: inputs drive
// rows (wordlines), outputs accumulate on columns (bitlines). Every builder
// returning a MappedMatrix has already transposed to the physical layout.
//
// SDK as a linear map of W (m x n):
//
//   SDK(W) = blockdiag(W, ..., W) * [P_1^T; ...; P_N^T]        (N*m x b)
//
// where P_s (b x n) places kernel element j at PW element f_s(j) for the s-th
// shifted duplicate. Note that the product has N*m rows; an "N*n x b" shape
// for SDK(W) does not compose with the block product and is not used here.
//
// With W = L R the block product factors as (I_N ⊗ L) * SDK(R), which is what
// sdk_lowrank_map lays out as two array stages.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imclr/array_config.hpp"
#include "imclr/conv.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/error.hpp"
#include "imclr/matrix.hpp"

namespace imclr {

enum class MappingKind { im2col, sdk, lowrank_stage_r, lowrank_stage_l };

inline const char* to_string(MappingKind k) {
  switch (k) {
    case MappingKind::im2col: return "im2col";
    case MappingKind::sdk: return "sdk";
    case MappingKind::lowrank_stage_r: return "lowrank-stage-R";
    case MappingKind::lowrank_stage_l: return "lowrank-stage-L";
  }
  return "?";
}

/// Binary mask of array cells written by a mapping (stored zeros included).
class Occupancy {
 public:
  Occupancy() = default;
  Occupancy(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool operator()(std::size_t i, std::size_t j) const noexcept { return bits_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j) noexcept { bits_[i * cols_ + j] = 1; }

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  double fraction() const noexcept {
    return bits_.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(bits_.size());
  }

  friend bool operator==(const Occupancy&, const Occupancy&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct MappedMatrix {
  Matrix values;  // physical orientation
  Occupancy occupancy;
  MappingKind kind = MappingKind::im2col;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

/// Two-stage layout of a factored layer: inputs pass through stage_r, its
/// outputs feed stage_l.
struct StagedMapping {
  MappedMatrix stage_r;
  MappedMatrix stage_l;
};

struct PaddingMatrix {
  Matrix matrix;                   // b x n
  std::size_t shift = 1;           // s in [1, N]
  std::vector<std::size_t> f_table;  // kernel index j -> PW index f(j)
};

struct ShiftOffset {
  std::size_t dy = 0;
  std::size_t dx = 0;
};

/// Pixel offset of the s-th duplicate (1-based, row-major over PW offsets).
inline ShiftOffset shift_offset(const ConvLayer& layer, const WindowGeometry& geom, std::size_t s) {
  const std::size_t n_par = geom.parallel_outputs();
  if (s < 1 || s > n_par) {
    throw RangeError("shift index " + std::to_string(s) + " outside [1, " +
                     std::to_string(n_par) + "]");
  }
  return {((s - 1) / geom.po_w) * layer.stride, ((s - 1) % geom.po_w) * layer.stride};
}

/// f_s: kernel-flat index j = c*kh*kw + r*kw + q  ->  PW-flat index.
inline std::vector<std::size_t> padding_index_map(const ConvLayer& layer, const ParallelWindow& pw,
                                                  std::size_t s) {
  const WindowGeometry geom = bind_window(layer, pw);
  const ShiftOffset off = shift_offset(layer, geom, s);
  std::vector<std::size_t> f(layer.n());
  for (std::size_t c = 0; c < layer.c_in; ++c)
    for (std::size_t r = 0; r < layer.kh; ++r)
      for (std::size_t q = 0; q < layer.kw; ++q)
        f[c * layer.kh * layer.kw + r * layer.kw + q] =
            c * pw.h * pw.w + (r + off.dy) * pw.w + (q + off.dx);
  return f;
}

inline PaddingMatrix build_padding_matrix(const ConvLayer& layer, const ParallelWindow& pw,
                                          std::size_t s) {
  const WindowGeometry geom = bind_window(layer, pw);
  PaddingMatrix p{Matrix(geom.b, layer.n()), s, padding_index_map(layer, pw, s)};
  for (std::size_t j = 0; j < p.f_table.size(); ++j) p.matrix(p.f_table[j], j) = 1.0;
  return p;
}

namespace detail {

inline void check_kernel_width(const Matrix& w, const ConvLayer& layer, const char* who) {
  if (w.cols() != layer.n()) {
    throw DimensionError(std::string(who) + ": matrix " + w.shape() + " has " +
                         std::to_string(w.cols()) + " columns, layer kernel length is " +
                         std::to_string(layer.n()));
  }
}

// Math-orientation SDK(w) (N*rows x b) by direct placement. `support`, when
// given, restricts row t of w to the column span support[t]; cells outside it
// are structural zeros and stay unoccupied. The returned occupancy is in math
// orientation as well.
inline std::pair<Matrix, Occupancy> sdk_scatter(const Matrix& w, const ConvLayer& layer,
                                                const ParallelWindow& pw,
                                                const std::vector<ColumnSpan>* support) {
  const WindowGeometry geom = bind_window(layer, pw);
  const std::size_t n_par = geom.parallel_outputs();
  const std::size_t rows = w.rows();
  Matrix out(n_par * rows, geom.b);
  Occupancy occ(n_par * rows, geom.b);
  for (std::size_t s = 1; s <= n_par; ++s) {
    const auto f = padding_index_map(layer, pw, s);
    for (std::size_t t = 0; t < rows; ++t) {
      const std::size_t lo = support ? (*support)[t].begin : 0;
      const std::size_t hi = support ? (*support)[t].end : w.cols();
      const std::size_t dst = (s - 1) * rows + t;
      for (std::size_t j = lo; j < hi; ++j) {
        out(dst, f[j]) = w(t, j);
        occ.set(dst, f[j]);
      }
    }
  }
  return {std::move(out), std::move(occ)};
}

inline Occupancy transpose(const Occupancy& o) {
  Occupancy t(o.cols(), o.rows());
  for (std::size_t i = 0; i < o.rows(); ++i)
    for (std::size_t j = 0; j < o.cols(); ++j)
      if (o(i, j)) t.set(j, i);
  return t;
}

inline std::vector<ColumnSpan> group_row_support(const GroupedLowRank& d) {
  std::vector<ColumnSpan> support;
  support.reserve(d.group_count() * d.rank);
  for (const auto& grp : d.groups)
    for (std::size_t t = 0; t < d.rank; ++t) support.push_back(grp.span);
  return support;
}

}  // namespace detail

/// SDK(w) in math orientation (N*m x b), built by placing each weight at its
/// shifted PW position.
inline Matrix sdk_matrix(const Matrix& w, const ConvLayer& layer, const ParallelWindow& pw) {
  detail::check_kernel_width(w, layer, "sdk");
  return detail::sdk_scatter(w, layer, pw, nullptr).first;
}

/// SDK(w) evaluated literally as blockdiag(w, ..., w) * [P_1^T; ...; P_N^T].
/// Quadratic in N*n; intended for cross-checking sdk_matrix on small layers.
inline Matrix sdk_linear_form(const Matrix& w, const ConvLayer& layer, const ParallelWindow& pw) {
  detail::check_kernel_width(w, layer, "sdk");
  const WindowGeometry geom = bind_window(layer, pw);
  const std::size_t n_par = geom.parallel_outputs();
  Matrix stacked = transpose(build_padding_matrix(layer, pw, 1).matrix);
  for (std::size_t s = 2; s <= n_par; ++s)
    stacked = vconcat(stacked, transpose(build_padding_matrix(layer, pw, s).matrix));
  return matmul(kronecker_identity(n_par, w), stacked);
}

/// im2col: column o of the physical matrix is kernel o flattened (n x m).
inline MappedMatrix im2col_map(const ConvLayer& layer, const Tensor& weights) {
  const Matrix w = weight_matrix(layer, weights);
  return {transpose(w), Occupancy(layer.n(), layer.m(), true), MappingKind::im2col};
}

/// SDK mapping of an output-major weight matrix; physical shape b x N*m.
/// Cell (i, s*m + o) is occupied iff i lies in the image of f_s.
inline MappedMatrix sdk_map(const Matrix& w_math, const ConvLayer& layer,
                            const ParallelWindow& pw) {
  detail::check_kernel_width(w_math, layer, "sdk_map");
  if (w_math.rows() != layer.m()) {
    throw DimensionError("sdk_map: matrix " + w_math.shape() + " has " +
                         std::to_string(w_math.rows()) + " rows, layer has " +
                         std::to_string(layer.m()) + " output channels");
  }
  auto [math, occ] = detail::sdk_scatter(w_math, layer, pw, nullptr);
  return {transpose(math), detail::transpose(occ), MappingKind::sdk};
}

namespace detail {

inline MappedMatrix stage_l_from(const Matrix& l_math, std::size_t n_par) {
  const std::size_t k = l_math.cols();
  const std::size_t m = l_math.rows();
  MappedMatrix out{transpose(kronecker_identity(n_par, l_math)),
                   Occupancy(n_par * k, n_par * m), MappingKind::lowrank_stage_l};
  for (std::size_t s = 0; s < n_par; ++s)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < m; ++j) out.occupancy.set(s * k + i, s * m + j);
  return out;
}

}  // namespace detail

/// Two-stage SDK layout of W ≈ L R: stage R is SDK(R) (b x N*k physical),
/// stage L is I_N ⊗ L (N*k x N*m physical, block-diagonal occupancy).
inline StagedMapping sdk_lowrank_map(const LowRankPair& pair, const ConvLayer& layer,
                                     const ParallelWindow& pw) {
  if (pair.l.cols() != pair.rank || pair.r.rows() != pair.rank) {
    throw DimensionError("sdk_lowrank_map: factors " + pair.l.shape() + " and " +
                         pair.r.shape() + " disagree with rank " + std::to_string(pair.rank));
  }
  if (pair.l.rows() != layer.m()) {
    throw DimensionError("sdk_lowrank_map: L has " + std::to_string(pair.l.rows()) +
                         " rows, layer has " + std::to_string(layer.m()) + " output channels");
  }
  detail::check_kernel_width(pair.r, layer, "sdk_lowrank_map");
  const WindowGeometry geom = bind_window(layer, pw);
  auto [r_math, r_occ] = detail::sdk_scatter(pair.r, layer, pw, nullptr);
  return {{transpose(r_math), detail::transpose(r_occ), MappingKind::lowrank_stage_r},
          detail::stage_l_from(pair.l, geom.parallel_outputs())};
}

/// Group variant: L_cat = [L_1 .. L_g] and block-diagonal R_bd feed the same
/// two-stage layout. Stage R only occupies the PW rows reached by each
/// group's own column span.
inline StagedMapping group_sdk_lowrank_map(const GroupedLowRank& grouped, const ConvLayer& layer,
                                           const ParallelWindow& pw) {
  if (grouped.rows != layer.m() || grouped.cols != layer.n()) {
    throw DimensionError("group_sdk_lowrank_map: decomposition of " +
                         Matrix::shape_string(grouped.rows, grouped.cols) +
                         " does not match layer " + Matrix::shape_string(layer.m(), layer.n()));
  }
  const WindowGeometry geom = bind_window(layer, pw);
  const Matrix r_bd = block_diagonal_right(grouped);
  const auto support = detail::group_row_support(grouped);
  auto [r_math, r_occ] = detail::sdk_scatter(r_bd, layer, pw, &support);
  return {{transpose(r_math), detail::transpose(r_occ), MappingKind::lowrank_stage_r},
          detail::stage_l_from(concatenated_left(grouped), geom.parallel_outputs())};
}

// Shape-only occupancy builders. They agree cell-for-cell with the masks of
// the value-carrying builders above and are what the cost models use, since
// cycle and energy accounting never look at weight values.

inline Occupancy im2col_occupancy(const ConvLayer& layer) {
  return Occupancy(layer.n(), layer.m(), true);
}

/// Physical stage-R (or plain SDK when groups == 1 and rows_per_group == m)
/// occupancy: `rows_per_group` duplicated rows per group per shift.
inline Occupancy sdk_occupancy(const ConvLayer& layer, const ParallelWindow& pw,
                               std::size_t groups, std::size_t rows_per_group) {
  const WindowGeometry geom = bind_window(layer, pw);
  const auto spans = group_spans(layer.n(), groups);
  const std::size_t n_par = geom.parallel_outputs();
  const std::size_t block = groups * rows_per_group;
  Occupancy occ(geom.b, n_par * block);
  for (std::size_t s = 1; s <= n_par; ++s) {
    const auto f = padding_index_map(layer, pw, s);
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t t = 0; t < rows_per_group; ++t) {
        const std::size_t col = (s - 1) * block + g * rows_per_group + t;
        for (std::size_t j = spans[g].begin; j < spans[g].end; ++j) occ.set(f[j], col);
      }
  }
  return occ;
}

inline Occupancy stage_l_occupancy(std::size_t parallel_outputs, std::size_t inner,
                                   std::size_t m) {
  Occupancy occ(parallel_outputs * inner, parallel_outputs * m);
  for (std::size_t s = 0; s < parallel_outputs; ++s)
    for (std::size_t i = 0; i < inner; ++i)
      for (std::size_t j = 0; j < m; ++j) occ.set(s * inner + i, s * m + j);
  return occ;
}

/// Occupied cells over the ceil-tiled footprint AR*AC*rows*cols.
inline double utilization(const Occupancy& occ, const ArrayConfig& array) {
  const TileGrid grid = tile_grid(occ.rows(), occ.cols(), array);
  return static_cast<double>(occ.count()) /
         static_cast<double>(grid.tiles() * array.rows * array.cols);
}

inline double utilization(const MappedMatrix& mapped, const ArrayConfig& array) {
  return utilization(mapped.occupancy, array);
}

/// Runs an input feature map through physical stages the way the array would:
/// one flattened PW patch per placement, stage outputs chained, then the N*m
/// results scattered back to output pixels. Placements that overhang the
/// output map are evaluated and their out-of-range outputs dropped.
inline Tensor evaluate_mapping(const ConvLayer& layer, const ParallelWindow& pw,
                               const std::vector<const Matrix*>& stages, const Tensor& input) {
  if (stages.empty()) throw DimensionError("evaluate_mapping: no stages");
  const WindowGeometry geom = bind_window(layer, pw);
  const std::size_t n_par = geom.parallel_outputs();
  if (stages.front()->rows() != geom.b) {
    throw DimensionError("evaluate_mapping: first stage has " +
                         std::to_string(stages.front()->rows()) + " rows, PW input is " +
                         std::to_string(geom.b));
  }
  for (std::size_t i = 1; i < stages.size(); ++i)
    if (stages[i]->rows() != stages[i - 1]->cols())
      throw DimensionError("evaluate_mapping: stage " + std::to_string(i) + " shape " +
                           stages[i]->shape() + " does not chain");
  if (stages.back()->cols() != n_par * layer.m()) {
    throw DimensionError("evaluate_mapping: last stage has " +
                         std::to_string(stages.back()->cols()) + " columns, expected " +
                         std::to_string(n_par * layer.m()));
  }

  const std::size_t oh = layer.oh();
  const std::size_t ow = layer.ow();
  Tensor out({layer.c_out, oh, ow});
  std::vector<double> x(geom.b);
  for (std::size_t by = 0; by < ceil_div(oh, geom.po_h); ++by)
    for (std::size_t bx = 0; bx < ceil_div(ow, geom.po_w); ++bx) {
      const long y0 = static_cast<long>(by * geom.po_h * layer.stride) - static_cast<long>(layer.pad);
      const long x0 = static_cast<long>(bx * geom.po_w * layer.stride) - static_cast<long>(layer.pad);
      for (std::size_t c = 0; c < layer.c_in; ++c)
        for (std::size_t r = 0; r < pw.h; ++r)
          for (std::size_t q = 0; q < pw.w; ++q) {
            const long iy = y0 + static_cast<long>(r);
            const long ix = x0 + static_cast<long>(q);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(layer.ih) &&
                                ix < static_cast<long>(layer.iw);
            x[c * pw.h * pw.w + r * pw.w + q] =
                inside ? input(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) : 0.0;
          }
      std::vector<double> v = x;
      for (const Matrix* st : stages) {
        std::vector<double> next(st->cols(), 0.0);
        for (std::size_t i = 0; i < st->rows(); ++i) {
          if (v[i] == 0.0) continue;
          auto row = st->row(i);
          for (std::size_t j = 0; j < st->cols(); ++j) next[j] += v[i] * row[j];
        }
        v = std::move(next);
      }
      for (std::size_t s = 0; s < n_par; ++s) {
        const std::size_t y = by * geom.po_h + s / geom.po_w;
        const std::size_t xx = bx * geom.po_w + s % geom.po_w;
        if (y >= oh || xx >= ow) continue;
        for (std::size_t o = 0; o < layer.m(); ++o) out(o, y, xx) = v[s * layer.m() + o];
      }
    }
  return out;
}

}  // namespace imclr
