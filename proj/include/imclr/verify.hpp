#pragma once

// Randomised property campaigns for the two factorisation identities:
//  - grouped residual never exceeds the whole-matrix residual at equal rank;
//  - (I_N ⊗ L) SDK(R) equals SDK(L R) exactly.
// Both are deterministic for a given seed, independent of the job count.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "imclr/conv.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/mapping.hpp"
#include "imclr/matrix.hpp"
#include "imclr/planner.hpp"

namespace imclr {

/// Seeded generator of test matrices and layers.
class InstanceGenerator {
 public:
  explicit InstanceGenerator(std::uint64_t seed) : rng_(seed) {}

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  Matrix gaussian(std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix a(rows, cols);
    for (auto& v : a.data()) v = nd(rng_);
    return a;
  }

  Matrix integer_valued(std::size_t rows, std::size_t cols) {
    std::uniform_int_distribution<int> d(-9, 9);
    Matrix a(rows, cols);
    for (auto& v : a.data()) v = d(rng_);
    return a;
  }

  /// Product of gaussian factors with inner dimension `rank`.
  Matrix low_rank(std::size_t rows, std::size_t cols, std::size_t rank) {
    return matmul(gaussian(rows, rank), gaussian(rank, cols));
  }

  /// Mix of gaussian, integer-valued and rank-deficient matrices.
  Matrix mixed(std::size_t rows, std::size_t cols) {
    switch (uniform(0, 3)) {
      case 0: return integer_valued(rows, cols);
      case 1: return low_rank(rows, cols, uniform(1, std::max<std::size_t>(1, std::min(rows, cols) - 1)));
      default: return gaussian(rows, cols);
    }
  }

  std::mt19937_64& engine() noexcept { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct Theorem1Instance {
  Matrix w;
  std::size_t k = 1;
  std::size_t g = 1;
};

/// Instance i of the campaign; each instance has its own stream so that
/// parallel evaluation reproduces the serial run.
inline Theorem1Instance theorem1_instance(std::uint64_t seed, std::size_t i) {
  InstanceGenerator gen(seed * 0x9e3779b97f4a7c15ULL + i);
  const std::size_t m = gen.uniform(2, 64);
  const std::size_t n = gen.uniform(2, 64);
  const std::size_t g = gen.uniform(1, n);
  const std::size_t k = gen.uniform(1, std::min(m, n / g));
  return {gen.mixed(m, n), k, g};
}

struct Theorem1Summary {
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min(epsilon - epsilon_g)
};

inline Theorem1Summary run_theorem1_campaign(std::uint64_t seed, std::size_t trials, unsigned jobs = 1) {
  std::vector<ErrorReport> reports(trials);
  parallel_for(trials, jobs, [&](std::size_t i) {
    const auto inst = theorem1_instance(seed, i);
    reports[i] = theorem1_check(inst.w, inst.k, inst.g);
  });
  Theorem1Summary s;
  s.trials = trials;
  for (const auto& r : reports) {
    s.passed += r.inequality_holds ? 1 : 0;
    s.worst_margin = std::min(s.worst_margin, r.epsilon - r.epsilon_g);
  }
  return s;
}

struct Theorem2Instance {
  ConvLayer layer;
  ParallelWindow pw;
  Matrix l;  // m x inner
  Matrix r;  // inner x n
};

/// Random small layer and window plus factors of a random weight matrix.
/// Odd instances use the grouped factors (L_cat, R_bd).
inline Theorem2Instance theorem2_instance(std::uint64_t seed, std::size_t i) {
  InstanceGenerator gen(seed * 0xbf58476d1ce4e5b9ULL + i + 1);
  ConvLayer layer;
  layer.c_in = gen.uniform(1, 4);
  layer.c_out = gen.uniform(1, 8);
  layer.kh = gen.uniform(1, 3);
  layer.kw = gen.uniform(1, 3);
  layer.stride = gen.uniform(1, 4) == 4 ? 2 : 1;
  layer.pad = gen.uniform(0, 1);
  layer.ih = gen.uniform(layer.kh, 10);
  layer.iw = gen.uniform(layer.kw, 10);
  ParallelWindow pw{layer.kh + gen.uniform(0, 3), layer.kw + gen.uniform(0, 3)};
  const Matrix w = gen.mixed(layer.m(), layer.n());
  const std::size_t max_rank = std::min(layer.m(), layer.n());
  if (i % 2 == 1 && layer.n() >= 2) {
    const std::size_t g = gen.uniform(1, std::min<std::size_t>(layer.n(), 4));
    const std::size_t k = gen.uniform(1, std::min(layer.m(), layer.n() / g));
    const GroupedLowRank d = group_decompose(w, k, g);
    return {layer, pw, concatenated_left(d), block_diagonal_right(d)};
  }
  const LowRankPair p = decompose(w, gen.uniform(1, max_rank));
  return {layer, pw, p.l, p.r};
}

struct Theorem2Summary {
  std::size_t trials = 0;
  std::size_t passed = 0;
  double worst_relative = 0.0;  // max |Δ| / max |L R|
};

/// Left side from the direct SDK placement of R; right side from the
/// padding-matrix product applied to the reconstructed L R.
inline double theorem2_relative_gap(const Theorem2Instance& t) {
  const WindowGeometry geom = bind_window(t.layer, t.pw);
  const Matrix lhs = matmul(kronecker_identity(geom.parallel_outputs(), t.l),
                            sdk_matrix(t.r, t.layer, t.pw));
  const Matrix lr = matmul(t.l, t.r);
  const Matrix rhs = sdk_linear_form(lr, t.layer, t.pw);
  const double scale = lr.max_abs();
  const double gap = max_abs_diff(lhs, rhs);
  return scale > 0.0 ? gap / scale : gap;
}

inline Theorem2Summary run_theorem2_campaign(std::uint64_t seed, std::size_t trials, unsigned jobs = 1) {
  std::vector<double> gaps(trials);
  parallel_for(trials, jobs, [&](std::size_t i) { gaps[i] = theorem2_relative_gap(theorem2_instance(seed, i)); });
  Theorem2Summary s;
  s.trials = trials;
  for (double g : gaps) {
    s.passed += g <= 1e-10 ? 1 : 0;
    s.worst_relative = std::max(s.worst_relative, g);
  }
  return s;
}

}  // namespace imclr
