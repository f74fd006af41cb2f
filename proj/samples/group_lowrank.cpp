// Rank-k factors of a 64x576 weight matrix, whole and in g column groups.
#include <cstdio>
#include <random>

#include "imclr/imclr.hpp"

int main() {
  using namespace imclr;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0 / 24.0);
  Matrix w(64, 576);
  for (auto& v : w.data()) v = nd(rng);

  const std::size_t k = 8;
  std::printf("rank %zu, dense params %zu\n", k, w.rows() * w.cols());
  for (std::size_t g : {1, 2, 4, 8}) {
    const ErrorReport e = theorem1_check(w, k, g);
    const GroupedLowRank d = group_decompose(w, k, g);
    std::printf("g=%zu  eps=%.5f  eps_g=%.5f  params=%zu\n", g, e.epsilon, e.epsilon_g,
                parameter_count(d));
  }
}
