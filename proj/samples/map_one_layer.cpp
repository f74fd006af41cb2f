// Map one ResNet-20 layer with im2col and with a 4x4 SDK window, then run a
// random input through the SDK layout and compare with direct convolution.
#include <cstdio>
#include <random>

#include "imclr/imclr.hpp"

int main() {
  using namespace imclr;
  const ConvLayer layer{16, 16, 3, 3, 32, 32, 1, 1};
  const ArrayConfig array{256, 64};

  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  Tensor weights({16, 16, 3, 3});
  for (auto& v : weights.data()) v = nd(rng);
  Tensor input({16, 32, 32});
  for (auto& v : input.data()) v = nd(rng);

  const MappedMatrix im = im2col_map(layer, weights);
  const ParallelWindow pw{4, 4};
  const MappedMatrix sdk = sdk_map(weight_matrix(layer, weights), layer, pw);

  for (const MappedMatrix* m : {&im, &sdk}) {
    std::printf("%-8s %4zu x %-4zu utilization %.4f\n", to_string(m->kind), m->values.rows(),
                m->values.cols(), utilization(*m, array));
  }

  LayerScheme im_scheme;
  im_scheme.pw = ParallelWindow::kernel_of(layer);
  LayerScheme sdk_scheme;
  sdk_scheme.pw = pw;
  std::printf("cycles: im2col %zu, SDK %zu\n", layer_cycles(layer, im_scheme, array).total,
              layer_cycles(layer, sdk_scheme, array).total);

  const Tensor got = evaluate_mapping(layer, pw, {&sdk.values}, input);
  const Tensor want = conv_oracle(layer, weights, input);
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    worst = std::max(worst, std::abs(got.data()[i] - want.data()[i]));
  std::printf("max |SDK - conv| = %.3g\n", worst);
}
