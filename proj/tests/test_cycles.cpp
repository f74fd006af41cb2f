#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "imclr/cycles.hpp"
#include "imclr/energy.hpp"
#include "oracles.hpp"

using imclr::ArrayConfig;
using imclr::ConvLayer;
using imclr::LayerScheme;
using imclr::ParallelWindow;

namespace {

const ConvLayer kResnetLayer{16, 16, 3, 3, 32, 32, 1, 1};

LayerScheme dense(const ConvLayer& l, ParallelWindow pw = {0, 0}) {
  LayerScheme s;
  s.pw = pw.h ? pw : ParallelWindow::kernel_of(l);
  return s;
}

imclr::NetworkDescriptor one_layer_net(const ConvLayer& l, std::size_t copies) {
  imclr::NetworkDescriptor net{"toy", {}, ""};
  for (std::size_t i = 0; i < copies; ++i) net.layers.push_back({"c" + std::to_string(i), l, true, false});
  return net;
}

}  // namespace

TEST(TileGrid, CeilCounts) {
  const auto g = imclr::tile_grid(144, 16, {64, 64});
  EXPECT_EQ(g.ar, 3u);
  EXPECT_EQ(g.ac, 1u);
  EXPECT_EQ(imclr::tile_grid(128, 128, {128, 128}).tiles(), 1u);
  EXPECT_EQ(imclr::tile_grid(129, 128, {128, 128}).tiles(), 2u);
}

TEST(ArrayConfig, ZeroSizeIsRejected) {
  EXPECT_THROW((ArrayConfig{0, 64}).validate(), imclr::RangeError);
  EXPECT_THROW(imclr::tile_grid(1, 1, {64, 0}), imclr::RangeError);
}

TEST(LayerCycles, Im2colResnetLayerOnSixtyFour) {
  const auto r = imclr::layer_cycles(kResnetLayer, dense(kResnetLayer), {64, 64});
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.ar(), 3u);
  EXPECT_EQ(r.ac(), 1u);
  EXPECT_EQ(r.pw_steps, 1024u);
  EXPECT_EQ(r.total, 3072u);
  EXPECT_EQ(r.total, oracle::layer_cycles(kResnetLayer, 3, 3, false, 0, 0, 64, 64));
}

TEST(LayerCycles, SdkFourByFourOnTallArray) {
  const auto r = imclr::layer_cycles(kResnetLayer, dense(kResnetLayer, {4, 4}), {256, 64});
  EXPECT_EQ(r.stages[0].rows, 256u);
  EXPECT_EQ(r.stages[0].cols, 64u);
  EXPECT_EQ(r.ar(), 1u);
  EXPECT_EQ(r.ac(), 1u);
  EXPECT_EQ(r.pw_steps, 256u);
  EXPECT_EQ(r.total, 256u);
}

TEST(LayerCycles, SingleOutputPixelFitsInOneCycle) {
  const ConvLayer l{2, 3, 3, 3, 3, 3, 1, 0};
  EXPECT_EQ(imclr::layer_cycles(l, dense(l), {64, 64}).total, 1u);
}

TEST(LayerCycles, LowRankAddsBothStages) {
  LayerScheme s = dense(kResnetLayer);
  s.lowrank = true;
  s.rank = 2;
  s.groups = 4;
  const auto r = imclr::layer_cycles(kResnetLayer, s, {64, 64});
  ASSERT_EQ(r.stages.size(), 2u);
  EXPECT_EQ(r.stages[0].rows, 144u);
  EXPECT_EQ(r.stages[0].cols, 8u);
  EXPECT_EQ(r.stages[1].rows, 8u);
  EXPECT_EQ(r.stages[1].cols, 16u);
  EXPECT_EQ(r.total, (3u + 1u) * 1024u);
}

TEST(LayerCycles, RandomSchemesMatchTileEnumeration) {
  std::mt19937_64 rng(42);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  for (int t = 0; t < 200; ++t) {
    ConvLayer l{pick(1, 64), pick(1, 64), pick(1, 3), pick(1, 3), 0, 0, pick(1, 2), pick(0, 1)};
    l.ih = pick(l.kh, 33);
    l.iw = pick(l.kw, 33);
    LayerScheme s;
    s.pw = {l.kh + pick(0, 5), l.kw + pick(0, 5)};
    s.lowrank = pick(0, 1) == 1;
    s.groups = pick(1, 4);
    s.rank = pick(1, 8);
    const ArrayConfig a{pick(8, 256), pick(8, 256)};
    EXPECT_EQ(imclr::layer_cycles(l, s, a).total,
              oracle::layer_cycles(l, s.pw.h, s.pw.w, s.lowrank, s.rank, s.groups, a.rows, a.cols));
  }
}

TEST(LayerCycles, MappedStagesAgreeWithShapeModel) {
  std::mt19937_64 rng(3);
  const ConvLayer l{4, 6, 3, 3, 12, 12, 1, 1};
  const auto g = imclr::group_decompose(oracle::random_matrix(rng, 6, 36), 2, 3);
  const auto st = imclr::group_sdk_lowrank_map(g, l, {5, 6});
  LayerScheme s{true, 2, 3, {5, 6}};
  const ArrayConfig a{32, 16};
  EXPECT_EQ(imclr::layer_cycles({&st.stage_r, &st.stage_l}, l, {5, 6}, a).total, imclr::layer_cycles(l, s, a).total);
  EXPECT_THROW(imclr::layer_cycles({&st.stage_l}, l, {5, 6}, a), imclr::DimensionError);
  EXPECT_THROW(imclr::layer_cycles({}, l, {5, 6}, a), imclr::DimensionError);
}

TEST(NetworkCycles, SingleLayerEqualsLayerCycles) {
  const auto net = one_layer_net(kResnetLayer, 1);
  const auto nc = imclr::network_cycles(net, imclr::im2col_baseline_plan(net), {64, 64});
  EXPECT_EQ(nc.total, imclr::layer_cycles(kResnetLayer, dense(kResnetLayer), {64, 64}).total);
}

TEST(NetworkCycles, TwoIdenticalLayersDouble) {
  const auto one = one_layer_net(kResnetLayer, 1);
  const auto two = one_layer_net(kResnetLayer, 2);
  const ArrayConfig a{128, 128};
  EXPECT_EQ(imclr::network_cycles(two, imclr::im2col_baseline_plan(two), a).total,
            2 * imclr::network_cycles(one, imclr::im2col_baseline_plan(one), a).total);
}

TEST(NetworkCycles, PlanLengthMustMatch) {
  const auto net = one_layer_net(kResnetLayer, 2);
  EXPECT_THROW(imclr::network_cycles(net, imclr::ResolvedPlan(1), {64, 64}), imclr::DimensionError);
}

TEST(NetworkCycles, ResnetIm2colMatchesCommittedSpreadsheet) {
  std::ifstream in(IMCLR_SOURCE_DIR "/tests/golden/resnet20_im2col_cycles.csv");
  ASSERT_TRUE(in) << "golden sheet missing";
  const auto net = imclr::preset("resnet20");
  std::string line;
  std::getline(in, line);  // header
  std::size_t checked = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string array, name, rows, cols, ar, ac, steps, cycles;
    std::getline(ss, array, ',');
    std::getline(ss, name, ',');
    std::getline(ss, rows, ',');
    std::getline(ss, cols, ',');
    std::getline(ss, ar, ',');
    std::getline(ss, ac, ',');
    std::getline(ss, steps, ',');
    std::getline(ss, cycles, ',');
    const std::size_t sz = std::stoul(array.substr(0, array.find('x')));
    const auto nc = imclr::network_cycles(net, imclr::im2col_baseline_plan(net), {sz, sz});
    if (name == "TOTAL") {
      EXPECT_EQ(nc.total, std::stoul(cycles)) << array;
    } else {
      bool found = false;
      for (const auto& e : nc.layers)
        if (e.name == name) {
          found = true;
          EXPECT_EQ(e.report.total, std::stoul(cycles)) << array << " " << name;
          if (e.scheme) {
            EXPECT_EQ(e.report.ar(), std::stoul(ar)) << name;
            EXPECT_EQ(e.report.ac(), std::stoul(ac)) << name;
            EXPECT_EQ(e.report.pw_steps, std::stoul(steps)) << name;
          }
        }
      EXPECT_TRUE(found) << name;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 2u * 22u);
}

TEST(Speedup, RatioAndZeroGuard) {
  EXPECT_DOUBLE_EQ(imclr::speedup(300, 200), 1.5);
  EXPECT_THROW(imclr::speedup(300, 0), imclr::RangeError);
}
