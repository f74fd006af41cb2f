#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "imclr/network.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("imclr_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::size_t count_if_flag(const imclr::NetworkDescriptor& net, bool imclr::NetworkLayer::*flag) {
  std::size_t n = 0;
  for (const auto& l : net.layers) n += (l.*flag) ? 1 : 0;
  return n;
}

}  // namespace

TEST(Presets, CommittedDescriptorsMatchByteForByte) {
  for (const auto& name : imclr::preset_names()) {
    const auto text = slurp(fs::path(IMCLR_SOURCE_DIR) / "data" / "presets" / (name + ".json"));
    EXPECT_EQ(imclr::descriptor_text(imclr::preset(name)), text) << name;
    EXPECT_EQ(imclr::load_descriptor(fs::path(IMCLR_SOURCE_DIR) / "data" / "presets" / (name + ".json")),
              imclr::preset(name));
  }
}

TEST(Presets, Resnet20LayerTable) {
  const auto net = imclr::preset("resnet20");
  EXPECT_EQ(net.layers.size(), 21u);
  // 18 basic-block convs plus the 1x1 projections entering stages 2 and 3.
  EXPECT_EQ(count_if_flag(net, &imclr::NetworkLayer::compressible), 20u);
  EXPECT_EQ(count_if_flag(net, &imclr::NetworkLayer::downsample), 2u);
  EXPECT_FALSE(net.layers[0].compressible);
  const auto& first = net.layers[1];
  EXPECT_EQ(first.name, "layer1.0.conv1");
  EXPECT_EQ(first.conv, (imclr::ConvLayer{16, 16, 3, 3, 32, 32, 1, 1}));
  EXPECT_EQ(first.conv.n(), 144u);
  EXPECT_EQ(first.conv.m(), 16u);
  EXPECT_EQ(net.layers.back().conv, (imclr::ConvLayer{64, 64, 3, 3, 8, 8, 1, 1}));
}

TEST(Presets, Wrn164LayerTable) {
  const auto net = imclr::preset("wrn16-4");
  EXPECT_EQ(net.layers.size(), 16u);
  EXPECT_EQ(count_if_flag(net, &imclr::NetworkLayer::compressible), 15u);
  EXPECT_EQ(count_if_flag(net, &imclr::NetworkLayer::downsample), 3u);
  EXPECT_EQ(net.layers[1].conv.c_out, 64u);
  EXPECT_EQ(net.layers.back().conv.c_out, 256u);
  EXPECT_EQ(net.layers.back().conv.ih, 8u);
}

TEST(Presets, SpatialSizesChainThroughTheNetwork) {
  for (const auto& name : imclr::preset_names()) {
    const auto net = imclr::preset(name);
    for (const auto& l : net.layers) {
      if (l.name.ends_with("conv2")) {
        EXPECT_EQ(l.conv.stride, 1u) << l.name;
      }
      EXPECT_NO_THROW(l.conv.validate());
    }
  }
}

TEST(Presets, UnknownNameIsAConfigError) {
  EXPECT_THROW(imclr::preset("vgg16"), imclr::ConfigError);
}

TEST(Presets, WithoutDownsampleDropsOnlyShortcuts) {
  const auto net = imclr::preset("wrn16-4").without_downsample();
  EXPECT_EQ(net.layers.size(), 13u);
  EXPECT_EQ(count_if_flag(net, &imclr::NetworkLayer::downsample), 0u);
}

TEST(Descriptor, RoundTripThroughJson) {
  const auto net = imclr::preset("resnet20");
  EXPECT_EQ(imclr::descriptor_from_json(nlohmann::json::parse(imclr::descriptor_text(net))), net);
}

TEST(Descriptor, MalformedInputsAreFormatErrors) {
  auto parse = [](const char* text) { return imclr::descriptor_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(parse(R"({"layers": []})"), imclr::FormatError);
  EXPECT_THROW(parse(R"({"name": "x", "layers": []})"), imclr::FormatError);
  EXPECT_THROW(parse(R"({"name": "x", "layers": [{"name": "a", "c_in": 1, "c_out": 1, "kh": 3, "kw": 3, "ih": 2, "iw": 2}]})"),
               imclr::FormatError);
  EXPECT_THROW(parse(R"({"name": "x", "layers": [{"name": "a", "c_in": -1, "c_out": 1, "kh": 1, "kw": 1, "ih": 2, "iw": 2}]})"),
               imclr::FormatError);
  EXPECT_THROW(parse(R"({"name": "x", "layers": [{"name": "a", "c_out": 1, "kh": 1, "kw": 1, "ih": 2, "iw": 2}]})"),
               imclr::FormatError);
  EXPECT_THROW(parse(R"({"name": "x", "layers": [
                   {"name": "a", "c_in": 1, "c_out": 1, "kh": 1, "kw": 1, "ih": 2, "iw": 2},
                   {"name": "a", "c_in": 1, "c_out": 1, "kh": 1, "kw": 1, "ih": 2, "iw": 2}]})"),
               imclr::FormatError);
  const auto ok = parse(R"({"name": "x", "layers": [{"name": "a", "c_in": 2, "c_out": 3, "kh": 1, "kw": 1, "ih": 4, "iw": 4}]})");
  EXPECT_EQ(ok.layers[0].conv.stride, 1u);
  EXPECT_EQ(ok.layers[0].conv.pad, 0u);
  EXPECT_TRUE(ok.layers[0].compressible);
}

TEST(Descriptor, MissingFileIsFormatError) {
  EXPECT_THROW(imclr::load_descriptor("/nonexistent/net.json"), imclr::FormatError);
}

TEST(Weights, SynthesisIsDeterministic) {
  const auto net = imclr::preset("resnet20");
  EXPECT_EQ(imclr::synth_weights(net, 7), imclr::synth_weights(net, 7));
  EXPECT_NE(imclr::synth_weights(net, 7), imclr::synth_weights(net, 8));
}

TEST(Weights, SynthesisedScaleFollowsFanIn) {
  const auto net = imclr::preset("resnet20");
  const auto store = imclr::synth_weights(net, 3);
  const auto& e = store.at("layer3.1.conv1");  // n = 576
  double ss = 0.0;
  for (float v : e.values) ss += static_cast<double>(v) * v;
  EXPECT_NEAR(ss / static_cast<double>(e.values.size()), 1.0 / 576.0, 0.1 / 576.0);
}

TEST(Weights, SaveLoadRoundTripIsBitExact) {
  TempDir dir("roundtrip");
  const auto net = imclr::preset("resnet20");
  const auto store = imclr::synth_weights(net, 7);
  imclr::save_weights(store, dir.path / "w" / "manifest.json");
  const auto back = imclr::load_weights(dir.path / "w" / "manifest.json");
  EXPECT_EQ(back, store);
  EXPECT_EQ(fs::file_size(dir.path / "w" / "layer1.0.conv1.bin"), 2304u * 4u);
  // Two synth runs produce identical blobs on disk.
  imclr::save_weights(imclr::synth_weights(net, 7), dir.path / "v" / "manifest.json");
  EXPECT_EQ(slurp(dir.path / "w" / "layer2.1.conv2.bin"), slurp(dir.path / "v" / "layer2.1.conv2.bin"));
}

TEST(Weights, ShortBlobNamesExpectedLength) {
  TempDir dir("short");
  std::ofstream(dir.path / "m.json") << R"({"format": "imclr-weights", "version": 1, "dtype": "float32-le",
    "layers": [{"name": "layer1.0.conv1", "shape": [16, 16, 3, 3], "blob": "a.bin"}]})";
  {
    std::ofstream blob(dir.path / "a.bin", std::ios::binary);
    const std::string bytes(2303 * 4, '\0');
    blob.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    (void)imclr::load_weights(dir.path / "m.json");
    FAIL() << "expected FormatError";
  } catch (const imclr::FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2303"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 2304"), std::string::npos) << msg;
  }
}

TEST(Weights, ExactBlobIsAccepted) {
  TempDir dir("exact");
  std::ofstream(dir.path / "m.json") << R"({"format": "imclr-weights", "version": 1, "dtype": "float32-le",
    "layers": [{"name": "layer1.0.conv1", "shape": [16, 16, 3, 3], "blob": "a.bin"}]})";
  {
    std::ofstream blob(dir.path / "a.bin", std::ios::binary);
    const std::string bytes(2304 * 4, '\0');
    blob.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  const auto store = imclr::load_weights(dir.path / "m.json");
  EXPECT_EQ(store.at("layer1.0.conv1").values.size(), 2304u);
}

TEST(Weights, ManifestProblemsAreFormatErrors) {
  TempDir dir("bad");
  std::ofstream(dir.path / "fmt.json") << R"({"format": "other", "dtype": "float32-le", "layers": []})";
  EXPECT_THROW(imclr::load_weights(dir.path / "fmt.json"), imclr::FormatError);
  std::ofstream(dir.path / "blob.json") << R"({"format": "imclr-weights", "dtype": "float32-le",
    "layers": [{"name": "x", "shape": [1, 1, 1, 1], "blob": "missing.bin"}]})";
  EXPECT_THROW(imclr::load_weights(dir.path / "blob.json"), imclr::FormatError);
  std::ofstream(dir.path / "syntax.json") << "{";
  EXPECT_THROW(imclr::load_weights(dir.path / "syntax.json"), imclr::FormatError);
  EXPECT_THROW(imclr::load_weights(dir.path / "absent.json"), imclr::FormatError);
}

TEST(Weights, StoreMustCoverCompressibleLayersWithRightShape) {
  const auto net = imclr::preset("resnet20");
  auto store = imclr::synth_weights(net, 1);
  EXPECT_NO_THROW(store.check_against(net));
  store.layers.at("layer2.0.conv1").shape = {32, 16, 1, 9};
  EXPECT_THROW(store.check_against(net), imclr::FormatError);
  store.layers.erase("layer2.0.conv1");
  EXPECT_THROW(store.check_against(net), imclr::FormatError);
}
