#pragma once

// Network descriptors (ordered conv-layer tables), the built-in CIFAR presets,
// and the on-disk weight store.
//
// Weight store layout: a JSON manifest plus one raw little-endian float32
// blob per layer, all in the manifest's directory.
//
//   {
//     "format": "imclr-weights", "version": 1, "dtype": "float32-le",
//     "seed": 7,                                   // optional
//     "layers": [ {"name": "layer1.0.conv1", "shape": [16,16,3,3],
//                  "blob": "layer1.0.conv1.bin"}, ... ]
//   }

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "imclr/conv.hpp"
#include "imclr/error.hpp"
#include "json.hpp"

namespace imclr {

struct NetworkLayer {
  std::string name;
  ConvLayer conv;
  bool compressible = true;
  bool downsample = false;

  friend bool operator==(const NetworkLayer&, const NetworkLayer&) = default;
};

struct NetworkDescriptor {
  std::string name;
  std::vector<NetworkLayer> layers;
  std::string notes;

  void validate() const {
    bool any = false;
    std::set<std::string> seen;
    for (const auto& l : layers) {
      if (l.name.empty()) throw FormatError("network '" + name + "': layer without a name");
      if (!seen.insert(l.name).second) throw FormatError("network '" + name + "': duplicate layer '" + l.name + "'");
      try {
        l.conv.validate();
      } catch (const Error& e) {
        throw FormatError("layer '" + l.name + "': " + e.what());
      }
      any = any || l.compressible;
    }
    if (!any) throw FormatError("network '" + name + "' has no compressible layer");
  }

  /// Copy without the 1x1 shortcut convolutions.
  NetworkDescriptor without_downsample() const {
    NetworkDescriptor out{name, {}, notes};
    for (const auto& l : layers)
      if (!l.downsample) out.layers.push_back(l);
    return out;
  }

  friend bool operator==(const NetworkDescriptor&, const NetworkDescriptor&) = default;
};

namespace detail {

inline NetworkLayer conv3x3(std::string name, std::size_t cin, std::size_t cout, std::size_t ifm,
                            std::size_t stride, bool compressible = true) {
  return {std::move(name), {cin, cout, 3, 3, ifm, ifm, stride, 1}, compressible, false};
}

inline NetworkLayer shortcut(std::string name, std::size_t cin, std::size_t cout, std::size_t ifm,
                             std::size_t stride) {
  return {std::move(name), {cin, cout, 1, 1, ifm, ifm, stride, 0}, true, true};
}

// CIFAR residual stack: three stages at 32/16/8 pixels, `blocks` basic blocks
// per stage, two 3x3 convs per block, 1x1 projection whenever the block
// changes width or resolution.
inline std::vector<NetworkLayer> residual_stages(std::size_t stem, const std::size_t (&widths)[3],
                                                 std::size_t blocks) {
  std::vector<NetworkLayer> layers;
  layers.push_back(conv3x3("conv1", 3, stem, 32, 1, false));
  std::size_t in = stem;
  std::size_t ifm = 32;
  for (std::size_t st = 0; st < 3; ++st) {
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::string prefix = "layer" + std::to_string(st + 1) + "." + std::to_string(b) + ".";
      const std::size_t stride = (st > 0 && b == 0) ? 2 : 1;
      const std::size_t out = widths[st];
      layers.push_back(conv3x3(prefix + "conv1", in, out, ifm, stride));
      const std::size_t ofm = layers.back().conv.oh();
      layers.push_back(conv3x3(prefix + "conv2", out, out, ofm, 1));
      if (in != out || stride != 1) layers.push_back(shortcut(prefix + "downsample", in, out, ifm, stride));
      in = out;
      ifm = ofm;
    }
  }
  return layers;
}

}  // namespace detail

inline std::vector<std::string> preset_names() { return {"resnet20", "wrn16-4"}; }

/// Built-in CIFAR layer tables. The stem conv is kept but marked
/// non-compressible; the final linear layer is not part of either table.
inline NetworkDescriptor preset(const std::string& name) {
  if (name == "resnet20") {
    return {name, detail::residual_stages(16, {16, 32, 64}, 3),
            "ResNet-20 for 32x32 inputs, expansion 1; stem conv excluded from compression"};
  }
  if (name == "wrn16-4") {
    return {name, detail::residual_stages(16, {64, 128, 256}, 2),
            "Wide-ResNet 16-4 for 32x32 inputs; stem conv excluded from compression"};
  }
  throw ConfigError("unknown preset '" + name + "' (known: resnet20, wrn16-4)");
}

inline nlohmann::ordered_json to_json(const NetworkDescriptor& net) {
  nlohmann::ordered_json j;
  j["name"] = net.name;
  j["notes"] = net.notes;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : net.layers) {
    nlohmann::ordered_json e;
    e["name"] = l.name;
    e["c_in"] = l.conv.c_in;
    e["c_out"] = l.conv.c_out;
    e["kh"] = l.conv.kh;
    e["kw"] = l.conv.kw;
    e["ih"] = l.conv.ih;
    e["iw"] = l.conv.iw;
    e["stride"] = l.conv.stride;
    e["pad"] = l.conv.pad;
    e["compressible"] = l.compressible;
    e["downsample"] = l.downsample;
    j["layers"].push_back(std::move(e));
  }
  return j;
}

/// Canonical text of a descriptor: two-space indented JSON plus newline.
inline std::string descriptor_text(const NetworkDescriptor& net) { return to_json(net).dump(2) + "\n"; }

inline NetworkDescriptor descriptor_from_json(const nlohmann::json& j) {
  auto count = [](const nlohmann::json& e, const char* key, std::optional<std::size_t> fallback) {
    if (!e.contains(key)) {
      if (fallback) return *fallback;
      throw FormatError(std::string("network descriptor: layer field '") + key + "' is missing");
    }
    if (!e.at(key).is_number_unsigned())
      throw FormatError(std::string("network descriptor: layer field '") + key + "' must be a non-negative integer");
    return e.at(key).get<std::size_t>();
  };
  try {
    NetworkDescriptor net;
    net.name = j.at("name").get<std::string>();
    net.notes = j.value("notes", std::string{});
    for (const auto& e : j.at("layers")) {
      NetworkLayer l;
      l.name = e.at("name").get<std::string>();
      l.conv.c_in = count(e, "c_in", std::nullopt);
      l.conv.c_out = count(e, "c_out", std::nullopt);
      l.conv.kh = count(e, "kh", std::nullopt);
      l.conv.kw = count(e, "kw", std::nullopt);
      l.conv.ih = count(e, "ih", std::nullopt);
      l.conv.iw = count(e, "iw", std::nullopt);
      l.conv.stride = count(e, "stride", 1);
      l.conv.pad = count(e, "pad", 0);
      l.compressible = e.value("compressible", true);
      l.downsample = e.value("downsample", false);
      net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("network descriptor: ") + e.what());
  }
}

inline NetworkDescriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open descriptor " + path.string());
  try {
    return descriptor_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("descriptor " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Weight store

struct WeightEntry {
  std::vector<std::size_t> shape;  // c_out, c_in, kh, kw
  std::vector<float> values;

  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

struct WeightStore {
  std::map<std::string, WeightEntry> layers;
  std::optional<std::uint64_t> seed;

  const WeightEntry& at(const std::string& name) const {
    auto it = layers.find(name);
    if (it == layers.end()) throw FormatError("weight store has no entry for layer '" + name + "'");
    return it->second;
  }

  /// Output-major weight tensor of a layer, shape-checked against the layer.
  Tensor tensor(const NetworkLayer& layer) const {
    const WeightEntry& e = at(layer.name);
    const std::vector<std::size_t> expected{layer.conv.c_out, layer.conv.c_in, layer.conv.kh,
                                            layer.conv.kw};
    if (e.shape != expected) {
      throw FormatError("layer '" + layer.name + "': stored shape does not match descriptor");
    }
    return Tensor(e.shape, std::vector<double>(e.values.begin(), e.values.end()));
  }

  /// Every compressible layer of `net` present with the descriptor's shape.
  void check_against(const NetworkDescriptor& net) const {
    for (const auto& l : net.layers)
      if (l.compressible) (void)tensor(l);
  }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

inline std::size_t shape_volume(const std::vector<std::size_t>& shape) {
  std::size_t v = 1;
  for (auto d : shape) v *= d;
  return v;
}

/// Seeded N(0, 1/n) weights per layer, n = c_in*kh*kw. Each layer draws
/// from its own stream keyed by (seed, layer index).
inline WeightStore synth_weights(const NetworkDescriptor& net, std::uint64_t seed) {
  WeightStore store;
  store.seed = seed;
  for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
    const auto& l = net.layers[idx];
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(idx)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(l.conv.n())));
    WeightEntry e{{l.conv.c_out, l.conv.c_in, l.conv.kh, l.conv.kw}, {}};
    e.values.resize(shape_volume(e.shape));
    for (auto& v : e.values) v = static_cast<float>(normal(rng));
    store.layers.emplace(l.name, std::move(e));
  }
  return store;
}

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

inline std::string blob_name(const std::string& layer) {
  std::string s = layer;
  for (char& c : s)
    if (c == '/' || c == '\\') c = '_';
  return s + ".bin";
}

}  // namespace detail

/// Writes `manifest` and one blob per layer next to it.
inline void save_weights(const WeightStore& store, const std::filesystem::path& manifest) {
  const auto dir = manifest.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["format"] = "imclr-weights";
  j["version"] = 1;
  j["dtype"] = "float32-le";
  if (store.seed) j["seed"] = *store.seed;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& [name, e] : store.layers) {
    const std::string blob = detail::blob_name(name);
    std::ofstream out(dir / blob, std::ios::binary);
    if (!out) throw FormatError("cannot write blob " + (dir / blob).string());
    for (float v : e.values) {
      const std::uint32_t bits = detail::to_little_endian(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    j["layers"].push_back({{"name", name}, {"shape", e.shape}, {"blob", blob}});
  }
  std::ofstream m(manifest);
  if (!m) throw FormatError("cannot write manifest " + manifest.string());
  m << j.dump(2) << "\n";
}

inline WeightStore load_weights(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open weight manifest " + manifest.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("weight manifest " + manifest.string() + ": " + e.what());
  }
  WeightStore store;
  try {
    if (j.value("format", std::string{}) != "imclr-weights")
      throw FormatError("weight manifest: format must be \"imclr-weights\"");
    if (j.value("dtype", std::string{}) != "float32-le")
      throw FormatError("weight manifest: dtype must be \"float32-le\"");
    if (j.contains("seed")) store.seed = j.at("seed").get<std::uint64_t>();
    const auto dir = manifest.parent_path();
    for (const auto& e : j.at("layers")) {
      const std::string name = e.at("name").get<std::string>();
      WeightEntry entry{e.at("shape").get<std::vector<std::size_t>>(), {}};
      if (entry.shape.size() != 4) throw FormatError("layer '" + name + "': shape must have 4 dims");
      const std::size_t expected = shape_volume(entry.shape);
      const auto path = dir / e.at("blob").get<std::string>();
      std::ifstream blob(path, std::ios::binary | std::ios::ate);
      if (!blob) throw FormatError("layer '" + name + "': cannot open blob " + path.string());
      const auto bytes = static_cast<std::size_t>(blob.tellg());
      if (bytes % 4 != 0 || bytes / 4 != expected) {
        throw FormatError("layer '" + name + "': blob holds " + std::to_string(bytes / 4) +
                          (bytes % 4 ? " floats plus a partial value" : " floats") +
                          ", expected " + std::to_string(expected));
      }
      blob.seekg(0);
      entry.values.resize(expected);
      for (auto& v : entry.values) {
        std::uint32_t bits = 0;
        blob.read(reinterpret_cast<char*>(&bits), sizeof bits);
        v = std::bit_cast<float>(detail::to_little_endian(bits));
      }
      store.layers.emplace(name, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("weight manifest " + manifest.string() + ": " + e.what());
  }
  return store;
}

}  // namespace imclr
