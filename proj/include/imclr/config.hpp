#pragma once

// Run configuration shared by every CLI command. A JSON document (all keys
// optional, unknown keys rejected) is parsed first; command-line flags then
// override individual fields through the same string parsers.
//
//   {
//     "network": "resnet20",              // preset name or descriptor path
//     "exclude_downsample": false,
//     "weights": {"seed": 1},             // or {"path": "weights/manifest.json"}
//     "array": "128x128",                 // or {"rows": 128, "cols": 128}
//     "plan": {"mode": "lowrank", "rank": "m/8", "groups": 4, "pw": "auto"},
//     "sweep": {"ranks": ["m/2", "m/4", "m/8", "m/16"], "groups": [1, 2, 4, 8]},
//     "energy": {"e_cell": 1, "e_wordline": 4, "e_adc": 16, "e_tile_overhead": 64},
//     "verify": {"seed": 1, "theorem1_trials": 1000, "theorem2_trials": 200},
//     "output": {"format": "table", "path": ""},
//     "jobs": 1
//   }

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "imclr/energy.hpp"
#include "imclr/error.hpp"
#include "imclr/network.hpp"
#include "imclr/planner.hpp"
#include "json.hpp"

namespace imclr {

enum class OutputFormat { table, json, csv };

struct RunConfig {
  std::string network = "resnet20";
  bool exclude_downsample = false;
  std::optional<std::uint64_t> weight_seed = 1;
  std::optional<std::string> weight_path;
  ArrayConfig array{128, 128};
  PlanEntry plan{false, RankSpec::over_m(8), 1, PwPolicy{PwMode::kernel, {}}};
  std::vector<RankSpec> sweep_ranks{RankSpec::over_m(2), RankSpec::over_m(4), RankSpec::over_m(8),
                                    RankSpec::over_m(16)};
  std::vector<std::size_t> sweep_groups{1, 2, 4, 8};
  EnergyParams energy;
  std::uint64_t verify_seed = 1;
  std::size_t theorem1_trials = 1000;
  std::size_t theorem2_trials = 200;
  OutputFormat format = OutputFormat::table;
  std::string output_path;
  unsigned jobs = 1;

  void validate() const {
    if (network.empty()) throw ConfigError("network must not be empty");
    array.validate();
    energy.validate();
    if (plan.groups < 1) throw ConfigError("plan.groups must be at least 1");
    if (plan.rank.value < 1) throw ConfigError("plan.rank must be positive");
    if (sweep_ranks.empty() || sweep_groups.empty()) throw ConfigError("sweep grid must not be empty");
    for (auto g : sweep_groups)
      if (g < 1) throw ConfigError("sweep groups must be at least 1");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (!weight_seed && !weight_path) throw ConfigError("weights need a seed or a path");
  }
};

namespace detail {

inline std::size_t parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(what + ": expected a positive integer, got '" + s + "'");
  try {
    const auto v = std::stoull(s);
    if (v == 0) throw ConfigError(what + ": must be positive");
    return static_cast<std::size_t>(v);
  } catch (const std::out_of_range&) {
    throw ConfigError(what + ": value out of range '" + s + "'");
  }
}

inline std::pair<std::size_t, std::size_t> parse_dims(const std::string& s, const std::string& what) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError(what + ": expected ROWSxCOLS, got '" + s + "'");
  return {parse_count(s.substr(0, x), what), parse_count(s.substr(x + 1), what)};
}

}  // namespace detail

inline ArrayConfig parse_array(const std::string& s) {
  const auto [r, c] = detail::parse_dims(s, "array");
  return {r, c};
}

/// "m/8" or "4".
inline RankSpec parse_rank(const std::string& s) {
  if (s.rfind("m/", 0) == 0) return RankSpec::over_m(detail::parse_count(s.substr(2), "rank divisor"));
  return RankSpec::absolute(detail::parse_count(s, "rank"));
}

/// "kernel", "auto", or "HxW".
inline PwPolicy parse_pw(const std::string& s) {
  if (s == "kernel" || s == "im2col") return {PwMode::kernel, {}};
  if (s == "auto") return {PwMode::automatic, {}};
  const auto [h, w] = detail::parse_dims(s, "pw");
  return {PwMode::fixed, {h, w}};
}

inline bool parse_mode(const std::string& s) {
  if (s == "lowrank") return true;
  if (s == "uncompressed") return false;
  throw ConfigError("plan.mode must be 'uncompressed' or 'lowrank', got '" + s + "'");
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "table") return OutputFormat::table;
  if (s == "json") return OutputFormat::json;
  if (s == "csv") return OutputFormat::csv;
  throw ConfigError("output format must be table, json or csv, got '" + s + "'");
}

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

inline std::string rank_text(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_string()) return v.get<std::string>();
  throw ConfigError("rank must be an integer or \"m/D\"");
}

template <typename T>
T get_as(const nlohmann::json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + " has the wrong type");
  }
}

inline std::size_t get_count(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
    throw ConfigError(where + " must be a positive integer");
  return static_cast<std::size_t>(v.get<std::uint64_t>());
}

inline double get_nonneg(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double d = v.get<double>();
  if (!(d >= 0.0)) throw ConfigError(where + " must be non-negative");
  return d;
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  using detail::get_as;
  RunConfig c;
  detail::reject_unknown(j, {"network", "exclude_downsample", "weights", "array", "plan", "sweep",
                             "energy", "verify", "output", "jobs"},
                         "config");
  if (j.contains("network")) c.network = get_as<std::string>(j["network"], "network");
  if (j.contains("exclude_downsample"))
    c.exclude_downsample = get_as<bool>(j["exclude_downsample"], "exclude_downsample");
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    detail::reject_unknown(w, {"seed", "path"}, "weights");
    if (w.contains("seed") == w.contains("path"))
      throw ConfigError("weights needs exactly one of 'seed' or 'path'");
    if (w.contains("seed")) {
      if (!w["seed"].is_number_unsigned()) throw ConfigError("weights.seed must be a non-negative integer");
      c.weight_seed = w["seed"].get<std::uint64_t>();
    } else {
      c.weight_seed.reset();
      c.weight_path = get_as<std::string>(w["path"], "weights.path");
    }
  }
  if (j.contains("array")) {
    const auto& a = j["array"];
    if (a.is_string()) {
      c.array = parse_array(a.get<std::string>());
    } else {
      detail::reject_unknown(a, {"rows", "cols"}, "array");
      if (!a.contains("rows") || !a.contains("cols")) throw ConfigError("array needs rows and cols");
      c.array = {detail::get_count(a["rows"], "array.rows"), detail::get_count(a["cols"], "array.cols")};
    }
  }
  if (j.contains("plan")) {
    const auto& p = j["plan"];
    detail::reject_unknown(p, {"mode", "rank", "groups", "pw"}, "plan");
    if (p.contains("mode")) c.plan.lowrank = parse_mode(get_as<std::string>(p["mode"], "plan.mode"));
    if (p.contains("rank")) c.plan.rank = parse_rank(detail::rank_text(p["rank"]));
    if (p.contains("groups")) c.plan.groups = detail::get_count(p["groups"], "plan.groups");
    if (p.contains("pw")) c.plan.pw = parse_pw(get_as<std::string>(p["pw"], "plan.pw"));
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    detail::reject_unknown(s, {"ranks", "groups"}, "sweep");
    if (s.contains("ranks")) {
      if (!s["ranks"].is_array()) throw ConfigError("sweep.ranks must be an array");
      c.sweep_ranks.clear();
      for (const auto& r : s["ranks"]) c.sweep_ranks.push_back(parse_rank(detail::rank_text(r)));
    }
    if (s.contains("groups")) {
      if (!s["groups"].is_array()) throw ConfigError("sweep.groups must be an array");
      c.sweep_groups.clear();
      for (const auto& g : s["groups"]) c.sweep_groups.push_back(detail::get_count(g, "sweep.groups"));
    }
  }
  if (j.contains("energy")) {
    const auto& e = j["energy"];
    detail::reject_unknown(e, {"e_cell", "e_wordline", "e_adc", "e_tile_overhead"}, "energy");
    if (e.contains("e_cell")) c.energy.e_cell = detail::get_nonneg(e["e_cell"], "energy.e_cell");
    if (e.contains("e_wordline")) c.energy.e_wordline = detail::get_nonneg(e["e_wordline"], "energy.e_wordline");
    if (e.contains("e_adc")) c.energy.e_adc = detail::get_nonneg(e["e_adc"], "energy.e_adc");
    if (e.contains("e_tile_overhead"))
      c.energy.e_tile_overhead = detail::get_nonneg(e["e_tile_overhead"], "energy.e_tile_overhead");
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    detail::reject_unknown(v, {"seed", "theorem1_trials", "theorem2_trials"}, "verify");
    if (v.contains("seed")) c.verify_seed = get_as<std::uint64_t>(v["seed"], "verify.seed");
    if (v.contains("theorem1_trials")) c.theorem1_trials = detail::get_count(v["theorem1_trials"], "verify.theorem1_trials");
    if (v.contains("theorem2_trials")) c.theorem2_trials = detail::get_count(v["theorem2_trials"], "verify.theorem2_trials");
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    detail::reject_unknown(o, {"format", "path"}, "output");
    if (o.contains("format")) c.format = parse_format(get_as<std::string>(o["format"], "output.format"));
    if (o.contains("path")) c.output_path = get_as<std::string>(o["path"], "output.path");
  }
  if (j.contains("jobs")) c.jobs = static_cast<unsigned>(detail::get_count(j["jobs"], "jobs"));
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

/// Descriptor named by the config (preset or file), optionally without the
/// 1x1 shortcut convs.
inline NetworkDescriptor config_network(const RunConfig& c) {
  NetworkDescriptor net;
  const auto presets = preset_names();
  if (std::find(presets.begin(), presets.end(), c.network) != presets.end()) {
    net = preset(c.network);
  } else if (std::filesystem::exists(c.network)) {
    try {
      net = load_descriptor(c.network);
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("network '" + c.network + "' is neither a preset nor a descriptor file");
  }
  return c.exclude_downsample ? net.without_downsample() : net;
}

inline WeightStore config_weights(const RunConfig& c, const NetworkDescriptor& net) {
  if (c.weight_path && !std::filesystem::exists(*c.weight_path))
    throw ConfigError("weight manifest '" + *c.weight_path + "' does not exist");
  WeightStore store = c.weight_path ? load_weights(*c.weight_path) : synth_weights(net, *c.weight_seed);
  store.check_against(net);
  return store;
}

inline CompressionPlan config_plan(const RunConfig& c) { return {c.plan, {}}; }

}  // namespace imclr
