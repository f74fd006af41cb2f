// imclr: crossbar mapping, cycle/energy accounting and low-rank compression
// planning for convolutional layers.
//
// Exit codes: 0 success, 1 computation failure, 2 configuration failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "imclr/config.hpp"
#include "imclr/report.hpp"

namespace {

using imclr::ojson;

struct Flags {
  std::string config;
  std::string network;
  bool exclude_downsample = false;
  std::string array;
  std::string mode;
  std::string rank;
  std::optional<std::size_t> groups;
  std::string pw;
  std::optional<std::uint64_t> seed;
  std::string weights;
  std::string format;
  std::string output;
  std::optional<unsigned> jobs;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> trials2;
  std::string dump_occupancy;
  std::string dump_preset;
  std::string save_weights;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--network", f.network, "preset name or descriptor JSON path");
  cmd->add_flag("--exclude-downsample", f.exclude_downsample, "drop 1x1 shortcut convolutions");
  cmd->add_option("--array", f.array, "crossbar size ROWSxCOLS, e.g. 128x128");
  cmd->add_option("--format", f.format, "table | json | csv");
  cmd->add_option("--output", f.output, "write the report to this file instead of stdout");
  cmd->add_option("--jobs", f.jobs, "worker threads");
}

void add_plan(CLI::App* cmd, Flags& f) {
  cmd->add_option("--mode", f.mode, "uncompressed | lowrank");
  cmd->add_option("--rank", f.rank, "rank as m/D or an integer");
  cmd->add_option("--groups", f.groups, "group count");
  cmd->add_option("--pw", f.pw, "kernel | auto | HxW");
}

void add_weights(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "seed for synthesized weights");
  cmd->add_option("--weights", f.weights, "weight manifest JSON");
}

imclr::RunConfig build_config(const Flags& f) {
  imclr::RunConfig c = f.config.empty() ? imclr::RunConfig{} : imclr::load_config(f.config);
  if (!f.network.empty()) c.network = f.network;
  if (f.exclude_downsample) c.exclude_downsample = true;
  if (!f.array.empty()) c.array = imclr::parse_array(f.array);
  if (!f.mode.empty()) c.plan.lowrank = imclr::parse_mode(f.mode);
  if (!f.rank.empty()) {
    c.plan.rank = imclr::parse_rank(f.rank);
    if (f.mode.empty()) c.plan.lowrank = true;
  }
  if (f.groups) {
    c.plan.groups = *f.groups;
    if (f.mode.empty()) c.plan.lowrank = true;
  }
  if (!f.pw.empty()) c.plan.pw = imclr::parse_pw(f.pw);
  if (f.seed) {
    c.weight_seed = *f.seed;
    c.weight_path.reset();
    c.verify_seed = *f.seed;
  }
  if (!f.weights.empty()) {
    c.weight_path = f.weights;
    c.weight_seed.reset();
  }
  if (!f.format.empty()) c.format = imclr::parse_format(f.format);
  if (!f.output.empty()) c.output_path = f.output;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.trials) c.theorem1_trials = *f.trials;
  if (f.trials2) c.theorem2_trials = *f.trials2;
  c.validate();
  return c;
}

std::string fmt_double(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// Left-justify by display width; labels may contain multi-byte UTF-8.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t cols = 0;
  for (unsigned char ch : s) cols += (ch & 0xC0) != 0x80 ? 1 : 0;
  return cols >= width ? s + " " : s + std::string(width - cols, ' ');
}

std::string scheme_label(const ojson& s) {
  std::string out = s["mode"].get<std::string>() == "lowrank"
                        ? "k=" + std::to_string(s["rank"].get<std::size_t>()) +
                              " g=" + std::to_string(s["groups"].get<std::size_t>()) + " "
                        : std::string("dense ");
  out += "pw=" + s["pw"].get<std::string>();
  if (s["sdk_equiv_im2col"].get<bool>()) out += " (SDK≡im2col)";
  return out;
}

// -- table renderers --------------------------------------------------------

void table_map(const ojson& j, std::ostream& os) {
  os << "network " << j["network"].get<std::string>() << ", array " << j["array"].get<std::string>() << "\n";
  os << std::left << std::setw(22) << "layer" << std::setw(34) << "scheme" << std::setw(28) << "stages (rows x cols)"
     << "utilization\n";
  for (const auto& l : j["layers"]) {
    os << std::setw(22) << l["name"].get<std::string>();
    if (l["excluded"].get<bool>()) {
      os << "excluded\n";
      continue;
    }
    std::string stages;
    for (const auto& s : l["stages"]) {
      if (!stages.empty()) stages += " -> ";
      stages += std::to_string(s["rows"].get<std::size_t>()) + "x" + std::to_string(s["cols"].get<std::size_t>());
    }
    os << pad(scheme_label(l["scheme"]), 34) << std::setw(28) << stages
       << fmt_double(l["utilization"].get<double>()) << "\n";
  }
}

void table_cycles(const ojson& j, std::ostream& os) {
  os << "network " << j["network"].get<std::string>() << ", array " << j["array"].get<std::string>() << "\n";
  os << std::left << std::setw(22) << "layer" << std::setw(34) << "scheme" << std::setw(20) << "AR x AC per stage"
     << std::setw(10) << "steps" << "cycles\n";
  for (const auto& l : j["layers"]) {
    os << std::setw(22) << l["name"].get<std::string>();
    if (l["excluded"].get<bool>()) {
      os << "excluded\n";
      continue;
    }
    std::string tiles;
    for (const auto& s : l["stages"]) {
      if (!tiles.empty()) tiles += " + ";
      tiles += std::to_string(s["ar"].get<std::size_t>()) + "x" + std::to_string(s["ac"].get<std::size_t>());
    }
    os << pad(scheme_label(l["scheme"]), 34) << std::setw(20) << tiles << std::setw(10)
       << l["pw_steps"].get<std::size_t>() << l["total"].get<std::size_t>() << "\n";
  }
  os << "total " << j["total"].get<std::size_t>() << " cycles (im2col baseline "
     << j["im2col_baseline_total"].get<std::size_t>() << ", speedup "
     << fmt_double(j["speedup_vs_im2col"].get<double>(), 3) << "x)\n";
}

void table_energy(const ojson& j, std::ostream& os) {
  os << "network " << j["network"].get<std::string>() << ", array " << j["array"].get<std::string>() << "\n";
  for (const auto& l : j["layers"]) {
    os << std::left << std::setw(22) << l["name"].get<std::string>();
    if (l["excluded"].get<bool>()) os << "excluded\n";
    else os << fmt_double(l["energy"].get<double>(), 8) << "\n";
  }
  os << "total " << fmt_double(j["total"].get<double>(), 10) << " (im2col baseline "
     << fmt_double(j["im2col_baseline_total"].get<double>(), 10) << ", normalized "
     << fmt_double(j["normalized"].get<double>()) << ")\n";
}

void table_decompose(const ojson& j, std::ostream& os) {
  os << "network " << j["network"].get<std::string>() << ", rank " << j["rank"].get<std::string>() << ", groups "
     << j["groups"].get<std::size_t>() << "\n";
  os << std::left << std::setw(22) << "layer" << std::setw(10) << "m x n" << std::setw(5) << "k" << std::setw(14)
     << "epsilon" << std::setw(14) << "epsilon_g" << std::setw(8) << "holds" << "params (dense/lowrank/grouped)\n";
  for (const auto& l : j["layers"]) {
    os << std::setw(22) << l["name"].get<std::string>() << std::setw(10)
       << (std::to_string(l["m"].get<std::size_t>()) + "x" + std::to_string(l["n"].get<std::size_t>())) << std::setw(5)
       << l["k"].get<std::size_t>();
    if (!l["feasible"].get<bool>()) {
      os << "infeasible: " << l["reason"].get<std::string>() << "\n";
      continue;
    }
    os << std::setw(14) << fmt_double(l["epsilon"].get<double>(), 6) << std::setw(14)
       << fmt_double(l["epsilon_g"].get<double>(), 6) << std::setw(8)
       << (l["inequality_holds"].get<bool>() ? "yes" : "NO") << l["dense_params"].get<std::size_t>() << "/"
       << l["lowrank_params"].get<std::size_t>() << "/" << l["grouped_params"].get<std::size_t>() << "\n";
  }
}

std::string csv_field(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(17) << v.get<double>();
    return os.str();
  }
  return v.dump();
}

void csv_sweep(const ojson& j, std::ostream& os) {
  const auto& cols = imclr::sweep_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& p : j["points"]) {
    const bool ok = p["feasible"].get<bool>();
    os << j["network"].get<std::string>() << "," << j["array"].get<std::string>() << ","
       << csv_field(p["rank_divisor"].is_null() ? p["rank"] : p["rank_divisor"]) << "," << csv_field(p["groups"])
       << "," << csv_field(p["pw_policy"]) << "," << (ok ? csv_field(p["recon_error"]) : "") << ","
       << (ok ? csv_field(p["cycles"]) : "") << "," << (ok ? csv_field(p["normalized_energy"]) : "") << ","
       << csv_field(p["pareto"]) << "\n";
  }
}

void table_sweep(const ojson& j, std::ostream& os) {
  os << "network " << j["network"].get<std::string>() << ", array " << j["array"].get<std::string>() << "\n";
  os << std::left << std::setw(8) << "rank" << std::setw(8) << "groups" << std::setw(40)
     << j["error_label"].get<std::string>() << std::setw(10) << "cycles" << std::setw(12) << "energy" << "pareto\n";
  for (const auto& p : j["points"]) {
    os << std::setw(8) << p["rank"].get<std::string>() << std::setw(8) << p["groups"].get<std::size_t>();
    if (!p["feasible"].get<bool>()) {
      os << "infeasible: " << p["reason"].get<std::string>() << "\n";
      continue;
    }
    os << std::setw(40) << fmt_double(p["recon_error"].get<double>(), 6) << std::setw(10)
       << p["cycles"].get<std::size_t>() << std::setw(12) << fmt_double(p["normalized_energy"].get<double>())
       << (p["pareto"].get<bool>() ? "*" : "") << "\n";
  }
}

void table_verify(const ojson& j, std::ostream& os) {
  const auto& t1 = j["theorem1"];
  const auto& t2 = j["theorem2"];
  os << "theorem1: " << t1["passed"].get<std::size_t>() << "/" << t1["trials"].get<std::size_t>()
     << ", worst margin " << fmt_double(t1["worst_margin"].get<double>(), 3) << "\n";
  os << "theorem2: " << t2["passed"].get<std::size_t>() << "/" << t2["trials"].get<std::size_t>()
     << ", max|delta|/max|W| " << fmt_double(t2["max_relative_gap"].get<double>(), 3) << "\n";
  os << (j["ok"].get<bool>() ? "ok" : "FAILED") << "\n";
}

void table_presets(const ojson& j, std::ostream& os) {
  for (const auto& p : j["presets"]) {
    os << std::left << std::setw(10) << p["name"].get<std::string>() << p["layers"].get<std::size_t>() << " conv layers, "
       << p["compressible"].get<std::size_t>() << " compressible (" << p["downsample"].get<std::size_t>()
       << " 1x1 shortcuts): " << p["notes"].get<std::string>() << "\n";
  }
}

void emit(const imclr::RunConfig& c, const ojson& j, void (*table)(const ojson&, std::ostream&),
          void (*csv)(const ojson&, std::ostream&)) {
  std::ofstream file;
  if (!c.output_path.empty()) {
    file.open(c.output_path);
    if (!file) throw imclr::ConfigError("cannot write output file " + c.output_path);
  }
  std::ostream& os = c.output_path.empty() ? std::cout : file;
  switch (c.format) {
    case imclr::OutputFormat::json: os << j.dump(2) << "\n"; break;
    case imclr::OutputFormat::csv:
      if (!csv) throw imclr::ConfigError("csv output is only available for the sweep command");
      csv(j, os);
      break;
    case imclr::OutputFormat::table: table(j, os); break;
  }
}

void dump_occupancy(const imclr::NetworkDescriptor& net, const imclr::ResolvedPlan& plan, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (!plan[i]) continue;
    const auto occs = imclr::scheme_occupancy(net.layers[i].conv, *plan[i]);
    for (std::size_t s = 0; s < occs.size(); ++s) {
      // Plain PBM: 1 = occupied cell, 0 = idle.
      std::ofstream out(std::filesystem::path(dir) / (net.layers[i].name + ".stage" + std::to_string(s) + ".pbm"));
      out << "P1\n" << occs[s].cols() << " " << occs[s].rows() << "\n";
      for (std::size_t r = 0; r < occs[s].rows(); ++r) {
        for (std::size_t col = 0; col < occs[s].cols(); ++col) out << (occs[s](r, col) ? '1' : '0');
        out << "\n";
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crossbar mapping and low-rank compression planner for convolutional layers"};
  app.require_subcommand(1);
  Flags f;

  auto* map = app.add_subcommand("map", "per-layer mapping shapes, occupancy and utilization");
  add_common(map, f);
  add_plan(map, f);
  map->add_option("--dump-occupancy", f.dump_occupancy, "directory for per-stage occupancy masks (PBM)");

  auto* cycles = app.add_subcommand("cycles", "AR/AC computing-cycle report");
  add_common(cycles, f);
  add_plan(cycles, f);

  auto* energy = app.add_subcommand("energy", "first-order energy estimate, normalized to im2col");
  add_common(energy, f);
  add_plan(energy, f);

  auto* decompose = app.add_subcommand("decompose", "per-layer reconstruction errors and parameter counts");
  add_common(decompose, f);
  add_plan(decompose, f);
  add_weights(decompose, f);

  auto* sweep = app.add_subcommand("sweep", "(rank, group) grid sweep with Pareto flags");
  add_common(sweep, f);
  add_weights(sweep, f);
  sweep->add_option("--pw", f.pw, "kernel | auto");

  auto* verify = app.add_subcommand("verify", "randomised checks of the grouped-error bound and the SDK factorisation");
  add_common(verify, f);
  verify->add_option("--seed", f.seed, "campaign seed");
  verify->add_option("--trials", f.trials, "grouped-error trials");
  verify->add_option("--trials2", f.trials2, "SDK factorisation trials");

  auto* presets = app.add_subcommand("presets", "list built-in network descriptors");
  add_common(presets, f);
  presets->add_option("--dump", f.dump_preset, "print one preset's descriptor JSON");
  presets->add_option("--save-weights", f.save_weights, "write synthesized weights for --network to this manifest path");
  presets->add_option("--seed", f.seed, "seed for --save-weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const imclr::RunConfig c = build_config(f);

    if (presets->parsed()) {
      if (!f.dump_preset.empty()) {
        std::cout << imclr::descriptor_text(imclr::preset(f.dump_preset));
        return 0;
      }
      if (!f.save_weights.empty()) {
        const auto net = imclr::config_network(c);
        imclr::save_weights(imclr::synth_weights(net, c.weight_seed.value_or(1)), f.save_weights);
        return 0;
      }
      emit(c, imclr::presets_report(), table_presets, nullptr);
      return 0;
    }

    if (verify->parsed()) {
      const auto t1 = imclr::run_theorem1_campaign(c.verify_seed, c.theorem1_trials, c.jobs);
      const auto t2 = imclr::run_theorem2_campaign(c.verify_seed, c.theorem2_trials, c.jobs);
      const ojson j = imclr::verify_report(t1, t2, c.verify_seed);
      emit(c, j, table_verify, nullptr);
      return j["ok"].get<bool>() ? 0 : 1;
    }

    const imclr::NetworkDescriptor net = imclr::config_network(c);

    if (sweep->parsed()) {
      const auto weights = imclr::config_weights(c, net);
      imclr::SweepOptions opt;
      opt.ranks = c.sweep_ranks;
      opt.groups = c.sweep_groups;
      opt.pw = f.pw.empty() ? imclr::PwMode::automatic : imclr::parse_pw(f.pw).mode;
      if (opt.pw == imclr::PwMode::fixed) throw imclr::ConfigError("sweep supports --pw kernel or auto");
      opt.energy = c.energy;
      opt.jobs = c.jobs;
      emit(c, imclr::sweep_report(imclr::sweep(net, weights, c.array, opt), opt.pw), table_sweep, csv_sweep);
      return 0;
    }

    if (decompose->parsed()) {
      const auto weights = imclr::config_weights(c, net);
      imclr::PlanEntry entry = c.plan;
      emit(c, imclr::decompose_report(net, weights, entry), table_decompose, nullptr);
      return 0;
    }

    const imclr::ResolvedPlan plan = imclr::resolve_plan(net, imclr::config_plan(c), c.array);
    if (map->parsed()) {
      if (!f.dump_occupancy.empty()) dump_occupancy(net, plan, f.dump_occupancy);
      emit(c, imclr::map_report(net, plan, c.array), table_map, nullptr);
    } else if (cycles->parsed()) {
      emit(c, imclr::cycles_report(net, plan, c.array), table_cycles, nullptr);
    } else if (energy->parsed()) {
      emit(c, imclr::energy_report(net, plan, c.array, c.energy), table_energy, nullptr);
    }
    return 0;
  } catch (const imclr::ConfigError& e) {
    std::cerr << "imclr: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "imclr: " << e.what() << "\n";
    return 1;
  }
}
