#pragma once

// Machine-readable reports behind the CLI commands. Every builder returns an
// ordered JSON document; the CLI renders the same document as a table or CSV.
// Field names here are the contract documented in docs/schemas/.

#include <cstddef>
#include <string>
#include <vector>

#include "imclr/config.hpp"
#include "imclr/cycles.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/energy.hpp"
#include "imclr/mapping.hpp"
#include "imclr/network.hpp"
#include "imclr/planner.hpp"
#include "imclr/verify.hpp"
#include "json.hpp"

namespace imclr {

using ojson = nlohmann::ordered_json;

inline ojson scheme_json(const ConvLayer& layer, const LayerScheme& s) {
  ojson j;
  j["mode"] = s.lowrank ? "lowrank" : "uncompressed";
  if (s.lowrank) {
    j["rank"] = s.rank;
    j["groups"] = s.groups;
  }
  j["pw"] = to_string(s.pw);
  j["parallel_outputs"] = bind_window(layer, s.pw).parallel_outputs();
  j["sdk_equiv_im2col"] = is_kernel_window(layer, s.pw);
  return j;
}

inline ojson layer_shape_json(const NetworkLayer& l) {
  ojson j;
  j["name"] = l.name;
  j["c_in"] = l.conv.c_in;
  j["c_out"] = l.conv.c_out;
  j["kernel"] = Matrix::shape_string(l.conv.kh, l.conv.kw);
  j["ifm"] = Matrix::shape_string(l.conv.ih, l.conv.iw);
  j["stride"] = l.conv.stride;
  j["m"] = l.conv.m();
  j["n"] = l.conv.n();
  return j;
}

inline ojson run_header(const std::string& command, const NetworkDescriptor& net, const ArrayConfig& array) {
  ojson j;
  j["command"] = command;
  j["network"] = net.name;
  j["array"] = array.label();
  return j;
}

inline ojson map_report(const NetworkDescriptor& net, const ResolvedPlan& plan, const ArrayConfig& array) {
  ojson j = run_header("map", net, array);
  j["layers"] = ojson::array();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    ojson e = layer_shape_json(l);
    e["excluded"] = !plan[i].has_value();
    if (plan[i]) {
      e["scheme"] = scheme_json(l.conv, *plan[i]);
      const auto shapes = stage_shapes(l.conv, *plan[i]);
      const auto occs = scheme_occupancy(l.conv, *plan[i]);
      std::size_t occupied = 0, cells = 0;
      e["stages"] = ojson::array();
      for (std::size_t s = 0; s < shapes.size(); ++s) {
        const TileGrid g = tile_grid(shapes[s].rows, shapes[s].cols, array);
        ojson st;
        st["kind"] = to_string(shapes[s].kind);
        st["rows"] = shapes[s].rows;
        st["cols"] = shapes[s].cols;
        st["occupied"] = occs[s].count();
        st["ar"] = g.ar;
        st["ac"] = g.ac;
        st["utilization"] = utilization(occs[s], array);
        occupied += occs[s].count();
        cells += g.tiles() * array.rows * array.cols;
        e["stages"].push_back(std::move(st));
      }
      e["utilization"] = static_cast<double>(occupied) / static_cast<double>(cells);
    }
    j["layers"].push_back(std::move(e));
  }
  return j;
}

inline ojson cycles_report(const NetworkDescriptor& net, const ResolvedPlan& plan, const ArrayConfig& array) {
  ojson j = run_header("cycles", net, array);
  const NetworkCycles nc = network_cycles(net, plan, array);
  const NetworkCycles base = network_cycles(net, im2col_baseline_plan(net), array);
  j["layers"] = ojson::array();
  for (std::size_t i = 0; i < nc.layers.size(); ++i) {
    const auto& e = nc.layers[i];
    ojson le = layer_shape_json(net.layers[i]);
    le["excluded"] = !e.scheme.has_value();
    if (e.scheme) {
      le["scheme"] = scheme_json(net.layers[i].conv, *e.scheme);
      le["pw_steps"] = e.report.pw_steps;
      le["stages"] = ojson::array();
      for (const auto& s : e.report.stages)
        le["stages"].push_back({{"kind", to_string(s.kind)}, {"rows", s.rows}, {"cols", s.cols},
                                {"ar", s.ar}, {"ac", s.ac}, {"cycles", s.cycles}});
      le["total"] = e.report.total;
    }
    j["layers"].push_back(std::move(le));
  }
  j["total"] = nc.total;
  j["im2col_baseline_total"] = base.total;
  j["speedup_vs_im2col"] = nc.total ? speedup(base.total, nc.total) : 0.0;
  return j;
}

inline ojson energy_report(const NetworkDescriptor& net, const ResolvedPlan& plan, const ArrayConfig& array,
                           const EnergyParams& p) {
  ojson j = run_header("energy", net, array);
  j["params"] = {{"e_cell", p.e_cell}, {"e_wordline", p.e_wordline}, {"e_adc", p.e_adc},
                 {"e_tile_overhead", p.e_tile_overhead}};
  const EnergyReport rep = network_energy(net, plan, array, p);
  j["layers"] = ojson::array();
  for (std::size_t i = 0; i < rep.layers.size(); ++i) {
    ojson e;
    e["name"] = rep.layers[i].name;
    e["excluded"] = !plan[i].has_value();
    e["energy"] = rep.layers[i].energy;
    j["layers"].push_back(std::move(e));
  }
  j["total"] = rep.total;
  j["im2col_baseline_total"] = rep.baseline_total;
  j["normalized"] = rep.normalized;
  return j;
}

/// Per compressible layer: whole-matrix and grouped residuals at the plan's
/// rank and group count, plus parameter counts.
inline ojson decompose_report(const NetworkDescriptor& net, const WeightStore& weights, const PlanEntry& entry) {
  ojson j;
  j["command"] = "decompose";
  j["network"] = net.name;
  j["rank"] = entry.rank.label();
  j["groups"] = entry.groups;
  j["layers"] = ojson::array();
  for (const auto& l : net.layers) {
    if (!l.compressible) continue;
    ojson e = layer_shape_json(l);
    const Matrix w = weight_matrix(l.conv, weights.tensor(l));
    const std::size_t k = entry.rank.resolve(l.conv.m());
    e["k"] = k;
    e["g"] = entry.groups;
    e["dense_params"] = l.conv.m() * l.conv.n();
    if (!group_rank_feasible(l.conv.m(), l.conv.n(), k, entry.groups)) {
      e["feasible"] = false;
      try {
        check_group_rank(l.conv.m(), l.conv.n(), k, entry.groups);
      } catch (const Error& err) {
        e["reason"] = err.what();
      }
      j["layers"].push_back(std::move(e));
      continue;
    }
    const LowRankPair whole = decompose(w, k);
    const GroupedLowRank grouped = group_decompose(w, k, entry.groups);
    const double eps = frobenius_norm(w - reconstruct(whole));
    const double eps_g = frobenius_norm(w - reconstruct(grouped));
    e["feasible"] = true;
    e["epsilon"] = eps;
    e["epsilon_g"] = eps_g;
    e["inequality_holds"] = within_theorem1_bound(eps, eps_g);
    e["lowrank_params"] = parameter_count(whole);
    e["grouped_params"] = parameter_count(grouped);
    j["layers"].push_back(std::move(e));
  }
  return j;
}

inline const std::vector<std::string>& sweep_csv_columns() {
  static const std::vector<std::string> cols{"network", "array", "rank_divisor", "groups", "pw_policy",
                                             "recon_error", "cycles", "normalized_energy", "pareto"};
  return cols;
}

inline ojson sweep_report(const SweepResult& res, PwMode pw) {
  ojson j;
  j["command"] = "sweep";
  j["network"] = res.network;
  j["array"] = res.array.label();
  j["error_label"] = "reconstruction error (accuracy proxy)";
  j["points"] = ojson::array();
  for (const auto& p : res.points) {
    ojson e;
    e["rank"] = p.rank.label();
    e["rank_divisor"] = p.rank.divisor ? ojson(p.rank.value) : ojson(nullptr);
    e["groups"] = p.groups;
    e["pw_policy"] = PwPolicy{pw, {}}.label();
    e["feasible"] = p.feasible;
    if (p.feasible) {
      e["recon_error"] = p.total_error;
      e["cycles"] = p.total_cycles;
      e["normalized_energy"] = p.normalized_energy;
    } else {
      e["reason"] = p.infeasible_reason;
    }
    e["pareto"] = p.pareto;
    j["points"].push_back(std::move(e));
  }
  return j;
}

inline ojson verify_report(const Theorem1Summary& t1, const Theorem2Summary& t2, std::uint64_t seed) {
  ojson j;
  j["command"] = "verify";
  j["seed"] = seed;
  j["theorem1"] = {{"trials", t1.trials}, {"passed", t1.passed}, {"worst_margin", t1.worst_margin},
                   {"tolerance", "epsilon_g <= epsilon + 1e-9*max(1,epsilon)"}};
  j["theorem2"] = {{"trials", t2.trials}, {"passed", t2.passed}, {"max_relative_gap", t2.worst_relative},
                   {"tolerance", 1e-10}};
  j["ok"] = t1.passed == t1.trials && t2.passed == t2.trials;
  return j;
}

inline ojson presets_report() {
  ojson j;
  j["command"] = "presets";
  j["presets"] = ojson::array();
  for (const auto& name : preset_names()) {
    const auto net = preset(name);
    std::size_t compressible = 0, downsample = 0;
    for (const auto& l : net.layers) {
      compressible += l.compressible ? 1 : 0;
      downsample += l.downsample ? 1 : 0;
    }
    j["presets"].push_back({{"name", name}, {"layers", net.layers.size()}, {"compressible", compressible},
                            {"downsample", downsample}, {"notes", net.notes}});
  }
  return j;
}

}  // namespace imclr
