#pragma once

// Compression plans, per-layer parallel-window search, and the (rank, group)
// design-space sweep with Pareto flagging over (reconstruction error, cycles).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "imclr/array_config.hpp"
#include "imclr/cycles.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/energy.hpp"
#include "imclr/error.hpp"
#include "imclr/network.hpp"

namespace imclr {

/// Rank either as an absolute value or as a divisor of the layer's output
/// channel count ("m/8" resolves to max(1, floor(m/8))).
struct RankSpec {
  std::size_t value = 1;
  bool divisor = false;

  static RankSpec absolute(std::size_t k) { return {k, false}; }
  static RankSpec over_m(std::size_t d) { return {d, true}; }

  std::size_t resolve(std::size_t m) const {
    if (value == 0) throw RankError("rank spec value must be positive");
    return divisor ? std::max<std::size_t>(1, m / value) : value;
  }

  std::string label() const { return divisor ? "m/" + std::to_string(value) : std::to_string(value); }
  friend bool operator==(const RankSpec&, const RankSpec&) = default;
};

enum class PwMode { kernel, automatic, fixed };

struct PwPolicy {
  PwMode mode = PwMode::kernel;
  ParallelWindow fixed;  // used when mode == fixed

  std::string label() const {
    switch (mode) {
      case PwMode::kernel: return "kernel";
      case PwMode::automatic: return "auto";
      case PwMode::fixed: return to_string(fixed);
    }
    return "?";
  }
  friend bool operator==(const PwPolicy&, const PwPolicy&) = default;
};

struct PlanEntry {
  bool lowrank = false;
  RankSpec rank;
  std::size_t groups = 1;
  PwPolicy pw;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// One entry applied to every compressible layer, with optional per-layer
/// overrides by layer name.
struct CompressionPlan {
  PlanEntry entry;
  std::map<std::string, PlanEntry> overrides;

  const PlanEntry& for_layer(const std::string& name) const {
    auto it = overrides.find(name);
    return it == overrides.end() ? entry : it->second;
  }
};

/// Windows searched for a layer: kernel size up to +8 pixels per dimension,
/// keeping the flattened window within the row budget the kernel itself
/// already needs, i.e. b <= array.rows * ceil(n / array.rows).
inline std::vector<ParallelWindow> pw_candidates(const ConvLayer& layer, const ArrayConfig& array) {
  const std::size_t budget = array.rows * ceil_div(layer.n(), array.rows);
  std::vector<ParallelWindow> out;
  for (std::size_t h = layer.kh; h <= layer.kh + 8; ++h)
    for (std::size_t w = layer.kw; w <= layer.kw + 8; ++w)
      if (layer.c_in * h * w <= budget) out.push_back({h, w});
  return out;
}

/// Candidate minimising the layer's total cycles under `scheme` (its pw is
/// ignored). Ties go to the smaller window input b, then the smaller height.
inline ParallelWindow best_pw(const ConvLayer& layer, const ArrayConfig& array, LayerScheme scheme) {
  ParallelWindow best = ParallelWindow::kernel_of(layer);
  scheme.pw = best;
  std::size_t best_cycles = layer_cycles(layer, scheme, array).total;
  std::size_t best_b = layer.n();
  for (const auto& pw : pw_candidates(layer, array)) {
    scheme.pw = pw;
    const std::size_t c = layer_cycles(layer, scheme, array).total;
    const std::size_t b = layer.c_in * pw.h * pw.w;
    if (c < best_cycles || (c == best_cycles && (b < best_b || (b == best_b && pw.h < best.h)))) {
      best = pw;
      best_cycles = c;
      best_b = b;
    }
  }
  return best;
}

inline LayerScheme resolve_entry(const ConvLayer& layer, const PlanEntry& e, const ArrayConfig& array) {
  LayerScheme s;
  s.lowrank = e.lowrank;
  if (e.lowrank) {
    s.rank = e.rank.resolve(layer.m());
    s.groups = e.groups;
    check_group_rank(layer.m(), layer.n(), s.rank, s.groups);
  }
  switch (e.pw.mode) {
    case PwMode::kernel: s.pw = ParallelWindow::kernel_of(layer); break;
    case PwMode::fixed:
      s.pw = e.pw.fixed;
      (void)bind_window(layer, s.pw);
      break;
    case PwMode::automatic: s.pw = best_pw(layer, array, s); break;
  }
  return s;
}

/// Concrete per-layer schemes; non-compressible layers map to nullopt.
/// Throws RankError naming the layer when a rank does not fit.
inline ResolvedPlan resolve_plan(const NetworkDescriptor& net, const CompressionPlan& plan,
                                 const ArrayConfig& array) {
  ResolvedPlan out;
  for (const auto& l : net.layers) {
    if (!l.compressible) {
      out.push_back(std::nullopt);
      continue;
    }
    try {
      out.push_back(resolve_entry(l.conv, plan.for_layer(l.name), array));
    } catch (const RankError& e) {
      throw RankError("layer '" + l.name + "': " + e.what());
    } catch (const RangeError& e) {
      throw RangeError("layer '" + l.name + "': " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pareto

struct Objective {
  double error = 0.0;
  double cycles = 0.0;
};

inline bool dominates(const Objective& a, const Objective& b) {
  return a.error <= b.error && a.cycles <= b.cycles && (a.error < b.error || a.cycles < b.cycles);
}

/// Non-dominated flags (minimising both objectives); points flagged
/// infeasible never dominate and are never flagged. Equal points are kept.
inline std::vector<bool> pareto_flags(const std::vector<Objective>& pts,
                                      const std::vector<bool>& feasible) {
  std::vector<bool> flags(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!feasible[i]) continue;
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
      dominated = feasible[j] && j != i && dominates(pts[j], pts[i]);
    flags[i] = !dominated;
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepPoint {
  RankSpec rank;
  std::size_t groups = 1;
  bool feasible = false;
  std::string infeasible_reason;
  double total_error = 0.0;  // sqrt of summed squared per-layer Frobenius errors
  std::size_t total_cycles = 0;
  double normalized_energy = 0.0;
  bool pareto = false;
  ResolvedPlan plan;
};

struct SweepResult {
  std::string network;
  ArrayConfig array;
  std::vector<SweepPoint> points;  // ordered by (rank divisor, groups) as given
};

struct SweepOptions {
  std::vector<RankSpec> ranks{RankSpec::over_m(2), RankSpec::over_m(4), RankSpec::over_m(8),
                              RankSpec::over_m(16)};
  std::vector<std::size_t> groups{1, 2, 4, 8};
  PwMode pw = PwMode::automatic;
  EnergyParams energy;
  unsigned jobs = 1;
};

/// Runs f(i) for i in [0, n) on up to `jobs` threads. Each index writes only
/// its own output slot, so results do not depend on the schedule.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += jobs) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline SweepResult sweep(const NetworkDescriptor& net, const WeightStore& weights,
                         const ArrayConfig& array, const SweepOptions& opt) {
  weights.check_against(net);
  SweepResult res{net.name, array, {}};

  // Per-(layer, groups) SVDs are shared by every rank.
  std::vector<std::size_t> layer_ids;
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    if (net.layers[i].compressible) layer_ids.push_back(i);
  std::vector<Matrix> mats(layer_ids.size());
  for (std::size_t t = 0; t < layer_ids.size(); ++t) {
    const auto& l = net.layers[layer_ids[t]];
    mats[t] = weight_matrix(l.conv, weights.tensor(l));
  }
  std::vector<std::optional<GroupSvd>> svds(layer_ids.size() * opt.groups.size());
  parallel_for(svds.size(), opt.jobs, [&](std::size_t idx) {
    const std::size_t t = idx / opt.groups.size();
    const std::size_t g = opt.groups[idx % opt.groups.size()];
    if (g >= 1 && g <= mats[t].cols()) svds[idx] = group_svd(mats[t], g);
  });

  for (const auto& rs : opt.ranks)
    for (std::size_t gi = 0; gi < opt.groups.size(); ++gi) {
      SweepPoint p;
      p.rank = rs;
      p.groups = opt.groups[gi];
      res.points.push_back(std::move(p));
    }

  parallel_for(res.points.size(), opt.jobs, [&](std::size_t pi) {
    SweepPoint& p = res.points[pi];
    const std::size_t gi = pi % opt.groups.size();
    CompressionPlan plan{PlanEntry{true, p.rank, p.groups, PwPolicy{opt.pw, {}}}, {}};
    try {
      p.plan = resolve_plan(net, plan, array);
    } catch (const Error& e) {
      p.feasible = false;
      p.infeasible_reason = e.what();
      return;
    }
    p.feasible = true;
    double sq = 0.0;
    for (std::size_t t = 0; t < layer_ids.size(); ++t) {
      const auto& scheme = *p.plan[layer_ids[t]];
      const GroupedLowRank d = group_decompose(*svds[t * opt.groups.size() + gi], scheme.rank);
      const double e = frobenius_norm(mats[t] - reconstruct(d));
      sq += e * e;
    }
    p.total_error = std::sqrt(sq);
    p.total_cycles = network_cycles(net, p.plan, array).total;
    p.normalized_energy = network_energy(net, p.plan, array, opt.energy).normalized;
  });

  std::vector<Objective> obj;
  std::vector<bool> feas;
  for (const auto& p : res.points) {
    obj.push_back({p.total_error, static_cast<double>(p.total_cycles)});
    feas.push_back(p.feasible);
  }
  const auto flags = pareto_flags(obj, feas);
  for (std::size_t i = 0; i < flags.size(); ++i) res.points[i].pareto = flags[i];
  return res;
}

}  // namespace imclr
