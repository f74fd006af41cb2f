#pragma once

// Computing-cycle accounting.
//
// A mapped stage of r x c cells on an R x C array needs AR = ceil(r/R) by
// AC = ceil(c/C) array tiles per PW placement, processed one after another;
// placements needed to cover the output map are ceil(oh/po_h)*ceil(ow/po_w)
// (oh*ow for im2col). Low-rank layers run stage R then stage L for every
// placement, and the two stage totals are summed. Bit-serial input cycling
// scales every total by the same constant and is left out.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "imclr/array_config.hpp"
#include "imclr/conv.hpp"
#include "imclr/decomposition.hpp"
#include "imclr/error.hpp"
#include "imclr/mapping.hpp"
#include "imclr/network.hpp"

namespace imclr {

/// How one layer is mapped: uncompressed or factored at (rank, groups), over
/// a parallel window (kernel-sized window = im2col).
struct LayerScheme {
  bool lowrank = false;
  std::size_t rank = 0;
  std::size_t groups = 1;
  ParallelWindow pw;

  friend bool operator==(const LayerScheme&, const LayerScheme&) = default;
};

struct StageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  MappingKind kind = MappingKind::im2col;
};

struct StageCycles {
  MappingKind kind = MappingKind::im2col;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t ar = 0;
  std::size_t ac = 0;
  std::size_t cycles = 0;
};

struct CycleReport {
  std::vector<StageCycles> stages;
  std::size_t pw_steps = 0;
  std::size_t total = 0;

  std::size_t ar() const { return stages.at(0).ar; }
  std::size_t ac() const { return stages.at(0).ac; }
};

inline bool is_kernel_window(const ConvLayer& layer, const ParallelWindow& pw) {
  return pw.h == layer.kh && pw.w == layer.kw;
}

inline std::size_t pw_steps(const ConvLayer& layer, const ParallelWindow& pw) {
  const WindowGeometry geom = bind_window(layer, pw);
  return ceil_div(layer.oh(), geom.po_h) * ceil_div(layer.ow(), geom.po_w);
}

/// Physical stage shapes for a scheme.
inline std::vector<StageShape> stage_shapes(const ConvLayer& layer, const LayerScheme& scheme) {
  const WindowGeometry geom = bind_window(layer, scheme.pw);
  const std::size_t n_par = geom.parallel_outputs();
  if (!scheme.lowrank) {
    const MappingKind kind = is_kernel_window(layer, scheme.pw) ? MappingKind::im2col : MappingKind::sdk;
    return {{geom.b, n_par * layer.m(), kind}};
  }
  if (scheme.rank < 1 || scheme.groups < 1) throw RankError("low-rank scheme needs rank and groups >= 1");
  const std::size_t inner = n_par * scheme.groups * scheme.rank;
  return {{geom.b, inner, MappingKind::lowrank_stage_r},
          {inner, n_par * layer.m(), MappingKind::lowrank_stage_l}};
}

inline CycleReport cycles_for_stages(const std::vector<StageShape>& shapes, std::size_t steps,
                                     const ArrayConfig& array) {
  array.validate();
  CycleReport rep;
  rep.pw_steps = steps;
  for (const auto& s : shapes) {
    const TileGrid grid = tile_grid(s.rows, s.cols, array);
    rep.stages.push_back({s.kind, s.rows, s.cols, grid.ar, grid.ac, grid.tiles() * steps});
    rep.total += grid.tiles() * steps;
  }
  return rep;
}

inline CycleReport layer_cycles(const ConvLayer& layer, const LayerScheme& scheme,
                                const ArrayConfig& array) {
  return cycles_for_stages(stage_shapes(layer, scheme), pw_steps(layer, scheme.pw), array);
}

/// Cycles for already-built mapped stages (one for uncompressed mappings,
/// stage R then stage L for factored ones).
inline CycleReport layer_cycles(const std::vector<const MappedMatrix*>& mapped,
                                const ConvLayer& layer, const ParallelWindow& pw,
                                const ArrayConfig& array) {
  if (mapped.empty() || mapped.size() > 2) {
    throw DimensionError("layer_cycles: expected one or two mapped stages, got " +
                         std::to_string(mapped.size()));
  }
  const WindowGeometry geom = bind_window(layer, pw);
  const std::size_t n_par = geom.parallel_outputs();
  if (mapped.front()->rows() != geom.b) {
    throw DimensionError("layer_cycles: first stage has " + std::to_string(mapped.front()->rows()) +
                         " rows, window input length is " + std::to_string(geom.b));
  }
  if (mapped.back()->cols() != n_par * layer.m()) {
    throw DimensionError("layer_cycles: last stage has " + std::to_string(mapped.back()->cols()) +
                         " columns, expected " + std::to_string(n_par * layer.m()));
  }
  if (mapped.size() == 2 && mapped[0]->cols() != mapped[1]->rows()) {
    throw DimensionError("layer_cycles: stage shapes " + mapped[0]->values.shape() + " and " +
                         mapped[1]->values.shape() + " do not chain");
  }
  std::vector<StageShape> shapes;
  for (const auto* m : mapped) shapes.push_back({m->rows(), m->cols(), m->kind});
  return cycles_for_stages(shapes, pw_steps(layer, pw), array);
}

/// One entry per descriptor layer; nullopt marks a layer left out of the
/// accounting (the stem conv).
using ResolvedPlan = std::vector<std::optional<LayerScheme>>;

struct LayerCycleEntry {
  std::string name;
  std::optional<LayerScheme> scheme;
  CycleReport report;  // empty for excluded layers
};

struct NetworkCycles {
  std::vector<LayerCycleEntry> layers;
  std::size_t total = 0;
};

inline NetworkCycles network_cycles(const NetworkDescriptor& net, const ResolvedPlan& plan,
                                    const ArrayConfig& array) {
  if (plan.size() != net.layers.size()) {
    throw DimensionError("network_cycles: plan has " + std::to_string(plan.size()) +
                         " entries for " + std::to_string(net.layers.size()) + " layers");
  }
  NetworkCycles out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    LayerCycleEntry e{net.layers[i].name, plan[i], {}};
    if (plan[i]) {
      e.report = layer_cycles(net.layers[i].conv, *plan[i], array);
      out.total += e.report.total;
    }
    out.layers.push_back(std::move(e));
  }
  return out;
}

inline double speedup(std::size_t baseline, std::size_t candidate) {
  if (candidate == 0) throw RangeError("speedup: candidate cycle count is zero");
  return static_cast<double>(baseline) / static_cast<double>(candidate);
}

}  // namespace imclr
