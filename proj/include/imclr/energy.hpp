#pragma once

// First-order array energy estimate.
//
// For every stage and every PW placement each ceil-tile of the mapped matrix
// is activated once and pays
//
//   e_tile_overhead + rows_active*e_wordline + cols_active*e_adc + occupied*e_cell
//
// where the counts are taken from the occupancy mask restricted to that tile.
// Idle cells cost nothing on their own. Units are arbitrary; the defaults only
// encode the usual ordering (ADC >> wordline drive > cell MAC).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "imclr/array_config.hpp"
#include "imclr/cycles.hpp"
#include "imclr/error.hpp"
#include "imclr/mapping.hpp"
#include "imclr/network.hpp"

namespace imclr {

struct EnergyParams {
  double e_cell = 1.0;
  double e_wordline = 4.0;
  double e_adc = 16.0;
  double e_tile_overhead = 64.0;

  void validate() const {
    if (e_cell < 0 || e_wordline < 0 || e_adc < 0 || e_tile_overhead < 0)
      throw ConfigError("energy parameters must be non-negative");
  }
};

/// Activity counts of one ceil-tile.
struct TileActivity {
  std::size_t rows_active = 0;
  std::size_t cols_active = 0;
  std::size_t occupied = 0;
};

inline std::vector<TileActivity> tile_activity(const Occupancy& occ, const ArrayConfig& array) {
  const TileGrid grid = tile_grid(occ.rows(), occ.cols(), array);
  std::vector<TileActivity> tiles(grid.tiles());
  std::vector<std::uint8_t> col_seen(occ.cols(), 0);
  for (std::size_t tr = 0; tr < grid.ar; ++tr) {
    std::fill(col_seen.begin(), col_seen.end(), std::uint8_t{0});
    const std::size_t r_end = std::min(occ.rows(), (tr + 1) * array.rows);
    for (std::size_t i = tr * array.rows; i < r_end; ++i) {
      for (std::size_t tc = 0; tc < grid.ac; ++tc) {
        const std::size_t c_end = std::min(occ.cols(), (tc + 1) * array.cols);
        std::size_t hits = 0;
        for (std::size_t j = tc * array.cols; j < c_end; ++j)
          if (occ(i, j)) {
            ++hits;
            col_seen[j] = 1;
          }
        auto& t = tiles[tr * grid.ac + tc];
        t.occupied += hits;
        if (hits) ++t.rows_active;
      }
    }
    for (std::size_t tc = 0; tc < grid.ac; ++tc) {
      const std::size_t c_end = std::min(occ.cols(), (tc + 1) * array.cols);
      for (std::size_t j = tc * array.cols; j < c_end; ++j)
        tiles[tr * grid.ac + tc].cols_active += col_seen[j];
    }
  }
  return tiles;
}

/// Energy of one stage over all its placements.
inline double stage_energy(const Occupancy& occ, std::size_t steps, const ArrayConfig& array,
                           const EnergyParams& p) {
  double per_step = 0.0;
  for (const auto& t : tile_activity(occ, array)) {
    per_step += p.e_tile_overhead + static_cast<double>(t.rows_active) * p.e_wordline +
                static_cast<double>(t.cols_active) * p.e_adc +
                static_cast<double>(t.occupied) * p.e_cell;
  }
  return per_step * static_cast<double>(steps);
}

/// Energy of already-mapped stages with the placement count from `report`.
inline double layer_energy(const std::vector<const MappedMatrix*>& mapped, const CycleReport& report,
                           const ArrayConfig& array, const EnergyParams& p) {
  p.validate();
  if (mapped.size() != report.stages.size()) {
    throw DimensionError("layer_energy: " + std::to_string(mapped.size()) + " stages but report has " +
                         std::to_string(report.stages.size()));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (mapped[i]->rows() != report.stages[i].rows || mapped[i]->cols() != report.stages[i].cols)
      throw DimensionError("layer_energy: stage " + std::to_string(i) + " shape differs from report");
    e += stage_energy(mapped[i]->occupancy, report.pw_steps, array, p);
  }
  return e;
}

/// Occupancy masks of every stage a scheme produces, without weight values.
inline std::vector<Occupancy> scheme_occupancy(const ConvLayer& layer, const LayerScheme& scheme) {
  if (!scheme.lowrank) {
    if (is_kernel_window(layer, scheme.pw)) return {im2col_occupancy(layer)};
    return {sdk_occupancy(layer, scheme.pw, 1, layer.m())};
  }
  const WindowGeometry geom = bind_window(layer, scheme.pw);
  return {sdk_occupancy(layer, scheme.pw, scheme.groups, scheme.rank),
          stage_l_occupancy(geom.parallel_outputs(), scheme.groups * scheme.rank, layer.m())};
}

inline double layer_energy(const ConvLayer& layer, const LayerScheme& scheme,
                           const ArrayConfig& array, const EnergyParams& p) {
  p.validate();
  const std::size_t steps = pw_steps(layer, scheme.pw);
  double e = 0.0;
  for (const auto& occ : scheme_occupancy(layer, scheme)) e += stage_energy(occ, steps, array, p);
  return e;
}

struct LayerEnergyEntry {
  std::string name;
  double energy = 0.0;
};

struct EnergyReport {
  std::vector<LayerEnergyEntry> layers;
  double total = 0.0;
  double baseline_total = 0.0;  // im2col, uncompressed, same network and array
  double normalized = 0.0;
};

/// Uncompressed im2col on every compressible layer.
inline ResolvedPlan im2col_baseline_plan(const NetworkDescriptor& net) {
  ResolvedPlan plan;
  for (const auto& l : net.layers) {
    if (l.compressible) plan.push_back(LayerScheme{false, 0, 1, ParallelWindow::kernel_of(l.conv)});
    else plan.push_back(std::nullopt);
  }
  return plan;
}

inline double plan_energy(const NetworkDescriptor& net, const ResolvedPlan& plan,
                          const ArrayConfig& array, const EnergyParams& p,
                          std::vector<LayerEnergyEntry>* layers = nullptr) {
  if (plan.size() != net.layers.size())
    throw DimensionError("network_energy: plan length differs from layer count");
  double total = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const double e = plan[i] ? layer_energy(net.layers[i].conv, *plan[i], array, p) : 0.0;
    if (layers) layers->push_back({net.layers[i].name, e});
    total += e;
  }
  return total;
}

inline EnergyReport network_energy(const NetworkDescriptor& net, const ResolvedPlan& plan,
                                   const ArrayConfig& array, const EnergyParams& p) {
  EnergyReport rep;
  rep.total = plan_energy(net, plan, array, p, &rep.layers);
  rep.baseline_total = plan_energy(net, im2col_baseline_plan(net), array, p);
  if (rep.baseline_total > 0.0) rep.normalized = rep.total / rep.baseline_total;
  else rep.normalized = rep.total > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return rep;
}

}  // namespace imclr
