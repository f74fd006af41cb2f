#pragma once

#include <cstddef>
#include <string>

#include "imclr/error.hpp"

namespace imclr {

/// Crossbar dimensions: wordlines (rows) by bitlines (cols).
struct ArrayConfig {
  std::size_t rows = 64;
  std::size_t cols = 64;

  void validate() const {
    if (rows == 0 || cols == 0) throw RangeError("array rows and cols must be at least 1");
  }

  std::string label() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) noexcept { return (a + b - 1) / b; }

/// AR and AC: tiles needed along the rows and columns of a mapped matrix.
struct TileGrid {
  std::size_t ar = 0;
  std::size_t ac = 0;
  std::size_t tiles() const noexcept { return ar * ac; }
};

inline TileGrid tile_grid(std::size_t map_rows, std::size_t map_cols, const ArrayConfig& array) {
  array.validate();
  return {ceil_div(map_rows, array.rows), ceil_div(map_cols, array.cols)};
}

}  // namespace imclr
