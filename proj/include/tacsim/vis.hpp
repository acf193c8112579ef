#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tacsim/vec3.hpp"

namespace tacsim {

/// Rectangular sample grid over the sensor surface; values are gauge
/// pressures in kPa, row-major with row 0 at origin_y.
struct PressureGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  double origin_x = 0.0;  // meters, center of cell (0, 0)
  double origin_y = 0.0;
  double cell_size = 0.0;  // meters
  std::vector<double> values;

  double& at(std::size_t row, std::size_t col) {
    return values[row * width + col];
  }
  double at(std::size_t row, std::size_t col) const {
    return values[row * width + col];
  }
};

enum class RbfMode { kDirect, kExact };

struct RbfOptions {
  double shape_sigma = 0.008;  // meters; default = taxel pitch
  RbfMode mode = RbfMode::kDirect;
  // Weight the basis by (baseline - reading) instead of the default
  // (reading - baseline); flips the map's sign under load.
  bool negated_sign = false;
};

struct GridSpec {
  std::size_t width = 64;
  std::size_t height = 32;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 0.0;
};

/// Gaussian-RBF pressure map from 8 taxel readings. Direct mode sums
/// (p_i - lambda_i) * phi(|x - x_i|); exact mode solves the 8x8 system so
/// the map reproduces the gauge readings at the taxel centers.
PressureGrid rbf_pressure_map(const std::array<double, 8>& readings_kpa,
                              const std::array<double, 8>& baselines_kpa,
                              const std::vector<Vec3>& taxel_positions,
                              const GridSpec& grid, const RbfOptions& options);

/// Evenly spaced grid spec covering [0, lx] x [0, ly] with the requested
/// cell counts (cells centered in their footprint).
GridSpec cover_surface(double lx, double ly, std::size_t width,
                       std::size_t height);

/// Binary 16-bit PGM (P5, big-endian samples), mapping [min, max] linearly
/// to [0, 65535] with clamping.
void export_pgm(const PressureGrid& grid, const std::string& path,
                double range_min, double range_max);

/// Full-precision CSV with a geometry comment; read_grid_csv restores it.
void export_grid_csv(const PressureGrid& grid, const std::string& path);
PressureGrid read_grid_csv(const std::string& path);

}  // namespace tacsim
