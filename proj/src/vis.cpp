#include "tacsim/vis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"

namespace tacsim {

namespace {

double gaussian_rbf(double r, double sigma) {
  return std::exp(-(r * r) / (2.0 * sigma * sigma));
}

}  // namespace

GridSpec cover_surface(double lx, double ly, std::size_t width,
                       std::size_t height) {
  if (!(lx > 0.0) || !(ly > 0.0))
    throw InvalidArgument("surface extents must be positive");
  if (width < 1 || height < 1)
    throw InvalidArgument("grid dimensions must be >= 1");
  GridSpec spec;
  spec.width = width;
  spec.height = height;
  // One square-ish cell size that fits both extents; cells are centered.
  spec.cell_size = std::max(lx / static_cast<double>(width),
                            ly / static_cast<double>(height));
  spec.origin_x = 0.5 * (lx - spec.cell_size * static_cast<double>(width - 1));
  spec.origin_y = 0.5 * (ly - spec.cell_size * static_cast<double>(height - 1));
  return spec;
}

PressureGrid rbf_pressure_map(const std::array<double, 8>& readings_kpa,
                              const std::array<double, 8>& baselines_kpa,
                              const std::vector<Vec3>& taxel_positions,
                              const GridSpec& grid, const RbfOptions& options) {
  if (taxel_positions.size() != 8)
    throw InvalidArgument("expected 8 taxel positions");
  if (!(options.shape_sigma > 0.0))
    throw InvalidArgument("shape_sigma must be positive");
  if (grid.width < 1 || grid.height < 1)
    throw InvalidArgument("grid dimensions must be >= 1");
  if (!(grid.cell_size > 0.0))
    throw InvalidArgument("grid cell size must be positive");

  Eigen::VectorXd gauge(8);
  for (int i = 0; i < 8; ++i) {
    const auto k = static_cast<std::size_t>(i);
    gauge[i] = options.negated_sign
                   ? baselines_kpa[k] - readings_kpa[k]
                   : readings_kpa[k] - baselines_kpa[k];
  }

  Eigen::VectorXd coeff;
  if (options.mode == RbfMode::kDirect) {
    coeff = gauge;
  } else {
    Eigen::MatrixXd phi(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double dx = taxel_positions[static_cast<std::size_t>(i)].x -
                          taxel_positions[static_cast<std::size_t>(j)].x;
        const double dy = taxel_positions[static_cast<std::size_t>(i)].y -
                          taxel_positions[static_cast<std::size_t>(j)].y;
        phi(i, j) = gaussian_rbf(std::sqrt(dx * dx + dy * dy),
                                 options.shape_sigma);
      }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(phi);
    if (!lu.isInvertible())
      throw DegenerateGeometry(
          "RBF system is singular; taxel positions may coincide");
    coeff = lu.solve(gauge);
  }

  PressureGrid out;
  out.width = grid.width;
  out.height = grid.height;
  out.origin_x = grid.origin_x;
  out.origin_y = grid.origin_y;
  out.cell_size = grid.cell_size;
  out.values.resize(grid.width * grid.height);
  for (std::size_t row = 0; row < grid.height; ++row)
    for (std::size_t col = 0; col < grid.width; ++col) {
      const double x = grid.origin_x + grid.cell_size * static_cast<double>(col);
      const double y = grid.origin_y + grid.cell_size * static_cast<double>(row);
      double value = 0.0;
      for (int i = 0; i < 8; ++i) {
        const double dx = x - taxel_positions[static_cast<std::size_t>(i)].x;
        const double dy = y - taxel_positions[static_cast<std::size_t>(i)].y;
        value += coeff[i] *
                 gaussian_rbf(std::sqrt(dx * dx + dy * dy), options.shape_sigma);
      }
      out.at(row, col) = value;
    }
  return out;
}

void export_pgm(const PressureGrid& grid, const std::string& path,
                double range_min, double range_max) {
  if (!(range_max > range_min))
    throw InvalidArgument("PGM range max must exceed min");
  if (grid.values.size() != grid.width * grid.height)
    throw InvalidArgument("grid value count does not match dimensions");

  std::ostringstream out;
  out << "P5\n" << grid.width << " " << grid.height << "\n65535\n";
  const double span = range_max - range_min;
  for (std::size_t row = 0; row < grid.height; ++row)
    for (std::size_t col = 0; col < grid.width; ++col) {
      const double t =
          std::clamp((grid.at(row, col) - range_min) / span, 0.0, 1.0);
      const auto sample = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      out.put(static_cast<char>(sample >> 8));  // big-endian per the standard
      out.put(static_cast<char>(sample & 0xff));
    }
  write_text_file(path, out.str());
}

void export_grid_csv(const PressureGrid& grid, const std::string& path) {
  if (path.empty()) throw InvalidArgument("empty output path");
  if (grid.values.size() != grid.width * grid.height)
    throw InvalidArgument("grid value count does not match dimensions");
  std::ostringstream out;
  out << "# origin_x " << format_double(grid.origin_x) << " origin_y "
      << format_double(grid.origin_y) << " cell_size "
      << format_double(grid.cell_size) << " width " << grid.width << " height "
      << grid.height << "\n";
  for (std::size_t row = 0; row < grid.height; ++row) {
    for (std::size_t col = 0; col < grid.width; ++col) {
      if (col > 0) out << ',';
      out << format_double(grid.at(row, col));
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

PressureGrid read_grid_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string token;
  PressureGrid grid;
  if (!(in >> token) || token != "#")
    throw CorruptionError(path + ": missing grid header");
  auto read_field = [&](const char* name, auto& value) {
    if (!(in >> token) || token != name || !(in >> value))
      throw CorruptionError(path + ": malformed grid header near " +
                            std::string(name));
  };
  read_field("origin_x", grid.origin_x);
  read_field("origin_y", grid.origin_y);
  read_field("cell_size", grid.cell_size);
  read_field("width", grid.width);
  read_field("height", grid.height);
  if (grid.width < 1 || grid.height < 1)
    throw CorruptionError(path + ": grid dimensions must be >= 1");

  grid.values.reserve(grid.width * grid.height);
  std::string line;
  std::getline(in, line);  // finish the header line
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t start = 0;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      try {
        grid.values.push_back(std::stod(line.substr(start, comma - start)));
      } catch (const std::exception&) {
        throw CorruptionError(path + ": unparsable grid value");
      }
      start = comma + 1;
    }
  }
  if (grid.values.size() != grid.width * grid.height)
    throw CorruptionError(path + ": grid value count does not match header");
  return grid;
}

}  // namespace tacsim
