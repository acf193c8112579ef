#include "tacsim/vis.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"

using namespace tacsim;

namespace {

// 2 x 4 taxel layout at 8 mm pitch on the top face.
std::vector<Vec3> grid_taxels() {
  std::vector<Vec3> taxels;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      taxels.push_back(Vec3{0.004 + 0.008 * static_cast<double>(c),
                            0.006 + 0.008 * static_cast<double>(r), 0.01});
  return taxels;
}

const std::array<double, 8> kBaselines = {101.3, 101.5, 101.2, 101.6,
                                          101.4, 101.1, 101.7, 101.4};

// Grid whose cell centers coincide with the taxel centers.
GridSpec taxel_center_grid() {
  GridSpec grid;
  grid.width = 4;
  grid.height = 2;
  grid.origin_x = 0.004;
  grid.origin_y = 0.006;
  grid.cell_size = 0.008;
  return grid;
}

}  // namespace

TEST_SUITE("vis") {

TEST_CASE("cover_surface centers cells in their footprint") {
  const GridSpec grid = cover_surface(0.032, 0.024, 4, 3);
  CHECK(grid.width == 4);
  CHECK(grid.height == 3);
  CHECK(grid.cell_size == doctest::Approx(0.008).epsilon(1e-12));
  CHECK(grid.origin_x == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(grid.origin_y == doctest::Approx(0.004).epsilon(1e-12));
}

TEST_CASE("exact mode reproduces the gauge readings at the taxel centers") {
  std::array<double, 8> readings = kBaselines;
  readings[0] += 4.0;
  readings[3] -= 1.5;
  readings[5] += 0.25;
  RbfOptions options;
  options.mode = RbfMode::kExact;
  const PressureGrid map = rbf_pressure_map(readings, kBaselines, grid_taxels(),
                                            taxel_center_grid(), options);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const std::size_t i = r * 4 + c;
      CHECK(std::abs(map.at(r, c) - (readings[i] - kBaselines[i])) < 1e-9);
    }
}

TEST_CASE("zero load maps to an identically zero grid") {
  for (const RbfMode mode : {RbfMode::kDirect, RbfMode::kExact}) {
    RbfOptions options;
    options.mode = mode;
    const PressureGrid map =
        rbf_pressure_map(kBaselines, kBaselines, grid_taxels(),
                         cover_surface(0.032, 0.016, 16, 8), options);
    for (const double v : map.values) CHECK(v == 0.0);
  }
}

TEST_CASE("direct mode is a plain gaussian superposition") {
  std::array<double, 8> readings = kBaselines;
  readings[0] += 5.0;  // only taxel 0 carries load
  RbfOptions options;  // direct, sigma 0.008

  SUBCASE("value at one sigma from the loaded taxel") {
    GridSpec probe;
    probe.width = 1;
    probe.height = 1;
    probe.origin_x = 0.004 + options.shape_sigma;
    probe.origin_y = 0.006;
    probe.cell_size = 0.001;
    const PressureGrid map =
        rbf_pressure_map(readings, kBaselines, grid_taxels(), probe, options);
    CHECK(map.at(0, 0) ==
          doctest::Approx(5.0 * std::exp(-0.5)).epsilon(1e-12));
    CHECK(map.at(0, 0) == doctest::Approx(3.032653298563167).epsilon(1e-12));
  }
  SUBCASE("mirror symmetry about the loaded taxel") {
    GridSpec probe;
    probe.width = 3;
    probe.height = 1;
    probe.origin_x = 0.004 - 0.003;
    probe.origin_y = 0.006;
    probe.cell_size = 0.003;
    const PressureGrid map =
        rbf_pressure_map(readings, kBaselines, grid_taxels(), probe, options);
    CHECK(std::abs(map.at(0, 0) - map.at(0, 2)) < 1e-12);
    CHECK(map.at(0, 1) > map.at(0, 0));
  }
  SUBCASE("map is linear in the gauge reading") {
    std::array<double, 8> twice = kBaselines;
    twice[0] += 10.0;
    const GridSpec grid = cover_surface(0.032, 0.016, 8, 4);
    const PressureGrid one =
        rbf_pressure_map(readings, kBaselines, grid_taxels(), grid, options);
    const PressureGrid two =
        rbf_pressure_map(twice, kBaselines, grid_taxels(), grid, options);
    for (std::size_t k = 0; k < one.values.size(); ++k)
      CHECK(std::abs(two.values[k] - 2.0 * one.values[k]) < 1e-12);
  }
  SUBCASE("negated sign flips the map") {
    const GridSpec grid = cover_surface(0.032, 0.016, 8, 4);
    RbfOptions flipped = options;
    flipped.negated_sign = true;
    const PressureGrid plus =
        rbf_pressure_map(readings, kBaselines, grid_taxels(), grid, options);
    const PressureGrid minus =
        rbf_pressure_map(readings, kBaselines, grid_taxels(), grid, flipped);
    for (std::size_t k = 0; k < plus.values.size(); ++k)
      CHECK(std::abs(plus.values[k] + minus.values[k]) < 1e-12);
  }
}

TEST_CASE("narrow kernels make direct and exact modes agree at the centers") {
  std::array<double, 8> readings = kBaselines;
  readings[1] += 3.0;
  readings[6] += 7.0;
  RbfOptions direct;
  direct.shape_sigma = 0.0015;
  RbfOptions exact = direct;
  exact.mode = RbfMode::kExact;
  const GridSpec grid = taxel_center_grid();
  const PressureGrid a =
      rbf_pressure_map(readings, kBaselines, grid_taxels(), grid, direct);
  const PressureGrid b =
      rbf_pressure_map(readings, kBaselines, grid_taxels(), grid, exact);
  for (std::size_t k = 0; k < a.values.size(); ++k)
    CHECK(std::abs(a.values[k] - b.values[k]) < 1e-4);
}

TEST_CASE("pgm export is 16-bit big-endian with clamping") {
  tacsim::testing::TempDir tmp("pgm");

  SUBCASE("min maps to 0, max to 65535, outside clamps") {
    PressureGrid grid;
    grid.width = 2;
    grid.height = 2;
    grid.cell_size = 0.001;
    grid.values = {0.0, 10.0, -5.0, 12.0};
    export_pgm(grid, tmp.file("map.pgm"), 0.0, 10.0);
    const std::vector<unsigned char> bytes =
        read_binary_file(tmp.file("map.pgm"));
    const std::string text(bytes.begin(), bytes.end());
    CHECK(text.rfind("P5", 0) == 0);
    CHECK(text.find("2 2") != std::string::npos);
    CHECK(text.find("65535") != std::string::npos);
    REQUIRE(bytes.size() >= 8);
    const std::size_t data = bytes.size() - 8;  // 4 samples x 2 bytes
    auto sample = [&](std::size_t k) {
      return (static_cast<unsigned>(bytes[data + 2 * k]) << 8) |
             static_cast<unsigned>(bytes[data + 2 * k + 1]);
    };
    CHECK(sample(0) == 0u);
    CHECK(sample(1) == 65535u);
    CHECK(sample(2) == 0u);      // clamped below
    CHECK(sample(3) == 65535u);  // clamped above
  }
  SUBCASE("byte order is big-endian") {
    PressureGrid grid;
    grid.width = 1;
    grid.height = 1;
    grid.cell_size = 0.001;
    grid.values = {258.0};
    export_pgm(grid, tmp.file("be.pgm"), 0.0, 65535.0);
    const std::vector<unsigned char> bytes =
        read_binary_file(tmp.file("be.pgm"));
    REQUIRE(bytes.size() >= 2);
    CHECK(bytes[bytes.size() - 2] == 0x01);
    CHECK(bytes[bytes.size() - 1] == 0x02);
  }
}

TEST_CASE("grid csv round-trips geometry and values") {
  PressureGrid grid;
  grid.width = 2;
  grid.height = 2;
  grid.origin_x = 0.0005;
  grid.origin_y = 0.00075;
  grid.cell_size = 0.000625;
  grid.values = {1.25, -3.5, 1e-7, 42.0};
  tacsim::testing::TempDir tmp("gridcsv");
  export_grid_csv(grid, tmp.file("grid.csv"));
  const PressureGrid back = read_grid_csv(tmp.file("grid.csv"));
  CHECK(back.width == grid.width);
  CHECK(back.height == grid.height);
  CHECK(back.origin_x == grid.origin_x);
  CHECK(back.origin_y == grid.origin_y);
  CHECK(back.cell_size == grid.cell_size);
  REQUIRE(back.values.size() == grid.values.size());
  for (std::size_t k = 0; k < grid.values.size(); ++k)
    CHECK(back.values[k] == grid.values[k]);

  CHECK_THROWS_AS(read_grid_csv(tmp.file("absent.csv")), IoError);
}

}  // TEST_SUITE
