#include "tacsim/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tacsim/errors.hpp"

using namespace tacsim;

TEST_SUITE("mesh") {

TEST_CASE("unit cube at unit resolution splits into 6 tets of total volume 1") {
  const TetMesh mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1);
  CHECK(mesh.vertex_count() == 8);
  CHECK(mesh.tet_count() == 6);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("block at (8,4,2) has the counted vertices and tets") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 8, 4, 2);
  CHECK(mesh.vertex_count() == 9 * 5 * 3);
  CHECK(mesh.tet_count() == 6 * 64);
  CHECK(mesh.total_volume() ==
        doctest::Approx(0.04 * 0.02 * 0.01).epsilon(1e-12));
}

TEST_CASE("zero resolution is rejected") {
  CHECK_THROWS_AS(generate_box_mesh(1.0, 1.0, 1.0, 0, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_box_mesh(1.0, 0.0, 1.0, 1, 1, 1), InvalidArgument);
}

TEST_CASE("every tet has positive volume") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 4, 3, 2);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t)
    CHECK(mesh.tet_volume(t) > 0.0);
}

TEST_CASE("bottom plane nodes are fixed, 45 of 135") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 8, 4, 2);
  std::vector<Vec3> taxels(8);
  for (std::size_t i = 0; i < 8; ++i)
    taxels[i] = {0.005 + 0.004 * static_cast<double>(i), 0.01, 0.01};
  const NodeSets sets = classify_nodes(mesh, taxels, 0.05);
  CHECK(sets.fixed.size() == 45);
  CHECK(mesh.vertex_count() == 135);
  for (std::size_t n : sets.fixed) CHECK(mesh.vertices[n].z == 0.0);
  for (std::size_t n : sets.top_surface)
    CHECK(mesh.vertices[n].z == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("radius beyond the block diagonal captures the whole top surface") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 8, 4, 2);
  std::vector<Vec3> taxels(8, Vec3{0.02, 0.01, 0.01});
  const NodeSets sets = classify_nodes(mesh, taxels, 1.0);
  const std::set<std::size_t> top(sets.top_surface.begin(),
                                  sets.top_surface.end());
  for (const auto& cluster : sets.taxel_clusters) {
    CHECK(cluster.size() == top.size());
    for (std::size_t n : cluster) CHECK(top.count(n) == 1);
  }
}

TEST_CASE("an empty cluster names the taxel in a configuration error") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 8, 4, 2);
  std::vector<Vec3> taxels(8, Vec3{0.0201, 0.0101, 0.01});
  try {
    classify_nodes(mesh, taxels, 1e-6);
    FAIL("expected ConfigError");
  } catch (const ConfigError& ex) {
    CHECK(std::string(ex.what()).find("0") != std::string::npos);
  }
}

TEST_CASE("text round-trip preserves the mesh exactly") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 3, 2, 2);
  std::stringstream buffer;
  write_tetmesh(mesh, buffer);
  const TetMesh again = read_tetmesh(buffer);
  REQUIRE(again.vertex_count() == mesh.vertex_count());
  REQUIRE(again.tet_count() == mesh.tet_count());
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    CHECK(again.vertices[v].x == mesh.vertices[v].x);
    CHECK(again.vertices[v].y == mesh.vertices[v].y);
    CHECK(again.vertices[v].z == mesh.vertices[v].z);
  }
  CHECK(again.tets == mesh.tets);
  CHECK(again.lx == mesh.lx);

  std::stringstream rewrite;
  write_tetmesh(again, rewrite);
  CHECK(rewrite.str() == buffer.str());
}

TEST_CASE("file round-trip via save/load") {
  tacsim::testing::TempDir tmp("mesh");
  const TetMesh mesh = generate_box_mesh(0.01, 0.01, 0.005, 2, 2, 1);
  save_tetmesh(mesh, tmp.file("mesh.txt"));
  const TetMesh again = load_tetmesh(tmp.file("mesh.txt"));
  CHECK(again.tets == mesh.tets);
  CHECK(again.total_volume() ==
        doctest::Approx(mesh.total_volume()).epsilon(1e-15));
}

}  // TEST_SUITE
