#include "tacsim/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"

using namespace tacsim;

namespace {

Indenter flat_round(double radius) {
  Indenter ind;
  ind.shape = IndenterShape::kFlatRound;
  ind.radius = radius;
  return ind;
}

struct SmallScene {
  TetMesh mesh = generate_box_mesh(0.03, 0.03, 0.01, 6, 6, 2);
  std::vector<Vec3> taxels;
  NodeSets nodes;
  SmallScene() {
    for (std::size_t i = 0; i < 8; ++i)
      taxels.push_back({0.008 + 0.002 * static_cast<double>(i), 0.015, 0.01});
    nodes = classify_nodes(mesh, taxels, 0.02);
  }
};

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("flat round footprint: inside present, outside absent") {
  const Indenter ind = flat_round(0.0125);
  CHECK(indenter_surface_height(ind, 0.0, 0.0).has_value());
  CHECK(*indenter_surface_height(ind, 0.0, 0.0) == 0.0);
  CHECK(!indenter_surface_height(ind, 0.013, 0.0).has_value());
}

TEST_CASE("sphere cap height at half the radius") {
  Indenter ind;
  ind.shape = IndenterShape::kSphere;
  ind.radius = 0.01;
  const double r = ind.radius;
  const auto h = indenter_surface_height(ind, r / 2.0, 0.0);
  REQUIRE(h.has_value());
  CHECK(*h == doctest::Approx(r - std::sqrt(r * r - r * r / 4.0))
                  .epsilon(1e-12));
}

TEST_CASE("ring excludes its hole, cross covers its arms only") {
  Indenter ring;
  ring.shape = IndenterShape::kRing;
  ring.radius = 0.006;
  ring.inner_radius = 0.004;
  CHECK(!indenter_surface_height(ring, 0.0, 0.0).has_value());
  CHECK(indenter_surface_height(ring, 0.005, 0.0).has_value());
  CHECK(!indenter_surface_height(ring, 0.0065, 0.0).has_value());

  Indenter cross;
  cross.shape = IndenterShape::kCross;
  cross.arm_length = 0.012;
  cross.arm_width = 0.004;
  CHECK(indenter_surface_height(cross, 0.0, 0.0).has_value());
  CHECK(indenter_surface_height(cross, 0.0055, 0.0).has_value());
  CHECK(!indenter_surface_height(cross, 0.004, 0.004).has_value());
}

TEST_CASE("yaw rotates the footprint") {
  Indenter sq;
  sq.shape = IndenterShape::kFlatSquare;
  sq.side = 0.008;
  // Corner direction: inside when aligned, outside after rotating 45 deg.
  CHECK(indenter_surface_height(sq, 0.0039, 0.0039).has_value());
  sq.yaw = 0.7853981633974483;
  CHECK(!indenter_surface_height(sq, 0.0039, 0.0039).has_value());
}

TEST_CASE("press_hold_release at 10 Hz yields 31 inclusive samples") {
  const Trajectory traj = make_trajectory(TrajectoryProfile::kPressHoldRelease,
                                          0.002, 0.002, 1.0, 10.0);
  CHECK(traj.samples.size() == 31);
  CHECK(traj.samples.front().depth == 0.0);
  CHECK(traj.samples.back().depth == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(traj.samples.front().time == 0.0);
  CHECK(traj.samples.back().time == doctest::Approx(3.0));
}

TEST_CASE("ramp is a triangle peaking at the midpoint") {
  const Trajectory traj =
      make_trajectory(TrajectoryProfile::kRamp, 0.002, 0.002, 0.0, 10.0);
  const std::size_t n = traj.samples.size();
  REQUIRE(n == 21);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (traj.samples[k].depth > traj.samples[peak].depth) peak = k;
  CHECK(peak == (n - 1) / 2);
  CHECK(traj.samples[peak].depth == doctest::Approx(0.002));
}

TEST_CASE("zero depth profile produces zero stress and zero force") {
  SmallScene scene;
  Trajectory traj;
  traj.frame_rate = 10.0;
  for (int k = 0; k < 5; ++k)
    traj.samples.push_back({k / 10.0, 0.0, 0.0, 0.0, 0.0});
  Indenter ind = flat_round(0.006);
  ind.offset_x = 0.015;
  ind.offset_y = 0.015;
  const SimRecording rec =
      run_scenario(scene.mesh, scene.nodes, MaterialParams{}, ind, traj);
  REQUIRE(rec.frame_count() == 5);
  for (std::size_t t = 0; t < rec.frame_count(); ++t) {
    CHECK(rec.force_trace[t] == 0.0);
    for (const auto& row : rec.frames[t]) CHECK(row[3] == 0.0);
  }
}

TEST_CASE("monotone press gives a non-decreasing force trace") {
  SmallScene scene;
  Trajectory traj;
  traj.frame_rate = 20.0;
  for (int k = 0; k <= 10; ++k)
    traj.samples.push_back({k / 20.0, 0.002 * k / 10.0, 0.0, 0.0, 0.0});
  Indenter ind = flat_round(0.007);
  ind.offset_x = 0.015;
  ind.offset_y = 0.015;
  const SimRecording rec =
      run_scenario(scene.mesh, scene.nodes, MaterialParams{}, ind, traj);
  for (std::size_t t = 1; t < rec.frame_count(); ++t)
    CHECK(rec.force_trace[t] >= rec.force_trace[t - 1] - 1e-9);
  CHECK(rec.force_trace.back() > 0.0);
}

TEST_CASE("doubling depth doubles peak force while the contact set is fixed") {
  SmallScene scene;
  auto run_at = [&](double depth) {
    Trajectory traj;
    traj.frame_rate = 10.0;
    for (int k = 0; k <= 4; ++k)
      traj.samples.push_back({k / 10.0, depth * k / 4.0, 0.0, 0.0, 0.0});
    Indenter ind = flat_round(0.007);
    ind.offset_x = 0.015;
    ind.offset_y = 0.015;
    const SimRecording rec =
        run_scenario(scene.mesh, scene.nodes, MaterialParams{}, ind, traj);
    return rec.force_trace.back();
  };
  const double f1 = run_at(0.0008);
  const double f2 = run_at(0.0016);
  CHECK(f1 > 0.0);
  CHECK(f2 / f1 == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("contact track follows the contacting nodes") {
  SmallScene scene;
  Trajectory traj;
  traj.frame_rate = 10.0;
  traj.samples.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
  traj.samples.push_back({0.1, 0.0015, 0.0, 0.0, 0.0});
  Indenter ind = flat_round(0.006);
  ind.offset_x = 0.02;
  ind.offset_y = 0.015;
  const SimRecording rec =
      run_scenario(scene.mesh, scene.nodes, MaterialParams{}, ind, traj);
  REQUIRE(rec.contact_xy.size() == 2);
  // Contacting frame: centroid of the contacted lattice nodes, near the axis.
  CHECK(rec.contact_xy[1][0] == doctest::Approx(0.02).epsilon(0.15));
  CHECK(rec.contact_xy[1][1] == doctest::Approx(0.015).epsilon(0.15));
}

TEST_CASE("too-deep trajectory violates the small-strain precondition") {
  SmallScene scene;
  Trajectory traj;
  traj.frame_rate = 10.0;
  traj.samples.push_back({0.0, 0.0, 0.0, 0.0, 0.0});
  traj.samples.push_back({0.1, 0.006, 0.0, 0.0, 0.0});  // 60% of height
  Indenter ind = flat_round(0.006);
  ind.offset_x = 0.015;
  ind.offset_y = 0.015;
  CHECK_THROWS_AS(
      run_scenario(scene.mesh, scene.nodes, MaterialParams{}, ind, traj),
      InvalidArgument);
}

TEST_CASE("batch enumerates the cross product, trajectory fastest") {
  BatchConfig config;
  config.indenters = {flat_round(0.005), flat_round(0.006)};
  config.locations = {{0.01, 0.015}, {0.015, 0.015}, {0.02, 0.015}};
  config.trajectories = {
      make_trajectory(TrajectoryProfile::kRamp, 0.001, 0.004, 0.0, 10.0),
      make_trajectory(TrajectoryProfile::kRamp, 0.0012, 0.004, 0.0, 10.0)};
  const auto cells = enumerate_batch(config, 99);
  REQUIRE(cells.size() == 12);
  CHECK(cells[0].trajectory.samples.size() ==
        config.trajectories[0].samples.size());
  CHECK(cells[1].trajectory.samples.size() ==
        config.trajectories[1].samples.size());
  CHECK(cells[0].indenter.offset_x == 0.01);
  CHECK(cells[2].indenter.offset_x == 0.015);
  std::set<std::string> ids;
  std::set<std::uint64_t> seeds;
  for (const auto& cell : cells) {
    ids.insert(cell.id);
    seeds.insert(cell.seed);
  }
  CHECK(ids.size() == 12);
  CHECK(seeds.size() == 12);
}

TEST_CASE("batch writes 12 recordings and reruns byte-identically") {
  tacsim::testing::TempDir tmp("batch");
  SmallScene scene;
  BatchConfig config;
  config.indenters = {flat_round(0.005), flat_round(0.006)};
  config.locations = {{0.012, 0.015}, {0.015, 0.015}, {0.018, 0.015}};
  config.trajectories = {
      make_trajectory(TrajectoryProfile::kRamp, 0.001, 0.01, 0.0, 10.0),
      make_trajectory(TrajectoryProfile::kRamp, 0.0012, 0.01, 0.0, 10.0)};

  const std::string dir_a = tmp.file("a");
  const BatchOutcome outcome =
      batch_generate(scene.mesh, scene.nodes, MaterialParams{}, config,
                     SolverConfig{}, dir_a, 7);
  CHECK(outcome.recorded_ids.size() == 12);
  CHECK(outcome.failures.empty());
  CHECK(read_batch_ids(dir_a).size() == 12);

  const std::string dir_b = tmp.file("b");
  batch_generate(scene.mesh, scene.nodes, MaterialParams{}, config,
                 SolverConfig{}, dir_b, 7);
  for (const auto& id : outcome.recorded_ids) {
    CHECK(digest_file(dir_a + "/" + id + "/frames.bin") ==
          digest_file(dir_b + "/" + id + "/frames.bin"));
    CHECK(digest_file(dir_a + "/" + id + "/force_sim.csv") ==
          digest_file(dir_b + "/" + id + "/force_sim.csv"));
  }
}

TEST_CASE("empty indenter list produces an empty manifest and succeeds") {
  tacsim::testing::TempDir tmp("batch-empty");
  SmallScene scene;
  BatchConfig config;
  config.locations = {{0.015, 0.015}};
  config.trajectories = {
      make_trajectory(TrajectoryProfile::kRamp, 0.001, 0.01, 0.0, 10.0)};
  const BatchOutcome outcome =
      batch_generate(scene.mesh, scene.nodes, MaterialParams{}, config,
                     SolverConfig{}, tmp.file("out"), 7);
  CHECK(outcome.recorded_ids.empty());
  CHECK(outcome.failures.empty());
  CHECK(read_batch_ids(tmp.file("out")).empty());
}

}  // TEST_SUITE
