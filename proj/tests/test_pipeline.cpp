#include "tacsim/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"

using namespace tacsim;
namespace fs = std::filesystem;

namespace {

// A deliberately small end-to-end configuration: 2 trials, a coarse mesh
// and a few training epochs, so every stage still runs in well under a
// second.
PipelineConfig tiny_config(const std::string& out_dir) {
  PipelineConfig config;
  config.mesh_lx = 0.032;
  config.mesh_ly = 0.016;
  config.mesh_lz = 0.008;
  config.mesh_nx = 8;
  config.mesh_ny = 4;
  config.mesh_nz = 2;
  config.taxel_rows = 2;
  config.taxel_cols = 4;
  config.taxel_pitch = 0.008;
  config.cluster_radius = 0.005;
  config.top_fraction = 0.5;
  config.oracle.baselines_kpa = {101.3, 101.5, 101.2, 101.6,
                                 101.4, 101.1, 101.7, 101.4};
  config.train.max_epochs = 8;
  config.train.batch_size = 16;
  config.train.seed = 0;
  config.hidden = {8};
  config.eval_fraction = 0.5;

  Indenter indenter;
  indenter.shape = IndenterShape::kFlatRound;
  indenter.radius = 0.004;
  config.indenters = {indenter};
  config.locations = {{0.016, 0.008}, {0.012, 0.008}};
  config.trajectories = {make_trajectory(TrajectoryProfile::kPressHoldRelease,
                                         0.001, 0.004, 0.2, 20.0)};
  config.seed = 7;
  config.out_dir = out_dir;
  return config;
}

std::map<std::string, std::string> digest_tree(const std::string& root) {
  std::map<std::string, std::string> digests;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel =
        fs::relative(entry.path(), root).generic_string();
    digests[rel] = digest_hex(digest_file(entry.path().string()));
  }
  return digests;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("mesh and taxel layout are pure functions of the config") {
  const PipelineConfig config = tiny_config("unused");
  const TetMesh mesh = config_mesh(config);
  CHECK(mesh.tet_count() == 8 * 4 * 2 * 6);
  const std::vector<Vec3> taxels = config_taxels(config);
  REQUIRE(taxels.size() == 8);
  double cx = 0.0, cy = 0.0;
  for (const Vec3& t : taxels) {
    CHECK(t.z == config.mesh_lz);
    cx += t.x / 8.0;
    cy += t.y / 8.0;
  }
  CHECK(cx == doctest::Approx(config.mesh_lx / 2.0).epsilon(1e-12));
  CHECK(cy == doctest::Approx(config.mesh_ly / 2.0).epsilon(1e-12));
}

TEST_CASE("held-out trial selection is a deterministic subset") {
  const PipelineConfig config = tiny_config("unused");
  const std::vector<std::string> ids = {"t0", "t1", "t2", "t3"};
  const std::vector<std::string> held = eval_trial_ids(config, ids);
  CHECK(held.size() == 2);  // eval_fraction 0.5 of 4
  for (const std::string& id : held)
    CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
  CHECK(eval_trial_ids(config, ids) == held);
}

TEST_CASE("stages refuse to run ahead of their inputs") {
  tacsim::testing::TempDir tmp("order");
  PipelineConfig config = tiny_config(tmp.str());

  CHECK_THROWS_AS(stage_oracle(config), MissingArtifact);
  CHECK_THROWS_AS(stage_train(config), MissingArtifact);

  stage_simulate(config);
  try {
    stage_align(config);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& ex) {
    CHECK(ex.kind == kKindTaxelTrace);
  }

  stage_oracle(config);
  try {
    stage_features(config);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& ex) {
    CHECK(ex.kind == "warped_taxels");
  }

  stage_align(config);
  CHECK_THROWS_AS(stage_train(config), MissingArtifact);  // pairs missing
  stage_features(config);
  CHECK_THROWS_AS(stage_predict(config), MissingArtifact);  // model missing
  stage_train(config);
  stage_predict(config);
  const EvalSummary summary = stage_eval(config);
  CHECK(summary.trial_count == 1);
  CHECK(summary.fidelity_pct >= 0.0);
}

TEST_CASE("full pipeline writes the documented tree and reruns identically") {
  tacsim::testing::TempDir tmp_a("pipe-a");
  tacsim::testing::TempDir tmp_b("pipe-b");
  const EvalSummary first = stage_pipeline(tiny_config(tmp_a.str()));
  const EvalSummary second = stage_pipeline(tiny_config(tmp_b.str()));

  CHECK(first.trial_count == 1);
  CHECK(first.frame_count > 0);
  CHECK(first.max_gauge_kpa > 0.0);
  CHECK(first.fidelity_pct == second.fidelity_pct);
  CHECK(first.mean_abs_error_kpa == second.mean_abs_error_kpa);

  for (const char* rel :
       {"mesh.txt", "trials/manifest.json", "models/taxel_mlp.json",
        "reports/train.json", "reports/eval.json", "manifest.json"}) {
    CHECK(fs::exists(tmp_a.path() / rel));
  }
  CHECK(fs::exists(tmp_a.path() / "renders"));
  CHECK(!fs::is_empty(tmp_a.path() / "renders"));

  // The out_dir manifest indexes the model and verifies its digest.
  const ManifestEntry model = require_artifact(tmp_a.str(), kKindModel);
  CHECK(model.path == "models/taxel_mlp.json");

  // Same config, fresh directory: every artifact byte-identical.
  const auto tree_a = digest_tree(tmp_a.str());
  const auto tree_b = digest_tree(tmp_b.str());
  CHECK(tree_a.size() == tree_b.size());
  CHECK(tree_a == tree_b);

  SUBCASE("a different seed changes the artifacts") {
    tacsim::testing::TempDir tmp_c("pipe-c");
    PipelineConfig other = tiny_config(tmp_c.str());
    other.seed = 8;
    stage_pipeline(other);
    CHECK(digest_tree(tmp_c.str()) != tree_a);
  }
}

TEST_CASE("config files parse into the documented fields") {
  tacsim::testing::TempDir tmp("cfg");
  const std::string body = R"({
  "schema_version": 1,
  "seed": 11,
  "out_dir": "out/unit",
  "mesh": {"lx_m": 0.032, "ly_m": 0.016, "lz_m": 0.008, "nx": 8, "ny": 4, "nz": 2},
  "material": {"young_modulus_pa": 90000.0, "poisson_ratio": 0.4},
  "solver": {"tolerance": 1e-9, "max_iterations": 500},
  "taxels": {"rows": 2, "cols": 4, "pitch_m": 0.008, "cluster_radius_m": 0.005, "top_fraction": 0.5},
  "oracle": {"baselines_kpa": [101.3, 101.5, 101.2, 101.6, 101.4, 101.1, 101.7, 101.4]},
  "alignment": {"normalize": "zscore", "reduce": "mean"},
  "train": {"hidden": [8], "eval_trial_fraction": 0.5, "max_epochs": 8},
  "indenters": [
    {"shape": "flat_round", "radius_m": 0.004},
    {"shape": "flat_square", "side_m": 0.006, "yaw_rad": 0.3}
  ],
  "locations": [[0.016, 0.008]],
  "trajectories": [
    {"profile": "ramp", "depth_m": 0.001, "speed_m_per_s": 0.004, "frame_rate_hz": 20.0}
  ]
})";
  write_text_file(tmp.file("unit.json"), body);
  const PipelineConfig config = load_pipeline_config(tmp.file("unit.json"));
  CHECK(config.seed == 11);
  CHECK(config.mesh_nx == 8);
  CHECK(config.material.young_modulus == 90000.0);
  CHECK(config.material.poisson_ratio == 0.4);
  CHECK(config.solver.max_iterations == 500);
  CHECK(config.eval_fraction == 0.5);
  CHECK(config.train.max_epochs == 8);
  CHECK(config.hidden == std::vector<std::size_t>{8});
  REQUIRE(config.indenters.size() == 2);
  CHECK(config.indenters[0].shape == IndenterShape::kFlatRound);
  CHECK(config.indenters[0].radius == 0.004);
  CHECK(config.indenters[0].yaw == 0.0);
  CHECK(config.indenters[1].shape == IndenterShape::kFlatSquare);
  CHECK(config.indenters[1].side == 0.006);
  CHECK(config.indenters[1].yaw == 0.3);
  REQUIRE(config.trajectories.size() == 1);
  CHECK(config.trajectories[0].frame_rate == 20.0);
  CHECK(config.oracle.sensitivity_kpa_per_n == 7.24);  // default preserved

  SUBCASE("unknown keys are rejected") {
    const std::string bogus =
        body.substr(0, body.size() - 2) + ",\n  \"bogus\": 1\n}";
    write_text_file(tmp.file("bogus.json"), bogus);
    CHECK_THROWS_AS(load_pipeline_config(tmp.file("bogus.json")), ConfigError);
  }
  SUBCASE("unknown indenter shapes are rejected") {
    std::string bad = body;
    bad.replace(bad.find("flat_round"), 10, "flat_blob!");
    write_text_file(tmp.file("bad.json"), bad);
    CHECK_THROWS_AS(load_pipeline_config(tmp.file("bad.json")), ConfigError);
  }
  SUBCASE("unsupported schema versions are rejected") {
    std::string bad = body;
    bad.replace(bad.find("\"schema_version\": 1"), 19,
                "\"schema_version\": 9");
    write_text_file(tmp.file("schema.json"), bad);
    CHECK_THROWS_AS(load_pipeline_config(tmp.file("schema.json")),
                    ConfigError);
  }
}

}  // TEST_SUITE
