#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tacsim/classifier.hpp"
#include "tacsim/config.hpp"
#include "tacsim/mesh.hpp"
#include "tacsim/nn.hpp"
#include "tacsim/scenario.hpp"

namespace tacsim {

// Stage entry points behind the CLI subcommands. Every stage is a pure
// function of (config, artifacts on disk): it reads its inputs through the
// dataset layer, writes its outputs there, and returns a summary for the
// caller to print. Missing upstream outputs surface as MissingArtifact.
//
// Layout under config.out_dir:
//   mesh.txt                      block mesh (regenerable from the config)
//   trials/<id>/...               recordings, traces, pairs + manifests
//   trials/manifest.json          batch inventory
//   models/, reports/, renders/   registered in out_dir/manifest.json
//   classify/<arm>/...            labeled sequences + classify/manifest.json

/// The mesh every stage works on; a pure function of the config.
TetMesh config_mesh(const PipelineConfig& config);

/// Taxel centers on the top face, row-major.
std::vector<Vec3> config_taxels(const PipelineConfig& config);

/// Generates the mesh and writes out_dir/mesh.txt.
TetMesh stage_mesh_gen(const PipelineConfig& config);

/// Runs the indenter x location x trajectory batch into out_dir/trials.
BatchOutcome stage_simulate(const PipelineConfig& config);

/// Emulates the sensor for every recorded trial (taxels.csv,
/// force_real.csv). Per-trial noise seed: derive_seed(seed, "oracle", i)
/// over the sorted trial list.
void stage_oracle(const PipelineConfig& config);

/// Warps each trial's sensor trace onto the simulation timeline via DTW on
/// the force traces (warped.csv, warp_path.csv, alignment.json).
void stage_align(const PipelineConfig& config);

/// Builds frame-aligned (stress features, gauge pressure) pairs per trial.
void stage_features(const PipelineConfig& config);

/// Held-out trial ids under the configured eval fraction; the complement
/// trains the regressor. Split seed: derive_seed(seed, "trial_split").
std::vector<std::string> eval_trial_ids(const PipelineConfig& config,
                                        const std::vector<std::string>& ids);

/// Trains the feature -> pressure regressor on the training trials and
/// saves models/taxel_mlp.json plus reports/train.json. Training seed:
/// derive_seed(seed, "train").
TrainReport stage_train(const PipelineConfig& config);

/// Writes the model's predicted trace (predicted.csv) for every trial.
void stage_predict(const PipelineConfig& config);

struct EvalSummary {
  double fidelity_pct = 0.0;       // mean |pred - oracle| / max gauge * 100
  double mean_abs_error_kpa = 0.0;
  double max_gauge_kpa = 0.0;
  std::size_t trial_count = 0;
  std::size_t frame_count = 0;
};

/// Compares predictions against the warped oracle readings on the held-out
/// trials and writes reports/eval.json.
EvalSummary stage_eval(const PipelineConfig& config);

/// Renders oracle vs predicted pressure maps of the peak-force frame of the
/// first held-out trial into renders/ (PGM + CSV, shared value range).
void stage_render(const PipelineConfig& config);

/// simulate -> oracle -> align -> features -> train -> predict -> eval ->
/// render (plus the mesh dump), identical artifacts to running the
/// subcommands manually.
EvalSummary stage_pipeline(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Classification experiment (real-only vs hybrid training data)
// ---------------------------------------------------------------------------

struct ClassifySummary {
  std::vector<std::string> labels;
  EvalResult real_only;
  EvalResult hybrid;
};

/// Generates the per-class training arms (sensor-emulated "real" trials and
/// regressor-generated "sim" trials at random poses), then trains one
/// classifier on the real arm alone and one on real + sim. Pose seeds:
/// derive_seed(seed, "classify.<arm>", class * n + trial); training seeds:
/// derive_seed(seed, "classifier.real" / "classifier.hybrid").
void stage_classify_train(const PipelineConfig& config);

/// Generates the held-out test arm, evaluates both classifiers on it and
/// writes reports/classify.json.
ClassifySummary stage_classify_eval(const PipelineConfig& config);

}  // namespace tacsim
