#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tacsim/align.hpp"
#include "tacsim/classifier.hpp"
#include "tacsim/fem.hpp"
#include "tacsim/nn.hpp"
#include "tacsim/scenario.hpp"
#include "tacsim/sensor_oracle.hpp"
#include "tacsim/vec3.hpp"

namespace tacsim {

/// Everything one end-to-end run needs, parsed and validated up front from
/// a single JSON file (schema documented in the repository).
struct PipelineConfig {
  // Elastomer block and its mesh resolution.
  double mesh_lx = 0.040, mesh_ly = 0.024, mesh_lz = 0.010;
  int mesh_nx = 10, mesh_ny = 5, mesh_nz = 5;

  MaterialParams material;
  SolverConfig solver;

  // Taxel layout: rows x cols grid at pitch, centered on the top face.
  int taxel_rows = 2, taxel_cols = 4;
  double taxel_pitch = 0.008;
  double cluster_radius = 0.004;
  double top_fraction = 0.3;

  OracleParams oracle;

  DtwNormalize align_normalize = DtwNormalize::kZScore;
  WarpReduce align_reduce = WarpReduce::kMean;

  double epsilon_floor = 1e-6;

  // Regressor training plus its hidden layer widths.
  TrainConfig train;
  std::vector<std::size_t> hidden = {64, 64};
  double eval_fraction = 0.2;  // held-out trial fraction for fidelity eval

  // Classifier experiment.
  ClassifierConfig classifier;
  TrainConfig classifier_train;
  int real_trials_per_class = 20;
  int test_trials_per_class = 20;
  int sim_trials_per_class = 96;
  // Pose ranges the per-trial sampler draws from (uniform).
  double pose_max_offset = 0.004;  // meters from block center, each axis
  double pose_min_depth = 0.0012, pose_max_depth = 0.0022;
  double pose_max_yaw = 0.6;  // radians

  // Data generation for the regressor: indenters x locations x trajectories.
  std::vector<Indenter> indenters;
  std::vector<std::array<double, 2>> locations;
  std::vector<Trajectory> trajectories;

  // Render options.
  std::size_t render_width = 64, render_height = 32;
  double rbf_sigma = 0.008;
  bool rbf_exact = false;
  bool rbf_negated_sign = false;

  std::uint64_t seed = 0;
  std::string out_dir = "out";

  void validate() const;  // throws ConfigError with the offending field
};

/// Parses and validates a config file. Parse errors and invalid values
/// throw ConfigError naming the field.
PipelineConfig load_pipeline_config(const std::string& path);

/// rows x cols taxel centers at the given pitch, centered on the top face
/// of an lx x ly x lz block, row-major (rows along y, columns along x).
std::vector<Vec3> make_taxel_grid(double lx, double ly, double lz, int rows,
                                  int cols, double pitch);

const char* to_string(DtwNormalize mode);
const char* to_string(WarpReduce reduce);

}  // namespace tacsim
