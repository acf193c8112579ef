#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tacsim/fem.hpp"
#include "tacsim/mesh.hpp"

namespace tacsim {

enum class IndenterShape {
  kSphere,
  kFlatRound,
  kFlatSquare,
  kCross,
  kRing,
  kTriangle,
  kHexagon,
};

const char* to_string(IndenterShape shape);
IndenterShape indenter_shape_from_string(const std::string& name);

/// Rigid probe pressed into the elastomer. Which dimensions are active
/// depends on the shape:
///   sphere      radius
///   flat_round  radius
///   flat_square side
///   cross       arm_length, arm_width (two crossed rectangles)
///   ring        radius (outer), inner_radius
///   triangle    radius (circumradius, equilateral, one vertex at +y)
///   hexagon     radius (circumradius, one vertex at +x)
struct Indenter {
  IndenterShape shape = IndenterShape::kFlatRound;
  double radius = 0.0;
  double inner_radius = 0.0;
  double side = 0.0;
  double arm_length = 0.0;
  double arm_width = 0.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double yaw = 0.0;

  void validate() const;
  /// Radius of the bounding circle of the footprint, for fit checks.
  double footprint_radius() const;
};

/// Height of the indenter's lower surface above its lowest point at (x, y),
/// or nullopt when (x, y) is outside the footprint. Flat shapes return 0
/// everywhere inside; the sphere follows the spherical cap.
std::optional<double> indenter_surface_height(const Indenter& indenter,
                                              double x, double y);

struct TrajectorySample {
  double time = 0.0;      // seconds
  double depth = 0.0;     // meters, >= 0
  double offset_x = 0.0;  // added to the indenter pose
  double offset_y = 0.0;
  double yaw = 0.0;       // added to the indenter pose
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double frame_rate = 30.0;

  void validate() const;
  double duration() const {
    return samples.empty() ? 0.0 : samples.back().time;
  }
};

enum class TrajectoryProfile { kPressHoldRelease, kRamp, kMultiPress };

TrajectoryProfile trajectory_profile_from_string(const std::string& name);
const char* to_string(TrajectoryProfile profile);

/// Piecewise-linear depth profile sampled at frame_rate, inclusive of both
/// endpoints. press_hold_release ramps up at `speed`, holds, ramps down;
/// ramp is the triangle without the hold; multi_press repeats the
/// press-hold-release cycle press_count times.
Trajectory make_trajectory(TrajectoryProfile profile, double depth_max,
                           double speed, double hold, double frame_rate,
                           int press_count = 3);

// One row of a stress frame: displaced tet centroid (x, y, z) and its Von
// Mises stress s.
using StressRow = std::array<double, 4>;
using StressFrameData = std::vector<StressRow>;

struct RecordingMeta {
  std::string id;
  std::uint64_t seed = 0;
  std::string note;
};

/// Per-frame stress matrices and the axial force trace of one indentation
/// run, on the simulation timeline.
struct SimRecording {
  std::vector<double> times;
  std::vector<StressFrameData> frames;
  std::vector<double> force_trace;  // newtons, positive pressing down
  std::vector<std::array<double, 2>> contact_xy;  // indenter axis per frame
  double frame_rate = 0.0;
  RecordingMeta meta;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t tet_count() const {
    return frames.empty() ? 0 : frames.front().size();
  }
};

/// Quasi-static indentation run: every frame is an independent linear solve
/// with contact imposed as vertical-projection Dirichlet conditions on the
/// penetrating top-surface nodes. Frames without contact carry zero stress
/// and zero force.
SimRecording run_scenario(const TetMesh& mesh, const NodeSets& node_sets,
                          const MaterialParams& material,
                          const Indenter& indenter, const Trajectory& trajectory,
                          const SolverConfig& solver = {});

struct BatchCell {
  Indenter indenter;
  Trajectory trajectory;
  std::string id;
  std::uint64_t seed = 0;
};

struct BatchConfig {
  std::vector<Indenter> indenters;
  std::vector<std::array<double, 2>> locations;
  std::vector<Trajectory> trajectories;
};

/// Expands the indenter x location x trajectory cross product into
/// individually seeded cells, in config index order (trajectory fastest).
std::vector<BatchCell> enumerate_batch(const BatchConfig& config,
                                       std::uint64_t base_seed);

struct BatchOutcome {
  std::vector<std::string> recorded_ids;
  std::vector<std::pair<std::string, std::string>> failures;  // id, message
};

/// Runs every cell and writes one recording directory per cell plus a batch
/// manifest under out_dir. A failing cell is recorded in the manifest and
/// does not abort the batch.
BatchOutcome batch_generate(const TetMesh& mesh, const NodeSets& node_sets,
                            const MaterialParams& material,
                            const BatchConfig& config,
                            const SolverConfig& solver,
                            const std::string& out_dir,
                            std::uint64_t base_seed);

}  // namespace tacsim
