#include "tacsim/scenario.hpp"

#include <cmath>
#include <cstdio>

#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/rng.hpp"

namespace tacsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool point_in_convex_polygon(const std::vector<std::array<double, 2>>& poly,
                             double x, double y) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double cross =
        (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
    if (cross < 0.0) return false;
  }
  return true;
}

std::vector<std::array<double, 2>> regular_polygon(int n, double circumradius,
                                                   double phase) {
  std::vector<std::array<double, 2>> poly(n);
  for (int k = 0; k < n; ++k) {
    const double a = phase + 2.0 * kPi * k / n;
    poly[k] = {circumradius * std::cos(a), circumradius * std::sin(a)};
  }
  return poly;
}

}  // namespace

const char* to_string(IndenterShape shape) {
  switch (shape) {
    case IndenterShape::kSphere: return "sphere";
    case IndenterShape::kFlatRound: return "flat_round";
    case IndenterShape::kFlatSquare: return "flat_square";
    case IndenterShape::kCross: return "cross";
    case IndenterShape::kRing: return "ring";
    case IndenterShape::kTriangle: return "triangle";
    case IndenterShape::kHexagon: return "hexagon";
  }
  return "unknown";
}

IndenterShape indenter_shape_from_string(const std::string& name) {
  if (name == "sphere") return IndenterShape::kSphere;
  if (name == "flat_round") return IndenterShape::kFlatRound;
  if (name == "flat_square") return IndenterShape::kFlatSquare;
  if (name == "cross") return IndenterShape::kCross;
  if (name == "ring") return IndenterShape::kRing;
  if (name == "triangle") return IndenterShape::kTriangle;
  if (name == "hexagon") return IndenterShape::kHexagon;
  throw ConfigError("unknown indenter shape: " + name);
}

void Indenter::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0))
      throw InvalidArgument(std::string(what) + " must be positive");
  };
  switch (shape) {
    case IndenterShape::kSphere:
    case IndenterShape::kFlatRound:
      positive(radius, "radius");
      break;
    case IndenterShape::kFlatSquare:
      positive(side, "side");
      break;
    case IndenterShape::kCross:
      positive(arm_length, "arm_length");
      positive(arm_width, "arm_width");
      if (arm_width > arm_length)
        throw InvalidArgument("cross arm_width must not exceed arm_length");
      break;
    case IndenterShape::kRing:
      positive(radius, "radius");
      positive(inner_radius, "inner_radius");
      if (inner_radius >= radius)
        throw InvalidArgument("ring inner_radius must be below outer radius");
      break;
    case IndenterShape::kTriangle:
    case IndenterShape::kHexagon:
      positive(radius, "radius");
      break;
  }
}

double Indenter::footprint_radius() const {
  switch (shape) {
    case IndenterShape::kSphere:
    case IndenterShape::kFlatRound:
    case IndenterShape::kRing:
    case IndenterShape::kTriangle:
    case IndenterShape::kHexagon:
      return radius;
    case IndenterShape::kFlatSquare:
      return side * 0.5 * std::sqrt(2.0);
    case IndenterShape::kCross:
      return 0.5 * std::hypot(arm_length, arm_width);
  }
  return 0.0;
}

std::optional<double> indenter_surface_height(const Indenter& ind, double x,
                                              double y) {
  // Query point in the indenter frame (undo pose offset, then yaw).
  const double dx = x - ind.offset_x;
  const double dy = y - ind.offset_y;
  const double c = std::cos(ind.yaw);
  const double s = std::sin(ind.yaw);
  const double qx = c * dx + s * dy;
  const double qy = -s * dx + c * dy;
  const double rho = std::hypot(qx, qy);

  switch (ind.shape) {
    case IndenterShape::kSphere:
      if (rho > ind.radius) return std::nullopt;
      return ind.radius - std::sqrt(ind.radius * ind.radius - rho * rho);
    case IndenterShape::kFlatRound:
      if (rho > ind.radius) return std::nullopt;
      return 0.0;
    case IndenterShape::kFlatSquare:
      if (std::abs(qx) > ind.side * 0.5 || std::abs(qy) > ind.side * 0.5)
        return std::nullopt;
      return 0.0;
    case IndenterShape::kCross: {
      const double hl = ind.arm_length * 0.5;
      const double hw = ind.arm_width * 0.5;
      const bool in_horizontal = std::abs(qx) <= hl && std::abs(qy) <= hw;
      const bool in_vertical = std::abs(qy) <= hl && std::abs(qx) <= hw;
      if (!in_horizontal && !in_vertical) return std::nullopt;
      return 0.0;
    }
    case IndenterShape::kRing:
      if (rho > ind.radius || rho < ind.inner_radius) return std::nullopt;
      return 0.0;
    case IndenterShape::kTriangle:
      if (!point_in_convex_polygon(regular_polygon(3, ind.radius, kPi / 2.0),
                                   qx, qy))
        return std::nullopt;
      return 0.0;
    case IndenterShape::kHexagon:
      if (!point_in_convex_polygon(regular_polygon(6, ind.radius, 0.0), qx,
                                   qy))
        return std::nullopt;
      return 0.0;
  }
  return std::nullopt;
}

void Trajectory::validate() const {
  if (samples.empty()) throw InvalidArgument("trajectory has no samples");
  if (samples.front().depth != 0.0)
    throw InvalidArgument("trajectory must start at depth 0");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].depth < 0.0)
      throw InvalidArgument("trajectory depth must be >= 0");
    if (i > 0 && !(samples[i].time > samples[i - 1].time))
      throw InvalidArgument("trajectory times must be strictly increasing");
  }
  if (!(frame_rate > 0.0)) throw InvalidArgument("frame_rate must be positive");
}

TrajectoryProfile trajectory_profile_from_string(const std::string& name) {
  if (name == "press_hold_release") return TrajectoryProfile::kPressHoldRelease;
  if (name == "ramp") return TrajectoryProfile::kRamp;
  if (name == "multi_press") return TrajectoryProfile::kMultiPress;
  throw ConfigError("unknown trajectory profile: " + name);
}

const char* to_string(TrajectoryProfile profile) {
  switch (profile) {
    case TrajectoryProfile::kPressHoldRelease: return "press_hold_release";
    case TrajectoryProfile::kRamp: return "ramp";
    case TrajectoryProfile::kMultiPress: return "multi_press";
  }
  return "unknown";
}

Trajectory make_trajectory(TrajectoryProfile profile, double depth_max,
                           double speed, double hold, double frame_rate,
                           int press_count) {
  if (!(depth_max > 0.0)) throw InvalidArgument("depth_max must be positive");
  if (!(speed > 0.0)) throw InvalidArgument("speed must be positive");
  if (!(frame_rate > 0.0)) throw InvalidArgument("frame_rate must be positive");
  if (hold < 0.0) throw InvalidArgument("hold must be >= 0");
  if (press_count < 1) throw InvalidArgument("press_count must be >= 1");

  const double t_up = depth_max / speed;
  const double cycle_hold = profile == TrajectoryProfile::kRamp ? 0.0 : hold;
  const double cycle = 2.0 * t_up + cycle_hold;
  const int cycles = profile == TrajectoryProfile::kMultiPress ? press_count : 1;
  const double total = cycle * cycles;

  auto depth_at = [&](double t) {
    if (t <= 0.0 || t >= total) return 0.0;
    double local = t - cycle * std::floor(t / cycle);
    if (local < t_up) return std::min(depth_max, speed * local);
    if (local < t_up + cycle_hold) return depth_max;
    return std::max(0.0, depth_max - speed * (local - t_up - cycle_hold));
  };

  Trajectory traj;
  traj.frame_rate = frame_rate;
  const auto n = static_cast<std::size_t>(std::lround(total * frame_rate)) + 1;
  traj.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / frame_rate;
    traj.samples[k] = {t, depth_at(t), 0.0, 0.0, 0.0};
  }
  return traj;
}

SimRecording run_scenario(const TetMesh& mesh, const NodeSets& node_sets,
                          const MaterialParams& material,
                          const Indenter& indenter, const Trajectory& trajectory,
                          const SolverConfig& solver) {
  indenter.validate();
  trajectory.validate();
  material.validate();

  double depth_max = 0.0;
  for (const auto& s : trajectory.samples) depth_max = std::max(depth_max, s.depth);
  if (!(depth_max < 0.5 * mesh.lz))
    throw InvalidArgument("max indentation depth must stay below half the block height");

  const double bound = indenter.footprint_radius();
  for (const auto& s : trajectory.samples) {
    const double cx = indenter.offset_x + s.offset_x;
    const double cy = indenter.offset_y + s.offset_y;
    if (cx - bound < 0.0 || cx + bound > mesh.lx || cy - bound < 0.0 ||
        cy + bound > mesh.ly)
      throw InvalidArgument("indenter footprint leaves the block footprint");
  }

  const Eigen::SparseMatrix<double> stiffness = assemble(mesh, material);

  SimRecording rec;
  rec.frame_rate = trajectory.frame_rate;
  rec.times.reserve(trajectory.samples.size());
  rec.frames.reserve(trajectory.samples.size());
  rec.force_trace.reserve(trajectory.samples.size());
  rec.contact_xy.reserve(trajectory.samples.size());

  StressFrameData rest_frame(mesh.tet_count());
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Vec3 c = mesh.tet_centroid(t);
    rest_frame[t] = {c.x, c.y, c.z, 0.0};
  }

  for (const TrajectorySample& sample : trajectory.samples) {
    Indenter posed = indenter;
    posed.offset_x += sample.offset_x;
    posed.offset_y += sample.offset_y;
    posed.yaw += sample.yaw;

    rec.times.push_back(sample.time);

    ConstraintSet contact;
    if (sample.depth > 0.0) {
      for (std::size_t v : node_sets.top_surface) {
        const auto h = indenter_surface_height(posed, mesh.vertices[v].x,
                                               mesh.vertices[v].y);
        if (h && *h < sample.depth)
          contact.add(v, 2, *h - sample.depth);
      }
    }

    // Contact centroid: mean position of the touching nodes; the indenter
    // axis stands in while nothing touches.
    if (contact.empty()) {
      rec.contact_xy.push_back({posed.offset_x, posed.offset_y});
    } else {
      double cx = 0.0, cy = 0.0;
      for (const Constraint& c : contact.entries) {
        cx += mesh.vertices[c.node].x;
        cy += mesh.vertices[c.node].y;
      }
      const auto n = static_cast<double>(contact.size());
      rec.contact_xy.push_back({cx / n, cy / n});
    }

    if (contact.empty()) {
      rec.frames.push_back(rest_frame);
      rec.force_trace.push_back(0.0);
      continue;
    }

    ConstraintSet constraints = contact;
    for (std::size_t v : node_sets.fixed)
      for (int axis = 0; axis < 3; ++axis) constraints.add(v, axis, 0.0);

    FemSolution sol;
    try {
      sol = solve(stiffness, constraints, solver);
    } catch (const Error& e) {
      throw SolverFailure(0.0, "frame " + std::to_string(rec.frames.size()) +
                                   ": " + e.what());
    }

    const StressField field = compute_stress(mesh, material, sol.displacements);
    StressFrameData frame(mesh.tet_count());
    for (std::size_t t = 0; t < mesh.tet_count(); ++t)
      frame[t] = {field.centroids[t].x, field.centroids[t].y,
                  field.centroids[t].z, field.von_mises[t]};
    rec.frames.push_back(std::move(frame));
    rec.force_trace.push_back(axial_contact_force(sol, contact));
  }
  return rec;
}

std::vector<BatchCell> enumerate_batch(const BatchConfig& config,
                                       std::uint64_t base_seed) {
  std::vector<BatchCell> cells;
  std::size_t index = 0;
  for (const Indenter& ind : config.indenters) {
    for (const auto& loc : config.locations) {
      for (const Trajectory& traj : config.trajectories) {
        BatchCell cell;
        cell.indenter = ind;
        cell.indenter.offset_x += loc[0];
        cell.indenter.offset_y += loc[1];
        cell.trajectory = traj;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "trial_%04zu", index);
        cell.id = buf;
        cell.seed = derive_seed(base_seed, "trial", index);
        ++index;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

BatchOutcome batch_generate(const TetMesh& mesh, const NodeSets& node_sets,
                            const MaterialParams& material,
                            const BatchConfig& config,
                            const SolverConfig& solver,
                            const std::string& out_dir,
                            std::uint64_t base_seed) {
  const std::vector<BatchCell> cells = enumerate_batch(config, base_seed);
  BatchOutcome outcome;
  for (const BatchCell& cell : cells) {
    try {
      SimRecording rec =
          run_scenario(mesh, node_sets, material, cell.indenter,
                       cell.trajectory, solver);
      rec.meta.id = cell.id;
      rec.meta.seed = cell.seed;
      rec.meta.note = std::string(to_string(cell.indenter.shape)) + " at (" +
                      std::to_string(cell.indenter.offset_x) + ", " +
                      std::to_string(cell.indenter.offset_y) + ")";
      write_recording(out_dir + "/" + cell.id, rec);
      outcome.recorded_ids.push_back(cell.id);
    } catch (const Error& e) {
      outcome.failures.emplace_back(cell.id, e.what());
    }
  }
  write_batch_manifest(out_dir, outcome);
  return outcome;
}

}  // namespace tacsim
