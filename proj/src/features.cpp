#include "tacsim/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tacsim/errors.hpp"

namespace tacsim {

StressClusters build_stress_clusters(const TetMesh& mesh,
                                     const std::vector<Vec3>& taxel_positions,
                                     double cluster_radius,
                                     double top_fraction) {
  if (taxel_positions.size() != 8)
    throw InvalidArgument("expected 8 taxel positions");
  if (!(cluster_radius > 0.0))
    throw InvalidArgument("cluster_radius must be positive");
  if (!(top_fraction > 0.0) || top_fraction > 1.0)
    throw InvalidArgument("top_fraction must lie in (0, 1]");

  const double z_min = (1.0 - top_fraction) * mesh.lz;
  StressClusters clusters;
  clusters.taxel_positions = taxel_positions;
  clusters.rows.assign(8, {});
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Vec3 c = mesh.tet_centroid(t);
    if (c.z < z_min) continue;
    for (std::size_t i = 0; i < 8; ++i) {
      const double dx = c.x - taxel_positions[i].x;
      const double dy = c.y - taxel_positions[i].y;
      if (dx * dx + dy * dy <= cluster_radius * cluster_radius)
        clusters.rows[i].push_back(t);
    }
  }
  for (std::size_t i = 0; i < 8; ++i)
    if (clusters.rows[i].empty())
      throw ConfigError("stress cluster for taxel " + std::to_string(i) +
                        " is empty; increase cluster_radius or refine the mesh");
  return clusters;
}

FeatureFrame aggregate_stress(const StressFrameData& frame,
                              const StressClusters& clusters,
                              double epsilon_floor) {
  if (clusters.rows.size() != 8 || clusters.taxel_positions.size() != 8)
    throw InvalidArgument("clusters must cover 8 taxels");
  if (!(epsilon_floor > 0.0))
    throw InvalidArgument("epsilon_floor must be positive");

  FeatureFrame out;
  for (std::size_t i = 0; i < 8; ++i) {
    if (clusters.rows[i].empty())
      throw ConfigError("stress cluster for taxel " + std::to_string(i) +
                        " is empty");
    const Vec3& x = clusters.taxel_positions[i];
    double sum = 0.0;
    for (std::size_t row : clusters.rows[i]) {
      if (row >= frame.size())
        throw InvalidArgument("cluster row index out of frame range");
      const StressRow& r = frame[row];
      const double dx = r[0] - x.x;
      const double dy = r[1] - x.y;
      const double dz = r[2] - x.z;
      const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
      sum += r[3] / std::max(dist, epsilon_floor);
    }
    out.values[i] = sum / static_cast<double>(clusters.rows[i].size());
  }
  return out;
}

PairSet build_pairs(const SimRecording& recording,
                    const std::vector<std::array<double, 8>>& warped_taxels,
                    const StressClusters& clusters,
                    const std::array<double, 8>& baselines_kpa,
                    double epsilon_floor) {
  if (warped_taxels.size() != recording.frame_count())
    throw InvalidArgument(
        "warped taxel sequence length does not match the recording");

  PairSet pairs;
  pairs.times = recording.times;
  pairs.inputs.reserve(recording.frame_count());
  pairs.targets.reserve(recording.frame_count());
  for (std::size_t t = 0; t < recording.frame_count(); ++t) {
    pairs.inputs.push_back(
        aggregate_stress(recording.frames[t], clusters, epsilon_floor).values);
    std::array<double, 8> target;
    for (std::size_t i = 0; i < 8; ++i)
      target[i] = warped_taxels[t][i] - baselines_kpa[i];
    pairs.targets.push_back(target);
  }
  return pairs;
}

}  // namespace tacsim
