#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "tacsim/mesh.hpp"
#include "tacsim/scenario.hpp"

namespace tacsim {

/// Distance-weighted stress aggregate per taxel, in Pa/m. The 8 values are
/// the network input for one frame.
struct FeatureFrame {
  std::array<double, 8> values{};
};

/// One stress cluster per taxel: the frame rows (tet indices) whose rest
/// centroid lies within cluster_radius of the taxel in xy and inside the
/// top slab of the block. The taxel position anchors the distance weight.
struct StressClusters {
  std::vector<std::vector<std::size_t>> rows;  // size 8, tet indices
  std::vector<Vec3> taxel_positions;           // size 8
};

/// Builds the per-taxel row sets from rest-state tet centroids. top_fraction
/// is the depth of the slab below the top face that may contribute (0.3
/// keeps centroids with z >= (1 - 0.3) * lz). Throws ConfigError naming the
/// taxel index when a cluster comes up empty.
StressClusters build_stress_clusters(const TetMesh& mesh,
                                     const std::vector<Vec3>& taxel_positions,
                                     double cluster_radius,
                                     double top_fraction = 0.3);

/// F_i = (1/N_i) * sum_k s_{i,k} / max(|p_{i,k} - x_i|, epsilon_floor),
/// where p is the row's displaced centroid and s its Von Mises stress.
FeatureFrame aggregate_stress(const StressFrameData& frame,
                              const StressClusters& clusters,
                              double epsilon_floor = 1e-6);

/// Frame-aligned training pairs: stress features in, gauge taxel pressures
/// (baselines subtracted, kPa) out.
struct PairSet {
  std::vector<double> times;
  std::vector<std::array<double, 8>> inputs;
  std::vector<std::array<double, 8>> targets;

  std::size_t size() const { return times.size(); }
};

/// Pairs each recording frame's features with the warped real taxel vector.
/// warped_taxels must hold exactly one 8-vector per frame.
PairSet build_pairs(const SimRecording& recording,
                    const std::vector<std::array<double, 8>>& warped_taxels,
                    const StressClusters& clusters,
                    const std::array<double, 8>& baselines_kpa,
                    double epsilon_floor = 1e-6);

}  // namespace tacsim
