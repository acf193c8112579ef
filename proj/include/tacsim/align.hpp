#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tacsim {

/// Monotone index correspondence between two sequences. pairs.front() is
/// (0,0), pairs.back() is (n-1, m-1), and consecutive pairs differ by one of
/// (+1,0), (0,+1), (+1,+1).
struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

enum class DtwNormalize { kNone, kZScore };
enum class WarpReduce { kMean, kFirst };

/// Classic dynamic time warping under |a_i - b_j| cost. Ties between DP
/// predecessors break diagonal first, then (+1,0), then (0,+1), so equal
/// inputs always produce identical paths.
WarpPath dtw(const std::vector<double>& a, const std::vector<double>& b);

/// Maps an 8-channel trace on the second (real) timeline onto the first
/// (simulation) timeline: each sim index receives the reduction of all real
/// samples its path pairs point at.
std::vector<std::array<double, 8>> warp_taxels(
    const std::vector<std::array<double, 8>>& taxels, const WarpPath& path,
    std::size_t sim_length, WarpReduce reduce = WarpReduce::kMean);

std::vector<double> normalize_for_dtw(const std::vector<double>& trace,
                                      DtwNormalize mode);

// CSV/JSON export of an alignment (columns sim_idx,real_idx; report with
// total_cost and path length).
void write_warp_path_csv(const WarpPath& path, const std::string& file_path);
void write_alignment_report(const WarpPath& path, const std::string& file_path);

}  // namespace tacsim
