#include "tacsim/align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "tacsim/errors.hpp"

namespace tacsim {

WarpPath dtw(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw InvalidArgument("dtw requires nonempty sequences");
  const std::size_t n = a.size();
  const std::size_t m = b.size();

  std::vector<double> cost(n * m);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return cost[i * m + j];
  };

  at(0, 0) = std::abs(a[0] - b[0]);
  for (std::size_t j = 1; j < m; ++j)
    at(0, j) = at(0, j - 1) + std::abs(a[0] - b[j]);
  for (std::size_t i = 1; i < n; ++i) {
    at(i, 0) = at(i - 1, 0) + std::abs(a[i] - b[0]);
    for (std::size_t j = 1; j < m; ++j)
      at(i, j) = std::abs(a[i] - b[j]) +
                 std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
  }

  WarpPath path;
  path.total_cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      // Tie-break order: diagonal, then advancing the first sequence, then
      // the second.
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

std::vector<std::array<double, 8>> warp_taxels(
    const std::vector<std::array<double, 8>>& taxels, const WarpPath& path,
    std::size_t sim_length, WarpReduce reduce) {
  if (path.pairs.empty()) throw InvalidArgument("empty warp path");
  for (const auto& [i, j] : path.pairs) {
    if (i >= sim_length)
      throw InvalidArgument("warp path sim index " + std::to_string(i) +
                            " out of range");
    if (j >= taxels.size())
      throw InvalidArgument("warp path real index " + std::to_string(j) +
                            " out of range");
  }
  if (path.pairs.back().first + 1 != sim_length)
    throw InvalidArgument("warp path does not span the sim timeline");

  std::vector<std::array<double, 8>> out(sim_length);
  std::vector<std::size_t> counts(sim_length, 0);
  for (auto& v : out) v.fill(0.0);
  for (const auto& [i, j] : path.pairs) {
    if (reduce == WarpReduce::kFirst && counts[i] > 0) continue;
    for (std::size_t c = 0; c < 8; ++c) out[i][c] += taxels[j][c];
    ++counts[i];
  }
  for (std::size_t i = 0; i < sim_length; ++i) {
    if (counts[i] == 0)
      throw InvalidArgument("warp path leaves sim index " + std::to_string(i) +
                            " unmatched");
    for (std::size_t c = 0; c < 8; ++c)
      out[i][c] /= static_cast<double>(counts[i]);
  }
  return out;
}

std::vector<double> normalize_for_dtw(const std::vector<double>& trace,
                                      DtwNormalize mode) {
  if (mode == DtwNormalize::kNone) return trace;
  if (trace.empty()) throw DegenerateInput("cannot z-score an empty trace");
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= static_cast<double>(trace.size());
  double var = 0.0;
  for (double v : trace) var += (v - mean) * (v - mean);
  var /= static_cast<double>(trace.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0))
    throw DegenerateInput("z-score normalization of a constant trace");
  std::vector<double> out(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) out[i] = (trace[i] - mean) / sd;
  return out;
}

void write_warp_path_csv(const WarpPath& path, const std::string& file_path) {
  std::ofstream out(file_path);
  if (!out) throw IoError("cannot open " + file_path + " for writing");
  out << "sim_idx,real_idx\n";
  for (const auto& [i, j] : path.pairs) out << i << ',' << j << '\n';
  if (!out) throw IoError("write failed: " + file_path);
}

void write_alignment_report(const WarpPath& path,
                            const std::string& file_path) {
  nlohmann::json report;
  report["total_cost"] = path.total_cost;
  report["path_length"] = path.pairs.size();
  std::ofstream out(file_path);
  if (!out) throw IoError("cannot open " + file_path + " for writing");
  out << report.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + file_path);
}

}  // namespace tacsim
