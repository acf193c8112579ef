#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "tacsim/scenario.hpp"
#include "tacsim/vec3.hpp"

namespace tacsim {

/// Synthetic 8-taxel pressure sensor: gain, quantization grid and sample
/// rate follow the measured characteristics of the emulated hardware; lag,
/// latency, spatial footprint and noise are stated emulator knobs.
struct OracleParams {
  double sensitivity_kpa_per_n = 7.24;
  double quantization_kpa = 0.01;
  double sample_rate_hz = 55.0;
  std::array<double, 8> baselines_kpa{};
  double footprint_sigma_m = 0.006;
  double lag_time_constant_s = 0.05;
  double latency_s = 0.08;
  double noise_sigma_kpa = 0.02;
  double force_noise_sigma_n = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 8-channel pressure samples in kPa on the sensor's own timeline
/// (t_k = k / rate_hz). Every value lies on the quantization grid.
struct TaxelTrace {
  std::vector<std::array<double, 8>> samples;
  double rate_hz = 0.0;
};

/// Scalar axial force samples in newtons, t_k = k / rate_hz.
struct ForceTrace {
  std::vector<double> samples;
  double rate_hz = 0.0;
};

/// Emulates the hardware sensor for one recorded indentation: per taxel, a
/// footprint-weighted share of the axial force is scaled by the
/// sensitivity, low-pass filtered, delayed, resampled at the sensor rate,
/// noised and quantized. The force channel gets the delay and noise but no
/// quantization.
std::pair<TaxelTrace, ForceTrace> emulate(
    const SimRecording& recording, const std::vector<Vec3>& taxel_positions,
    const OracleParams& params);

/// Steady-state gain measurement: presses a concentrated contact onto a
/// single taxel at each force in the grid and fits a least-squares slope
/// through the settled readings. Noise is disabled; quantization is not.
double linearity_probe(const OracleParams& params,
                       const std::vector<double>& force_grid_n);

/// Footprint weights of the 8 taxels for a contact centred at (x, y); they
/// sum to 1.
std::array<double, 8> footprint_weights(
    const std::vector<Vec3>& taxel_positions, double x, double y,
    double footprint_sigma);

/// Linear interpolation of (times, values) at t, clamped at both ends.
/// times must be strictly increasing.
double interp_clamped(const std::vector<double>& times,
                      const std::vector<double>& values, double t);

/// First-order low-pass of a piecewise-linear input, evaluated at the input
/// sample times with the exact ODE solution per segment. tau <= 0 is a
/// pass-through.
std::vector<double> first_order_lag(const std::vector<double>& times,
                                    const std::vector<double>& input,
                                    double tau);

/// Rounds value to the nearest multiple of grid.
double quantize_to_grid(double value, double grid);

/// Runs an already-synthesized per-frame taxel signal through the sensor's
/// output channel: first-order lag, latency, resampling at the sensor rate,
/// additive Gaussian noise and quantization. Used to give model-generated
/// traces the same timeline and statistics as captured ones.
TaxelTrace apply_sensor_channel(const std::vector<double>& frame_times,
                                const TaxelTrace& per_frame,
                                const OracleParams& params,
                                std::uint64_t noise_seed);

}  // namespace tacsim
