#include "tacsim/sensor_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "tacsim/errors.hpp"
#include "tacsim/rng.hpp"

namespace tacsim {

double interp_clamped(const std::vector<double>& times,
                      const std::vector<double>& values, double t) {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

std::vector<double> first_order_lag(const std::vector<double>& times,
                                    const std::vector<double>& input,
                                    double tau) {
  if (tau <= 0.0) return input;
  std::vector<double> out(input.size());
  out[0] = input[0];
  for (std::size_t k = 1; k < input.size(); ++k) {
    const double h = times[k] - times[k - 1];
    const double slope = (input[k] - input[k - 1]) / h;
    const double decay = std::exp(-h / tau);
    // y(t) tracks the ramp offset by slope*tau plus a decaying transient.
    out[k] = input[k] - slope * tau +
             (out[k - 1] - input[k - 1] + slope * tau) * decay;
  }
  return out;
}

double quantize_to_grid(double value, double grid) {
  return grid * std::round(value / grid);
}

void OracleParams::validate() const {
  if (!(sensitivity_kpa_per_n > 0.0))
    throw InvalidArgument("sensitivity must be positive");
  if (!(quantization_kpa > 0.0))
    throw InvalidArgument("quantization must be positive");
  if (!(sample_rate_hz > 0.0))
    throw InvalidArgument("sample_rate must be positive");
  if (footprint_sigma_m < 0.0 || lag_time_constant_s < 0.0 || latency_s < 0.0 ||
      noise_sigma_kpa < 0.0 || force_noise_sigma_n < 0.0)
    throw InvalidArgument("oracle sigmas, lag and latency must be >= 0");
}

std::array<double, 8> footprint_weights(
    const std::vector<Vec3>& taxel_positions, double x, double y,
    double footprint_sigma) {
  std::array<double, 8> w{};
  double sum = 0.0;
  std::size_t nearest = 0;
  double nearest_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 8; ++i) {
    const double dx = x - taxel_positions[i].x;
    const double dy = y - taxel_positions[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < nearest_d2) {
      nearest_d2 = d2;
      nearest = i;
    }
    w[i] = footprint_sigma > 0.0
               ? std::exp(-d2 / (2.0 * footprint_sigma * footprint_sigma))
               : 0.0;
    sum += w[i];
  }
  if (sum <= 1e-300) {
    // Footprint so narrow that every weight underflowed: all of the
    // contact goes to the nearest taxel.
    w.fill(0.0);
    w[nearest] = 1.0;
    return w;
  }
  for (double& v : w) v /= sum;
  return w;
}

std::pair<TaxelTrace, ForceTrace> emulate(
    const SimRecording& recording, const std::vector<Vec3>& taxel_positions,
    const OracleParams& params) {
  params.validate();
  if (recording.frame_count() == 0)
    throw InvalidArgument("cannot emulate an empty recording");
  if (taxel_positions.size() != 8)
    throw InvalidArgument("expected 8 taxel positions");

  const std::size_t n_sim = recording.frame_count();
  const std::vector<double>& times = recording.times;

  // Ideal continuous-time taxel signals on the simulation grid.
  std::array<std::vector<double>, 8> ideal;
  for (auto& ch : ideal) ch.resize(n_sim);
  for (std::size_t t = 0; t < n_sim; ++t) {
    const auto w = footprint_weights(taxel_positions,
                                     recording.contact_xy[t][0],
                                     recording.contact_xy[t][1],
                                     params.footprint_sigma_m);
    const double f = recording.force_trace[t];
    for (std::size_t i = 0; i < 8; ++i)
      ideal[i][t] =
          params.baselines_kpa[i] + params.sensitivity_kpa_per_n * f * w[i];
  }

  std::array<std::vector<double>, 8> lagged;
  for (std::size_t i = 0; i < 8; ++i)
    lagged[i] = first_order_lag(times, ideal[i], params.lag_time_constant_s);

  const double t_end = times.back();
  const std::size_t n_real =
      static_cast<std::size_t>(
          std::floor(t_end * params.sample_rate_hz + 1e-9)) +
      1;

  Rng rng(params.seed);
  TaxelTrace taxels;
  taxels.rate_hz = params.sample_rate_hz;
  taxels.samples.resize(n_real);
  for (std::size_t k = 0; k < n_real; ++k) {
    const double t = static_cast<double>(k) / params.sample_rate_hz;
    for (std::size_t i = 0; i < 8; ++i) {
      double v = interp_clamped(times, lagged[i], t - params.latency_s);
      if (params.noise_sigma_kpa > 0.0)
        v += rng.normal(0.0, params.noise_sigma_kpa);
      taxels.samples[k][i] = quantize_to_grid(v, params.quantization_kpa);
    }
  }

  ForceTrace force;
  force.rate_hz = params.sample_rate_hz;
  force.samples.resize(n_real);
  for (std::size_t k = 0; k < n_real; ++k) {
    const double t = static_cast<double>(k) / params.sample_rate_hz;
    double v =
        interp_clamped(times, recording.force_trace, t - params.latency_s);
    if (params.force_noise_sigma_n > 0.0)
      v += rng.normal(0.0, params.force_noise_sigma_n);
    force.samples[k] = v;
  }
  return {std::move(taxels), std::move(force)};
}

TaxelTrace apply_sensor_channel(const std::vector<double>& frame_times,
                                const TaxelTrace& per_frame,
                                const OracleParams& params,
                                std::uint64_t noise_seed) {
  params.validate();
  const std::size_t n_sim = per_frame.samples.size();
  if (n_sim == 0)
    throw InvalidArgument("cannot run an empty trace through the channel");
  if (frame_times.size() != n_sim)
    throw InvalidArgument("frame time grid does not match the trace length");

  std::array<std::vector<double>, 8> lagged;
  for (std::size_t i = 0; i < 8; ++i) {
    std::vector<double> ch(n_sim);
    for (std::size_t t = 0; t < n_sim; ++t) ch[t] = per_frame.samples[t][i];
    lagged[i] = first_order_lag(frame_times, ch, params.lag_time_constant_s);
  }

  const double t_end = frame_times.back();
  const std::size_t n_real =
      static_cast<std::size_t>(
          std::floor(t_end * params.sample_rate_hz + 1e-9)) +
      1;

  Rng rng(noise_seed);
  TaxelTrace out;
  out.rate_hz = params.sample_rate_hz;
  out.samples.resize(n_real);
  for (std::size_t k = 0; k < n_real; ++k) {
    const double t = static_cast<double>(k) / params.sample_rate_hz;
    for (std::size_t i = 0; i < 8; ++i) {
      double v = interp_clamped(frame_times, lagged[i], t - params.latency_s);
      if (params.noise_sigma_kpa > 0.0)
        v += rng.normal(0.0, params.noise_sigma_kpa);
      out.samples[k][i] = quantize_to_grid(v, params.quantization_kpa);
    }
  }
  return out;
}

double linearity_probe(const OracleParams& params,
                       const std::vector<double>& force_grid_n) {
  params.validate();
  if (force_grid_n.size() < 2)
    throw InvalidArgument("linearity probe needs at least 2 grid points");

  double mean_f = 0.0;
  for (double f : force_grid_n) mean_f += f;
  mean_f /= static_cast<double>(force_grid_n.size());
  double var_f = 0.0;
  for (double f : force_grid_n) var_f += (f - mean_f) * (f - mean_f);
  if (!(var_f > 0.0))
    throw DegenerateInput("force grid has zero spread; slope fit degenerate");

  // Concentrated contact on one taxel, held well past the lag constant:
  // run the taxel pipeline with the probe geometry and read the settled
  // value. Noise is disabled so the fit measures the transfer gain.
  OracleParams probe = params;
  probe.noise_sigma_kpa = 0.0;
  probe.force_noise_sigma_n = 0.0;
  probe.footprint_sigma_m = 0.0;  // all weight on the probed taxel

  std::vector<Vec3> taxels(8);
  for (std::size_t i = 0; i < 8; ++i)
    taxels[i] = {static_cast<double>(i), 0.0, 0.0};

  const double settle =
      probe.latency_s + std::max(1.0, 20.0 * probe.lag_time_constant_s);
  const double sim_rate = 50.0;
  const auto n_frames =
      static_cast<std::size_t>(std::ceil(settle * sim_rate)) + 1;

  std::vector<double> responses;
  responses.reserve(force_grid_n.size());
  for (double f : force_grid_n) {
    SimRecording rec;
    rec.frame_rate = sim_rate;
    rec.times.resize(n_frames);
    rec.force_trace.assign(n_frames, f);
    rec.contact_xy.assign(n_frames, {0.0, 0.0});
    rec.frames.assign(n_frames, StressFrameData{});
    for (std::size_t k = 0; k < n_frames; ++k)
      rec.times[k] = static_cast<double>(k) / sim_rate;
    const auto [trace, _] = emulate(rec, taxels, probe);
    responses.push_back(trace.samples.back()[0]);
  }

  double cov = 0.0;
  double mean_r = 0.0;
  for (double r : responses) mean_r += r;
  mean_r /= static_cast<double>(responses.size());
  for (std::size_t i = 0; i < responses.size(); ++i)
    cov += (force_grid_n[i] - mean_f) * (responses[i] - mean_r);
  return cov / var_f;
}

}  // namespace tacsim
