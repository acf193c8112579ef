#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tacsim/features.hpp"
#include "tacsim/sensor_oracle.hpp"

namespace tacsim {

// ---------------------------------------------------------------------------
// Dense tensors (serialization container; math runs on Eigen types)
// ---------------------------------------------------------------------------

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major

  std::size_t element_count() const;
  void validate() const;  // data length = product of shape

  static Tensor from_matrix(const Eigen::MatrixXd& m);
  static Tensor from_vector(const Eigen::VectorXd& v);
  Eigen::MatrixXd to_matrix() const;
  Eigen::VectorXd to_vector() const;
};

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean absolute error and its subgradient wrt pred (sign/n, 0 at ties).
std::pair<double, Eigen::VectorXd> l1_loss(const Eigen::VectorXd& pred,
                                           const Eigen::VectorXd& target);

/// Numerically stable softmax (positive entries summing to 1).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// -log softmax(logits)[label] and its gradient wrt logits (p - onehot).
std::pair<double, Eigen::VectorXd> cross_entropy_loss(
    const Eigen::VectorXd& logits, std::size_t label);

// ---------------------------------------------------------------------------
// Optimizer on flat parameter vectors
// ---------------------------------------------------------------------------

/// Scales grads to max_norm when the global L2 norm exceeds it; returns the
/// pre-clip norm.
double clip_grad_norm(Eigen::VectorXd& grads, double max_norm);

struct AdamWState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  std::int64_t step = 0;

  explicit AdamWState(Eigen::Index size)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}
};

/// One AdamW update. Order is part of the reproducibility contract:
/// decoupled decay first (p -= lr*wd*p), then the bias-corrected moment
/// step p -= lr * mhat / (sqrt(vhat) + eps).
void adamw_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                AdamWState& state, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8,
                double weight_decay = 0.0);

/// Validation-plateau learning-rate schedule: an epoch improves when
/// val_loss < best * (1 - rel_threshold); `patience` consecutive
/// non-improving epochs reduce lr by `factor` down to min_lr and reset the
/// counter.
struct PlateauState {
  double lr = 1e-3;
  double factor = 0.3;
  int patience = 10;
  double rel_threshold = 1e-4;
  double min_lr = 1e-6;

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
};

/// Feeds one epoch's validation loss; returns the lr to use next and sets
/// *reduced when this call lowered it.
double plateau_update(PlateauState& state, double val_loss,
                      bool* reduced = nullptr);

// ---------------------------------------------------------------------------
// Training configuration and report (shared by regressor and classifier)
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  double plateau_factor = 0.3;
  int plateau_patience = 10;
  double plateau_rel_threshold = 1e-4;
  double min_learning_rate = 1e-6;
  double clip_max_norm = 1.0;
  double weight_decay = 1e-4;
  int batch_size = 64;
  int max_epochs = 200;
  double input_noise_sigma = 0.05;  // on standardized inputs
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  std::vector<double> lr_by_epoch;
  std::vector<int> lr_reductions;  // epochs (0-based) where lr dropped
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::uint64_t seed = 0;
  std::string dataset_digest;  // FNV-1a hex of the training bytes
};

// ---------------------------------------------------------------------------
// MLP regressor (stress features -> gauge taxel pressures)
// ---------------------------------------------------------------------------

enum class Activation { kLinear, kRelu };

struct MlpLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kLinear;
};

struct MlpParams {
  std::vector<MlpLayer> layers;
  // Channel-wise standardization fitted on the training split.
  Eigen::VectorXd input_mean, input_std;
  Eigen::VectorXd target_mean, target_std;
  // No-load baselines added back at prediction time (kPa).
  std::array<double, 8> baselines_kpa{};

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  void validate() const;  // dims chain, stds positive
};

/// Fan-in uniform weight init (U(-1/sqrt(in), 1/sqrt(in))), zero biases,
/// ReLU on hidden layers, linear output. Normalization statistics start at
/// identity.
MlpParams make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);

/// Affine-activation chain on one normalized input.
Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x);

struct MlpGrads {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

/// Mean L1 loss over a batch (rows of inputs/targets, normalized units) and
/// exact reverse-mode gradients for every layer parameter.
std::pair<double, MlpGrads> mlp_loss_and_grads(const MlpParams& params,
                                               const Eigen::MatrixXd& inputs,
                                               const Eigen::MatrixXd& targets);

// Flat views in documented order (per layer: weight row-major, then bias).
Eigen::VectorXd flatten_mlp(const MlpParams& params);
void unflatten_mlp(const Eigen::VectorXd& flat, MlpParams& params);
Eigen::VectorXd flatten_mlp_grads(const MlpGrads& grads);

/// Trains the feature->pressure map: standardizes from the training split,
/// injects N(0, sigma^2) noise on standardized inputs at each presentation,
/// minibatch AdamW with global-norm clipping and the plateau schedule, and
/// returns the best-validation parameters.
std::pair<MlpParams, TrainReport> train_taxel_model(
    const PairSet& pairs, const std::array<double, 8>& baselines_kpa,
    const std::vector<std::size_t>& hidden, const TrainConfig& config);

/// Frame-wise prediction in absolute kPa: normalize, forward, denormalize,
/// add baselines.
TaxelTrace predict_taxel_trace(const MlpParams& params,
                           const std::vector<std::array<double, 8>>& features,
                           double rate_hz);

// Model file: JSON with architecture, normalization stats, baselines and a
// base64 blob of the flat little-endian float64 parameters.
void save_mlp(const MlpParams& params, const std::string& path);
MlpParams load_mlp(const std::string& path);

}  // namespace tacsim
