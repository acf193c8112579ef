#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tacsim/nn.hpp"

namespace tacsim {

/// Shape classifier over fixed-length taxel sequences: input projection
/// with a sinusoidal position table, pre-normalization encoder blocks
/// (multi-head self-attention plus feed-forward, both residual), mean
/// pooling over time, and a linear class head.
struct ClassifierConfig {
  std::size_t seq_len = 64;  // sequences are resampled to this length
  std::size_t channels = 8;
  std::size_t d_model = 32;
  std::size_t num_blocks = 2;
  std::size_t num_heads = 2;
  std::size_t ff_dim = 64;
  std::vector<std::string> labels;

  std::size_t class_count() const { return labels.size(); }
  void validate() const;  // head dim divides d_model, >= 2 labels
};

struct EncoderBlock {
  Eigen::VectorXd ln1_gamma, ln1_beta;
  Eigen::MatrixXd wq, wk, wv, wo;  // d_model x d_model
  Eigen::VectorXd bq, bk, bv, bo;
  Eigen::VectorXd ln2_gamma, ln2_beta;
  Eigen::MatrixXd ff_w1;  // ff_dim x d_model
  Eigen::VectorXd ff_b1;
  Eigen::MatrixXd ff_w2;  // d_model x ff_dim
  Eigen::VectorXd ff_b2;
};

struct ClassifierParams {
  ClassifierConfig config;
  // Per-channel standardization fitted on the training split.
  Eigen::VectorXd input_mean, input_std;
  Eigen::MatrixXd input_proj_w;  // d_model x channels
  Eigen::VectorXd input_proj_b;
  Eigen::MatrixXd positional;  // seq_len x d_model, fixed (not trained)
  std::vector<EncoderBlock> blocks;
  Eigen::MatrixXd head_w;  // classes x d_model
  Eigen::VectorXd head_b;

  void validate() const;
};

/// pos(t, 2i) = sin(t / 10000^(2i/d)), pos(t, 2i+1) = cos of the same.
Eigen::MatrixXd sinusoidal_positions(std::size_t seq_len, std::size_t d_model);

/// Fan-in uniform weights, zero biases, unit normalization gains.
ClassifierParams make_classifier(const ClassifierConfig& config,
                                 std::uint64_t seed);

/// Raw sequence (seq_len x channels, kPa) -> class logits.
Eigen::VectorXd classifier_forward(const ClassifierParams& params,
                                   const Eigen::MatrixXd& sequence);

/// Attention matrices for inspection, one row-stochastic seq_len x seq_len
/// matrix per (block, head) in block-major order.
std::vector<Eigen::MatrixXd> classifier_attention(
    const ClassifierParams& params, const Eigen::MatrixXd& sequence);

/// Mean cross-entropy over the batch and exact reverse-mode gradients for
/// every trainable parameter, flattened in serialization order.
std::pair<double, Eigen::VectorXd> classifier_loss_and_grads(
    const ClassifierParams& params,
    const std::vector<Eigen::MatrixXd>& sequences,
    const std::vector<std::size_t>& labels);

// Flat views in documented order: input projection, then per block
// (ln1, wq/bq, wk/bk, wv/bv, wo/bo, ln2, ff1, ff2), then the head.
// Matrices are row-major; the position table and the normalization
// statistics are not trainable and not included.
Eigen::VectorXd flatten_classifier(const ClassifierParams& params);
void unflatten_classifier(const Eigen::VectorXd& flat,
                          ClassifierParams& params);

struct LabeledSequence {
  Eigen::MatrixXd sequence;  // T x channels (any T; resampled by the trainer)
  std::size_t label = 0;
};

/// Linear time resampling to target_len rows, endpoints preserved.
Eigen::MatrixXd resample_sequence(const Eigen::MatrixXd& sequence,
                                  std::size_t target_len);

/// Softmax cross-entropy training with AdamW, global-norm clipping and the
/// validation-plateau schedule. The validation split is stratified per
/// class at whole-sequence granularity; when it comes up empty the training
/// loss drives the schedule. Returns best-validation parameters.
std::pair<ClassifierParams, TrainReport> train_classifier(
    const std::vector<LabeledSequence>& data, const ClassifierConfig& config,
    const TrainConfig& train_config);

struct EvalResult {
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
};

EvalResult evaluate_classifier(const ClassifierParams& params,
                               const std::vector<LabeledSequence>& test_data);

void save_classifier(const ClassifierParams& params, const std::string& path);
ClassifierParams load_classifier(const std::string& path);

}  // namespace tacsim
