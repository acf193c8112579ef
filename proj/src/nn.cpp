#include "tacsim/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/rng.hpp"

namespace tacsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

void Tensor::validate() const {
  if (data.size() != element_count())
    throw InvalidArgument("tensor data length does not match its shape");
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) {
  Tensor t;
  t.shape = {static_cast<std::size_t>(m.rows()),
             static_cast<std::size_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

Tensor Tensor::from_vector(const Eigen::VectorXd& v) {
  Tensor t;
  t.shape = {static_cast<std::size_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

Eigen::MatrixXd Tensor::to_matrix() const {
  validate();
  if (shape.size() != 2) throw InvalidArgument("tensor is not 2-dimensional");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(shape[0]),
                    static_cast<Eigen::Index>(shape[1]));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
  return m;
}

Eigen::VectorXd Tensor::to_vector() const {
  validate();
  if (shape.size() != 1) throw InvalidArgument("tensor is not 1-dimensional");
  return Eigen::Map<const Eigen::VectorXd>(data.data(),
                                           static_cast<Eigen::Index>(shape[0]));
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

std::pair<double, Eigen::VectorXd> l1_loss(const Eigen::VectorXd& pred,
                                           const Eigen::VectorXd& target) {
  if (pred.size() != target.size())
    throw InvalidArgument("l1_loss shape mismatch");
  if (pred.size() == 0) throw InvalidArgument("l1_loss on empty vectors");
  const double n = static_cast<double>(pred.size());
  Eigen::VectorXd grad(pred.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    loss += std::abs(d);
    grad[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
  }
  return {loss / n, std::move(grad)};
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

std::pair<double, Eigen::VectorXd> cross_entropy_loss(
    const Eigen::VectorXd& logits, std::size_t label) {
  if (static_cast<Eigen::Index>(label) >= logits.size())
    throw InvalidArgument("label out of range");
  Eigen::VectorXd p = softmax(logits);
  const double loss = -std::log(std::max(p[static_cast<Eigen::Index>(label)],
                                         1e-300));
  p[static_cast<Eigen::Index>(label)] -= 1.0;
  return {loss, std::move(p)};
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

double clip_grad_norm(Eigen::VectorXd& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("max_norm must be positive");
  const double norm = grads.norm();
  if (norm > max_norm) grads *= max_norm / norm;
  return norm;
}

void adamw_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
                AdamWState& state, double lr, double beta1, double beta2,
                double eps, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw InvalidArgument("adamw_step shape mismatch");
  state.step += 1;
  if (weight_decay != 0.0) params -= lr * weight_decay * params;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v.array() =
      beta2 * state.v.array() + (1.0 - beta2) * grads.array().square();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

double plateau_update(PlateauState& state, double val_loss, bool* reduced) {
  if (reduced != nullptr) *reduced = false;
  if (!std::isfinite(val_loss))
    throw InvalidArgument("validation loss must be finite");
  if (val_loss < state.best * (1.0 - state.rel_threshold)) {
    state.best = val_loss;
    state.stale = 0;
  } else {
    state.stale += 1;
    if (state.stale >= state.patience) {
      const double next = std::max(state.lr * state.factor, state.min_lr);
      if (reduced != nullptr && next < state.lr) *reduced = true;
      state.lr = next;
      state.stale = 0;
    }
  }
  return state.lr;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
    throw ConfigError("plateau factor must lie in (0, 1)");
  if (plateau_patience < 1) throw ConfigError("plateau patience must be >= 1");
  if (!(clip_max_norm > 0.0)) throw ConfigError("clip max norm must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
  if (input_noise_sigma < 0.0) throw ConfigError("input noise sigma must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

void MlpParams::validate() const {
  if (layers.empty()) throw InvalidArgument("MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weight.rows())
      throw InvalidArgument("MLP bias size does not match layer rows");
    if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows())
      throw InvalidArgument("consecutive MLP layer dimensions do not chain");
  }
  auto positive = [](const Eigen::VectorXd& v) {
    return (v.array() > 0.0).all();
  };
  if (input_mean.size() != static_cast<Eigen::Index>(input_dim()) ||
      input_std.size() != static_cast<Eigen::Index>(input_dim()) ||
      target_mean.size() != static_cast<Eigen::Index>(output_dim()) ||
      target_std.size() != static_cast<Eigen::Index>(output_dim()))
    throw InvalidArgument("normalization statistics have wrong dimensions");
  if (!positive(input_std) || !positive(target_std))
    throw InvalidArgument("normalization stds must be positive");
}

MlpParams make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw InvalidArgument("MLP needs at least 2 dims");
  Rng rng(seed);
  MlpParams params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpLayer layer;
    const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims[l]);
    layer.weight.resize(rows, cols);
    const double limit = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        layer.weight(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
    layer.bias = Eigen::VectorXd::Zero(rows);
    layer.activation =
        l + 2 < dims.size() ? Activation::kRelu : Activation::kLinear;
    params.layers.push_back(std::move(layer));
  }
  params.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.front()));
  params.input_std = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dims.front()));
  params.target_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.back()));
  params.target_std = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dims.back()));
  return params;
}

namespace {

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kLinear) return z;
  return z.cwiseMax(0.0);
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(params.input_dim()))
    throw InvalidArgument("MLP input dimension mismatch");
  Eigen::VectorXd a = x;
  for (const MlpLayer& layer : params.layers) {
    Eigen::VectorXd z = layer.weight * a + layer.bias;
    a = layer.activation == Activation::kRelu ? z.cwiseMax(0.0).eval() : z;
  }
  return a;
}

std::pair<double, MlpGrads> mlp_loss_and_grads(const MlpParams& params,
                                               const Eigen::MatrixXd& inputs,
                                               const Eigen::MatrixXd& targets) {
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw InvalidArgument("empty batch");
  if (targets.rows() != n ||
      inputs.cols() != static_cast<Eigen::Index>(params.input_dim()) ||
      targets.cols() != static_cast<Eigen::Index>(params.output_dim()))
    throw InvalidArgument("batch shape mismatch");

  const std::size_t depth = params.layers.size();
  // Forward pass, keeping pre-activations for the backward sweep.
  std::vector<Eigen::MatrixXd> acts(depth + 1);
  std::vector<Eigen::MatrixXd> pre(depth);
  acts[0] = inputs;
  for (std::size_t l = 0; l < depth; ++l) {
    const MlpLayer& layer = params.layers[l];
    pre[l] = (acts[l] * layer.weight.transpose()).rowwise() +
             layer.bias.transpose();
    acts[l + 1] = apply_activation(pre[l], layer.activation);
  }

  const Eigen::MatrixXd diff = acts[depth] - targets;
  const double count = static_cast<double>(diff.size());
  const double loss = diff.array().abs().sum() / count;
  Eigen::MatrixXd grad_a =
      diff.array().sign().matrix() / count;  // sign() is 0 at ties

  MlpGrads grads;
  grads.weight.resize(depth);
  grads.bias.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    const MlpLayer& layer = params.layers[l];
    Eigen::MatrixXd grad_z =
        layer.activation == Activation::kRelu
            ? (pre[l].array() > 0.0).cast<double>().matrix().cwiseProduct(grad_a)
            : grad_a;
    grads.weight[l] = grad_z.transpose() * acts[l];
    grads.bias[l] = grad_z.colwise().sum().transpose();
    if (l > 0) grad_a = grad_z * layer.weight;
  }
  return {loss, std::move(grads)};
}

Eigen::VectorXd flatten_mlp(const MlpParams& params) {
  std::size_t total = 0;
  for (const auto& layer : params.layers)
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  Eigen::VectorXd flat(static_cast<Eigen::Index>(total));
  Eigen::Index k = 0;
  for (const auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        flat[k++] = layer.weight(r, c);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      flat[k++] = layer.bias[i];
  }
  return flat;
}

void unflatten_mlp(const Eigen::VectorXd& flat, MlpParams& params) {
  Eigen::Index k = 0;
  for (auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] = flat[k++];
  }
  if (k != flat.size())
    throw InvalidArgument("flat parameter vector has wrong length");
}

Eigen::VectorXd flatten_mlp_grads(const MlpGrads& grads) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < grads.weight.size(); ++l)
    total += static_cast<std::size_t>(grads.weight[l].size() +
                                      grads.bias[l].size());
  Eigen::VectorXd flat(static_cast<Eigen::Index>(total));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < grads.weight.size(); ++l) {
    for (Eigen::Index r = 0; r < grads.weight[l].rows(); ++r)
      for (Eigen::Index c = 0; c < grads.weight[l].cols(); ++c)
        flat[k++] = grads.weight[l](r, c);
    for (Eigen::Index i = 0; i < grads.bias[l].size(); ++i)
      flat[k++] = grads.bias[l][i];
  }
  return flat;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Channel statistics over selected rows; std is the population form.
void fit_standardizer(const std::vector<std::array<double, 8>>& rows,
                      const std::vector<std::size_t>& subset,
                      Eigen::VectorXd& mean, Eigen::VectorXd& std_dev,
                      const char* what) {
  mean = Eigen::VectorXd::Zero(8);
  std_dev = Eigen::VectorXd::Zero(8);
  for (std::size_t idx : subset)
    for (int c = 0; c < 8; ++c) mean[c] += rows[idx][static_cast<std::size_t>(c)];
  mean /= static_cast<double>(subset.size());
  for (std::size_t idx : subset)
    for (int c = 0; c < 8; ++c) {
      const double d = rows[idx][static_cast<std::size_t>(c)] - mean[c];
      std_dev[c] += d * d;
    }
  std_dev = (std_dev / static_cast<double>(subset.size())).cwiseSqrt();
  for (int c = 0; c < 8; ++c)
    if (!(std_dev[c] > 0.0))
      throw ConfigError(std::string(what) + " channel " + std::to_string(c + 1) +
                        " has zero variance in the training split");
}

Eigen::MatrixXd standardized_rows(const std::vector<std::array<double, 8>>& rows,
                                  const std::vector<std::size_t>& subset,
                                  const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& std_dev) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(subset.size()), 8);
  for (std::size_t r = 0; r < subset.size(); ++r)
    for (int c = 0; c < 8; ++c)
      out(static_cast<Eigen::Index>(r), c) =
          (rows[subset[r]][static_cast<std::size_t>(c)] - mean[c]) / std_dev[c];
  return out;
}

std::string digest_pairs(const PairSet& pairs) {
  std::string bytes;
  bytes.reserve(pairs.size() * 17 * sizeof(double));
  auto push = [&bytes](double v) {
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    bytes.append(buf, sizeof(double));
  };
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    push(pairs.times[k]);
    for (double v : pairs.inputs[k]) push(v);
    for (double v : pairs.targets[k]) push(v);
  }
  return digest_hex(fnv1a64(bytes));
}

}  // namespace

std::pair<MlpParams, TrainReport> train_taxel_model(
    const PairSet& pairs, const std::array<double, 8>& baselines_kpa,
    const std::vector<std::size_t>& hidden, const TrainConfig& config) {
  config.validate();
  if (pairs.size() < 2) throw InvalidArgument("need at least 2 training pairs");

  // Frame-level validation split.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, "taxel_model.split"));
  split_rng.shuffle(order);
  auto n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(pairs.size()) * config.val_fraction));
  n_val = std::clamp<std::size_t>(n_val, 1, pairs.size() - 1);
  std::vector<std::size_t> val_idx(order.begin(),
                                   order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<long>(n_val),
                                     order.end());

  std::vector<std::size_t> dims;
  dims.push_back(8);
  for (std::size_t h : hidden) dims.push_back(h);
  dims.push_back(8);
  MlpParams params = make_mlp(dims, derive_seed(config.seed, "taxel_model.init"));
  fit_standardizer(pairs.inputs, train_idx, params.input_mean, params.input_std,
                   "feature");
  fit_standardizer(pairs.targets, train_idx, params.target_mean,
                   params.target_std, "target");
  params.baselines_kpa = baselines_kpa;
  params.validate();

  const Eigen::MatrixXd train_x =
      standardized_rows(pairs.inputs, train_idx, params.input_mean, params.input_std);
  const Eigen::MatrixXd train_y = standardized_rows(
      pairs.targets, train_idx, params.target_mean, params.target_std);
  const Eigen::MatrixXd val_x =
      standardized_rows(pairs.inputs, val_idx, params.input_mean, params.input_std);
  const Eigen::MatrixXd val_y = standardized_rows(
      pairs.targets, val_idx, params.target_mean, params.target_std);

  Eigen::VectorXd flat = flatten_mlp(params);
  AdamWState opt(flat.size());
  PlateauState schedule;
  schedule.lr = config.learning_rate;
  schedule.factor = config.plateau_factor;
  schedule.patience = config.plateau_patience;
  schedule.rel_threshold = config.plateau_rel_threshold;
  schedule.min_lr = config.min_learning_rate;

  Rng epoch_rng(derive_seed(config.seed, "taxel_model.epochs"));
  const auto n_train = static_cast<std::size_t>(train_x.rows());
  std::vector<std::size_t> batch_order(n_train);
  std::iota(batch_order.begin(), batch_order.end(), 0);

  TrainReport report;
  report.seed = config.seed;
  report.train_count = n_train;
  report.val_count = n_val;
  report.dataset_digest = digest_pairs(pairs);

  Eigen::VectorXd best_flat = flat;
  double best_val = std::numeric_limits<double>::infinity();
  double lr = schedule.lr;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    epoch_rng.shuffle(batch_order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n_train, start + static_cast<std::size_t>(config.batch_size));
      const auto rows = static_cast<Eigen::Index>(stop - start);
      Eigen::MatrixXd bx(rows, 8), by(rows, 8);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto src = static_cast<Eigen::Index>(
            batch_order[start + static_cast<std::size_t>(r)]);
        bx.row(r) = train_x.row(src);
        by.row(r) = train_y.row(src);
      }
      if (config.input_noise_sigma > 0.0)
        for (Eigen::Index r = 0; r < rows; ++r)
          for (Eigen::Index c = 0; c < 8; ++c)
            bx(r, c) += epoch_rng.normal(0.0, config.input_noise_sigma);

      auto [loss, grads] = mlp_loss_and_grads(params, bx, by);
      epoch_loss += loss * static_cast<double>(rows);
      Eigen::VectorXd g = flatten_mlp_grads(grads);
      clip_grad_norm(g, config.clip_max_norm);
      adamw_step(flat, g, opt, lr, 0.9, 0.999, 1e-8, config.weight_decay);
      unflatten_mlp(flat, params);
    }
    epoch_loss /= static_cast<double>(n_train);

    // Noise-free validation loss.
    double val_loss = 0.0;
    for (Eigen::Index r = 0; r < val_x.rows(); ++r)
      val_loss +=
          l1_loss(mlp_forward(params, val_x.row(r).transpose()),
                  val_y.row(r).transpose())
              .first;
    val_loss /= static_cast<double>(val_x.rows());

    report.train_loss.push_back(epoch_loss);
    report.val_loss.push_back(val_loss);
    report.lr_by_epoch.push_back(lr);
    if (val_loss < best_val) {
      best_val = val_loss;
      best_flat = flat;
      report.best_epoch = epoch;
    }
    bool reduced = false;
    lr = plateau_update(schedule, val_loss, &reduced);
    if (reduced) report.lr_reductions.push_back(epoch);
  }

  report.best_val_loss = best_val;
  unflatten_mlp(best_flat, params);
  return {std::move(params), std::move(report)};
}

TaxelTrace predict_taxel_trace(const MlpParams& params,
                           const std::vector<std::array<double, 8>>& features,
                           double rate_hz) {
  params.validate();
  if (!(rate_hz > 0.0)) throw InvalidArgument("rate must be positive");
  TaxelTrace trace;
  trace.rate_hz = rate_hz;
  trace.samples.resize(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    Eigen::VectorXd x(8);
    for (int c = 0; c < 8; ++c)
      x[c] = (features[k][static_cast<std::size_t>(c)] - params.input_mean[c]) /
             params.input_std[c];
    const Eigen::VectorXd y = mlp_forward(params, x);
    for (int c = 0; c < 8; ++c)
      trace.samples[k][static_cast<std::size_t>(c)] =
          y[c] * params.target_std[c] + params.target_mean[c] +
          params.baselines_kpa[static_cast<std::size_t>(c)];
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index k = 0;
  for (const auto& x : arr) v[k++] = x.get<double>();
  return v;
}

std::string blob_encode(const Eigen::VectorXd& flat) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(flat.size()) * 8);
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &flat[i], sizeof bits);
    for (int k = 0; k < 8; ++k)
      bytes.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xffu));
  }
  return base64_encode(bytes.data(), bytes.size());
}

Eigen::VectorXd blob_decode(const std::string& text, std::size_t expect) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expect * 8)
    throw CorruptionError("model parameter blob has wrong length");
  Eigen::VectorXd flat(static_cast<Eigen::Index>(expect));
  for (std::size_t i = 0; i < expect; ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k)
      bits |= static_cast<std::uint64_t>(bytes[8 * i + static_cast<std::size_t>(k)])
              << (8 * k);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    flat[static_cast<Eigen::Index>(i)] = v;
  }
  return flat;
}

constexpr int kModelFormatVersion = 1;

}  // namespace

void save_mlp(const MlpParams& params, const std::string& path) {
  params.validate();
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "taxel_mlp";
  json dims = json::array();
  dims.push_back(params.input_dim());
  for (const auto& layer : params.layers)
    dims.push_back(static_cast<std::size_t>(layer.weight.rows()));
  doc["dims"] = dims;
  json acts = json::array();
  for (const auto& layer : params.layers)
    acts.push_back(layer.activation == Activation::kRelu ? "relu" : "linear");
  doc["activations"] = acts;
  doc["input_mean"] = vector_to_json(params.input_mean);
  doc["input_std"] = vector_to_json(params.input_std);
  doc["target_mean"] = vector_to_json(params.target_mean);
  doc["target_std"] = vector_to_json(params.target_std);
  doc["baselines_kpa"] = params.baselines_kpa;
  const Eigen::VectorXd flat = flatten_mlp(params);
  doc["param_count"] = static_cast<std::size_t>(flat.size());
  doc["params_base64"] = blob_encode(flat);
  write_text_file(path, doc.dump(2) + "\n");
}

MlpParams load_mlp(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed model file " + path + ": " + ex.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw UnsupportedVersion("model format_version not supported");
    if (doc.at("kind").get<std::string>() != "taxel_mlp")
      throw CorruptionError("model file is not a taxel_mlp");
    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    const auto acts = doc.at("activations").get<std::vector<std::string>>();
    if (dims.size() < 2 || acts.size() + 1 != dims.size())
      throw CorruptionError("model dims/activations are inconsistent");
    MlpParams params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      MlpLayer layer;
      layer.weight.resize(static_cast<Eigen::Index>(dims[l + 1]),
                          static_cast<Eigen::Index>(dims[l]));
      layer.bias.resize(static_cast<Eigen::Index>(dims[l + 1]));
      if (acts[l] == "relu")
        layer.activation = Activation::kRelu;
      else if (acts[l] == "linear")
        layer.activation = Activation::kLinear;
      else
        throw CorruptionError("unknown activation " + acts[l]);
      params.layers.push_back(std::move(layer));
    }
    params.input_mean = vector_from_json(doc.at("input_mean"));
    params.input_std = vector_from_json(doc.at("input_std"));
    params.target_mean = vector_from_json(doc.at("target_mean"));
    params.target_std = vector_from_json(doc.at("target_std"));
    const auto baselines = doc.at("baselines_kpa").get<std::vector<double>>();
    if (baselines.size() != 8)
      throw CorruptionError("model baselines must have 8 entries");
    std::copy(baselines.begin(), baselines.end(), params.baselines_kpa.begin());
    const auto count = doc.at("param_count").get<std::size_t>();
    const Eigen::VectorXd flat =
        blob_decode(doc.at("params_base64").get<std::string>(), count);
    unflatten_mlp(flat, params);
    params.validate();
    return params;
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed model file " + path + ": " + ex.what());
  }
}

}  // namespace tacsim
