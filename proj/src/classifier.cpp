#include "tacsim/classifier.hpp"

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

namespace {
constexpr double kLayerNormEps = 1e-5;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

void ClassifierConfig::validate() const {
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
  if (num_heads < 1 || d_model % num_heads != 0)
    throw ConfigError("num_heads must divide d_model");
  if (ff_dim < 1) throw ConfigError("ff_dim must be >= 1");
  if (labels.size() < 2) throw ConfigError("need at least 2 class labels");
}

void ClassifierParams::validate() const {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto c = static_cast<Eigen::Index>(config.channels);
  if (input_mean.size() != c || input_std.size() != c)
    throw InvalidArgument("classifier normalization stats have wrong size");
  if (!(input_std.array() > 0.0).all())
    throw InvalidArgument("classifier normalization stds must be positive");
  if (input_proj_w.rows() != d || input_proj_w.cols() != c ||
      input_proj_b.size() != d)
    throw InvalidArgument("input projection has wrong shape");
  if (positional.rows() != static_cast<Eigen::Index>(config.seq_len) ||
      positional.cols() != d)
    throw InvalidArgument("position table has wrong shape");
  if (blocks.size() != config.num_blocks)
    throw InvalidArgument("wrong number of encoder blocks");
  for (const auto& b : blocks) {
    if (b.wq.rows() != d || b.wq.cols() != d || b.wk.rows() != d ||
        b.wk.cols() != d || b.wv.rows() != d || b.wv.cols() != d ||
        b.wo.rows() != d || b.wo.cols() != d)
      throw InvalidArgument("attention projection has wrong shape");
    if (b.ff_w1.rows() != static_cast<Eigen::Index>(config.ff_dim) ||
        b.ff_w1.cols() != d ||
        b.ff_w2.rows() != d ||
        b.ff_w2.cols() != static_cast<Eigen::Index>(config.ff_dim))
      throw InvalidArgument("feed-forward has wrong shape");
  }
  if (head_w.rows() != static_cast<Eigen::Index>(config.class_count()) ||
      head_w.cols() != d ||
      head_b.size() != static_cast<Eigen::Index>(config.class_count()))
    throw InvalidArgument("class head has wrong shape");
}

Eigen::MatrixXd sinusoidal_positions(std::size_t seq_len, std::size_t d_model) {
  Eigen::MatrixXd pos(static_cast<Eigen::Index>(seq_len),
                      static_cast<Eigen::Index>(d_model));
  for (std::size_t t = 0; t < seq_len; ++t)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double exponent =
          static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, exponent);
      pos(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) =
          (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pos;
}

namespace {

Eigen::MatrixXd fan_in_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double limit = 1.0 / std::sqrt(static_cast<double>(cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

}  // namespace

ClassifierParams make_classifier(const ClassifierConfig& config,
                                 std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto c = static_cast<Eigen::Index>(config.channels);
  const auto ff = static_cast<Eigen::Index>(config.ff_dim);

  ClassifierParams params;
  params.config = config;
  params.input_mean = Eigen::VectorXd::Zero(c);
  params.input_std = Eigen::VectorXd::Ones(c);
  params.input_proj_w = fan_in_matrix(d, c, rng);
  params.input_proj_b = Eigen::VectorXd::Zero(d);
  params.positional = sinusoidal_positions(config.seq_len, config.d_model);
  for (std::size_t b = 0; b < config.num_blocks; ++b) {
    EncoderBlock block;
    block.ln1_gamma = Eigen::VectorXd::Ones(d);
    block.ln1_beta = Eigen::VectorXd::Zero(d);
    block.wq = fan_in_matrix(d, d, rng);
    block.wk = fan_in_matrix(d, d, rng);
    block.wv = fan_in_matrix(d, d, rng);
    block.wo = fan_in_matrix(d, d, rng);
    block.bq = Eigen::VectorXd::Zero(d);
    block.bk = Eigen::VectorXd::Zero(d);
    block.bv = Eigen::VectorXd::Zero(d);
    block.bo = Eigen::VectorXd::Zero(d);
    block.ln2_gamma = Eigen::VectorXd::Ones(d);
    block.ln2_beta = Eigen::VectorXd::Zero(d);
    block.ff_w1 = fan_in_matrix(ff, d, rng);
    block.ff_b1 = Eigen::VectorXd::Zero(ff);
    block.ff_w2 = fan_in_matrix(d, ff, rng);
    block.ff_b2 = Eigen::VectorXd::Zero(d);
    params.blocks.push_back(std::move(block));
  }
  params.head_w =
      fan_in_matrix(static_cast<Eigen::Index>(config.class_count()), d, rng);
  params.head_b =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.class_count()));
  return params;
}

// ---------------------------------------------------------------------------
// Forward with tape
// ---------------------------------------------------------------------------

namespace {

// Row-wise layer normalization, keeping what the backward pass needs.
struct LnTape {
  Eigen::MatrixXd x_hat;        // normalized rows before gain/offset
  Eigen::VectorXd inv_std;      // per row
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& gamma,
                           const Eigen::VectorXd& beta, LnTape& tape) {
  const Eigen::Index rows = x.rows(), d = x.cols();
  tape.x_hat.resize(rows, d);
  tape.inv_std.resize(rows);
  Eigen::MatrixXd out(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    tape.inv_std[r] = inv;
    tape.x_hat.row(r) = (x.row(r).array() - mu) * inv;
    out.row(r) = tape.x_hat.row(r).cwiseProduct(gamma.transpose()) +
                 beta.transpose();
  }
  return out;
}

// dL/dx for y = gamma .* x_hat + beta, accumulating dgamma/dbeta.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy,
                                    const LnTape& tape,
                                    const Eigen::VectorXd& gamma,
                                    Eigen::VectorXd& dgamma,
                                    Eigen::VectorXd& dbeta) {
  const Eigen::Index rows = dy.rows(), d = dy.cols();
  Eigen::MatrixXd dx(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r) {
    dbeta += dy.row(r).transpose();
    dgamma += dy.row(r).cwiseProduct(tape.x_hat.row(r)).transpose();
    const Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(gamma.transpose());
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(tape.x_hat.row(r)).mean();
    dx.row(r) =
        (dxhat.array() - m1 - tape.x_hat.row(r).array() * m2) * tape.inv_std[r];
  }
  return dx;
}

struct BlockTape {
  LnTape ln1;
  Eigen::MatrixXd n1;            // LN1 output
  Eigen::MatrixXd q, k, v;       // projections
  std::vector<Eigen::MatrixXd> attn;  // per head, row-stochastic
  Eigen::MatrixXd concat;        // attention head outputs, concatenated
  Eigen::MatrixXd x2;            // x + attention
  LnTape ln2;
  Eigen::MatrixXd n2;            // LN2 output
  Eigen::MatrixXd ff_pre;        // before ReLU
  Eigen::MatrixXd ff_act;        // after ReLU
};

struct ForwardTape {
  Eigen::MatrixXd seq_std;       // standardized input
  Eigen::MatrixXd x0;            // projection + positions
  std::vector<BlockTape> blocks;
  Eigen::MatrixXd x_final;
  Eigen::VectorXd pooled;
  Eigen::VectorXd logits;
};

void forward_one(const ClassifierParams& params, const Eigen::MatrixXd& seq,
                 ForwardTape& tape) {
  const auto& cfg = params.config;
  const auto t_len = static_cast<Eigen::Index>(cfg.seq_len);
  const auto channels = static_cast<Eigen::Index>(cfg.channels);
  if (seq.rows() != t_len || seq.cols() != channels)
    throw InvalidArgument("sequence shape does not match the classifier");
  const std::size_t heads = cfg.num_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  tape.seq_std.resize(t_len, channels);
  for (Eigen::Index c = 0; c < channels; ++c)
    tape.seq_std.col(c) =
        (seq.col(c).array() - params.input_mean[c]) / params.input_std[c];

  tape.x0 = (tape.seq_std * params.input_proj_w.transpose()).rowwise() +
            params.input_proj_b.transpose();
  tape.x0 += params.positional;

  tape.blocks.assign(cfg.num_blocks, BlockTape{});
  Eigen::MatrixXd x = tape.x0;
  for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
    const EncoderBlock& blk = params.blocks[b];
    BlockTape& bt = tape.blocks[b];

    bt.n1 = layer_norm(x, blk.ln1_gamma, blk.ln1_beta, bt.ln1);
    bt.q = (bt.n1 * blk.wq.transpose()).rowwise() + blk.bq.transpose();
    bt.k = (bt.n1 * blk.wk.transpose()).rowwise() + blk.bk.transpose();
    bt.v = (bt.n1 * blk.wv.transpose()).rowwise() + blk.bv.transpose();

    bt.concat.resize(t_len, static_cast<Eigen::Index>(cfg.d_model));
    bt.attn.resize(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      const auto qh = bt.q.middleCols(off, dh);
      const auto kh = bt.k.middleCols(off, dh);
      const auto vh = bt.v.middleCols(off, dh);
      Eigen::MatrixXd scores = scale * (qh * kh.transpose());
      for (Eigen::Index r = 0; r < t_len; ++r) {
        const double m = scores.row(r).maxCoeff();
        Eigen::ArrayXd e = (scores.row(r).array() - m).exp();
        scores.row(r) = (e / e.sum()).matrix();
      }
      bt.attn[h] = scores;  // now row-stochastic
      bt.concat.middleCols(off, dh) = bt.attn[h] * vh;
    }
    Eigen::MatrixXd attended =
        (bt.concat * blk.wo.transpose()).rowwise() + blk.bo.transpose();
    bt.x2 = x + attended;

    bt.n2 = layer_norm(bt.x2, blk.ln2_gamma, blk.ln2_beta, bt.ln2);
    bt.ff_pre = (bt.n2 * blk.ff_w1.transpose()).rowwise() +
                blk.ff_b1.transpose();
    bt.ff_act = bt.ff_pre.cwiseMax(0.0);
    const Eigen::MatrixXd ff_out =
        (bt.ff_act * blk.ff_w2.transpose()).rowwise() + blk.ff_b2.transpose();
    x = bt.x2 + ff_out;
  }
  tape.x_final = x;
  tape.pooled = x.colwise().mean().transpose();
  tape.logits = params.head_w * tape.pooled + params.head_b;
}

// Gradient accumulator shaped like the trainable parameters.
struct ClassifierGrads {
  Eigen::MatrixXd input_proj_w;
  Eigen::VectorXd input_proj_b;
  std::vector<EncoderBlock> blocks;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
};

ClassifierGrads zero_grads(const ClassifierParams& params) {
  ClassifierGrads g;
  g.input_proj_w = Eigen::MatrixXd::Zero(params.input_proj_w.rows(),
                                         params.input_proj_w.cols());
  g.input_proj_b = Eigen::VectorXd::Zero(params.input_proj_b.size());
  g.blocks.resize(params.blocks.size());
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const EncoderBlock& src = params.blocks[b];
    EncoderBlock& dst = g.blocks[b];
    dst.ln1_gamma = Eigen::VectorXd::Zero(src.ln1_gamma.size());
    dst.ln1_beta = Eigen::VectorXd::Zero(src.ln1_beta.size());
    dst.wq = Eigen::MatrixXd::Zero(src.wq.rows(), src.wq.cols());
    dst.wk = Eigen::MatrixXd::Zero(src.wk.rows(), src.wk.cols());
    dst.wv = Eigen::MatrixXd::Zero(src.wv.rows(), src.wv.cols());
    dst.wo = Eigen::MatrixXd::Zero(src.wo.rows(), src.wo.cols());
    dst.bq = Eigen::VectorXd::Zero(src.bq.size());
    dst.bk = Eigen::VectorXd::Zero(src.bk.size());
    dst.bv = Eigen::VectorXd::Zero(src.bv.size());
    dst.bo = Eigen::VectorXd::Zero(src.bo.size());
    dst.ln2_gamma = Eigen::VectorXd::Zero(src.ln2_gamma.size());
    dst.ln2_beta = Eigen::VectorXd::Zero(src.ln2_beta.size());
    dst.ff_w1 = Eigen::MatrixXd::Zero(src.ff_w1.rows(), src.ff_w1.cols());
    dst.ff_b1 = Eigen::VectorXd::Zero(src.ff_b1.size());
    dst.ff_w2 = Eigen::MatrixXd::Zero(src.ff_w2.rows(), src.ff_w2.cols());
    dst.ff_b2 = Eigen::VectorXd::Zero(src.ff_b2.size());
  }
  g.head_w = Eigen::MatrixXd::Zero(params.head_w.rows(), params.head_w.cols());
  g.head_b = Eigen::VectorXd::Zero(params.head_b.size());
  return g;
}

void backward_one(const ClassifierParams& params, const ForwardTape& tape,
                  const Eigen::VectorXd& dlogits, ClassifierGrads& grads) {
  const auto& cfg = params.config;
  const auto t_len = static_cast<Eigen::Index>(cfg.seq_len);
  const std::size_t heads = cfg.num_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  grads.head_w += dlogits * tape.pooled.transpose();
  grads.head_b += dlogits;
  const Eigen::VectorXd dpooled = params.head_w.transpose() * dlogits;
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(t_len, tape.x_final.cols());
  dx.rowwise() += dpooled.transpose() / static_cast<double>(t_len);

  for (std::size_t b = cfg.num_blocks; b-- > 0;) {
    const EncoderBlock& blk = params.blocks[b];
    EncoderBlock& g = grads.blocks[b];
    const BlockTape& bt = tape.blocks[b];

    // y = x2 + ff(LN2(x2))
    Eigen::MatrixXd dx2 = dx;
    const Eigen::MatrixXd& d_ff_out = dx;
    g.ff_w2 += d_ff_out.transpose() * bt.ff_act;
    g.ff_b2 += d_ff_out.colwise().sum().transpose();
    Eigen::MatrixXd d_act = d_ff_out * blk.ff_w2;
    Eigen::MatrixXd d_pre =
        (bt.ff_pre.array() > 0.0).cast<double>().matrix().cwiseProduct(d_act);
    g.ff_w1 += d_pre.transpose() * bt.n2;
    g.ff_b1 += d_pre.colwise().sum().transpose();
    const Eigen::MatrixXd dn2 = d_pre * blk.ff_w1;
    dx2 += layer_norm_backward(dn2, bt.ln2, blk.ln2_gamma, g.ln2_gamma,
                               g.ln2_beta);

    // x2 = x + attention(LN1(x))
    const Eigen::MatrixXd& d_attended = dx2;
    g.wo += d_attended.transpose() * bt.concat;
    g.bo += d_attended.colwise().sum().transpose();
    const Eigen::MatrixXd d_concat = d_attended * blk.wo;

    Eigen::MatrixXd dq(t_len, bt.q.cols()), dk(t_len, bt.k.cols()),
        dv(t_len, bt.v.cols());
    for (std::size_t h = 0; h < heads; ++h) {
      const auto off = static_cast<Eigen::Index>(h) * dh;
      const auto qh = bt.q.middleCols(off, dh);
      const auto kh = bt.k.middleCols(off, dh);
      const auto vh = bt.v.middleCols(off, dh);
      const Eigen::MatrixXd& ah = bt.attn[h];
      const auto d_out_h = d_concat.middleCols(off, dh);

      const Eigen::MatrixXd da = d_out_h * vh.transpose();
      dv.middleCols(off, dh) = ah.transpose() * d_out_h;
      // Softmax rows: ds = a .* (da - rowsum(da .* a))
      Eigen::MatrixXd ds(t_len, t_len);
      for (Eigen::Index r = 0; r < t_len; ++r) {
        const double dot = da.row(r).dot(ah.row(r));
        ds.row(r) = (ah.row(r).array() * (da.row(r).array() - dot)).matrix();
      }
      dq.middleCols(off, dh) = scale * (ds * kh);
      dk.middleCols(off, dh) = scale * (ds.transpose() * qh);
    }
    g.wq += dq.transpose() * bt.n1;
    g.bq += dq.colwise().sum().transpose();
    g.wk += dk.transpose() * bt.n1;
    g.bk += dk.colwise().sum().transpose();
    g.wv += dv.transpose() * bt.n1;
    g.bv += dv.colwise().sum().transpose();
    const Eigen::MatrixXd dn1 = dq * blk.wq + dk * blk.wk + dv * blk.wv;
    dx = dx2 + layer_norm_backward(dn1, bt.ln1, blk.ln1_gamma, g.ln1_gamma,
                                   g.ln1_beta);
  }

  grads.input_proj_w += dx.transpose() * tape.seq_std;
  grads.input_proj_b += dx.colwise().sum().transpose();
}

// Parameter blocks in serialization order, as (matrix ptr, vector ptr)
// visitation. Exactly one of the two pointers is non-null per block.
template <typename Params, typename MatrixFn, typename VectorFn>
void visit_params(Params& p, MatrixFn&& on_matrix, VectorFn&& on_vector) {
  on_matrix(p.input_proj_w);
  on_vector(p.input_proj_b);
  for (auto& b : p.blocks) {
    on_vector(b.ln1_gamma);
    on_vector(b.ln1_beta);
    on_matrix(b.wq);
    on_vector(b.bq);
    on_matrix(b.wk);
    on_vector(b.bk);
    on_matrix(b.wv);
    on_vector(b.bv);
    on_matrix(b.wo);
    on_vector(b.bo);
    on_vector(b.ln2_gamma);
    on_vector(b.ln2_beta);
    on_matrix(b.ff_w1);
    on_vector(b.ff_b1);
    on_matrix(b.ff_w2);
    on_vector(b.ff_b2);
  }
  on_matrix(p.head_w);
  on_vector(p.head_b);
}

template <typename Params>
std::size_t param_count(Params& p) {
  std::size_t n = 0;
  visit_params(
      p, [&n](auto& m) { n += static_cast<std::size_t>(m.size()); },
      [&n](auto& v) { n += static_cast<std::size_t>(v.size()); });
  return n;
}

template <typename Params>
Eigen::VectorXd flatten_any(Params& p) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(p)));
  Eigen::Index k = 0;
  visit_params(
      p,
      [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
          for (Eigen::Index c = 0; c < m.cols(); ++c) flat[k++] = m(r, c);
      },
      [&](auto& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) flat[k++] = v[i];
      });
  return flat;
}

template <typename Params>
void unflatten_any(const Eigen::VectorXd& flat, Params& p) {
  Eigen::Index k = 0;
  visit_params(
      p,
      [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
          for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++];
      },
      [&](auto& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = flat[k++];
      });
  if (k != flat.size())
    throw InvalidArgument("flat parameter vector has wrong length");
}

}  // namespace

// ---------------------------------------------------------------------------
// Public forward / gradients
// ---------------------------------------------------------------------------

Eigen::VectorXd classifier_forward(const ClassifierParams& params,
                                   const Eigen::MatrixXd& sequence) {
  ForwardTape tape;
  forward_one(params, sequence, tape);
  return tape.logits;
}

std::vector<Eigen::MatrixXd> classifier_attention(
    const ClassifierParams& params, const Eigen::MatrixXd& sequence) {
  ForwardTape tape;
  forward_one(params, sequence, tape);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& bt : tape.blocks)
    for (const auto& a : bt.attn) out.push_back(a);
  return out;
}

std::pair<double, Eigen::VectorXd> classifier_loss_and_grads(
    const ClassifierParams& params,
    const std::vector<Eigen::MatrixXd>& sequences,
    const std::vector<std::size_t>& labels) {
  if (sequences.empty() || sequences.size() != labels.size())
    throw InvalidArgument("batch is empty or shapes mismatch");
  ClassifierGrads grads = zero_grads(params);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(sequences.size());
  ForwardTape tape;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    forward_one(params, sequences[s], tape);
    auto [sample_loss, dlogits] = cross_entropy_loss(tape.logits, labels[s]);
    loss += sample_loss * inv_n;
    dlogits *= inv_n;
    backward_one(params, tape, dlogits, grads);
  }
  return {loss, flatten_any(grads)};
}

Eigen::VectorXd flatten_classifier(const ClassifierParams& params) {
  return flatten_any(params);
}

void unflatten_classifier(const Eigen::VectorXd& flat,
                          ClassifierParams& params) {
  unflatten_any(flat, params);
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

Eigen::MatrixXd resample_sequence(const Eigen::MatrixXd& sequence,
                                  std::size_t target_len) {
  if (sequence.rows() == 0) throw InvalidArgument("empty sequence");
  if (target_len == 0) throw InvalidArgument("target length must be >= 1");
  const auto t_out = static_cast<Eigen::Index>(target_len);
  Eigen::MatrixXd out(t_out, sequence.cols());
  if (sequence.rows() == 1 || t_out == 1) {
    for (Eigen::Index r = 0; r < t_out; ++r) out.row(r) = sequence.row(0);
    return out;
  }
  const double step = static_cast<double>(sequence.rows() - 1) /
                      static_cast<double>(t_out - 1);
  for (Eigen::Index r = 0; r < t_out; ++r) {
    const double pos = static_cast<double>(r) * step;
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const auto hi = std::min(lo + 1, static_cast<Eigen::Index>(sequence.rows() - 1));
    const double w = pos - static_cast<double>(lo);
    out.row(r) = (1.0 - w) * sequence.row(lo) + w * sequence.row(hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training / evaluation
// ---------------------------------------------------------------------------

std::pair<ClassifierParams, TrainReport> train_classifier(
    const std::vector<LabeledSequence>& data, const ClassifierConfig& config,
    const TrainConfig& train_config) {
  config.validate();
  train_config.validate();
  const std::size_t classes = config.class_count();
  if (data.empty()) throw InvalidArgument("empty training set");

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].label >= classes)
      throw InvalidArgument("label out of range");
    by_class[data[i].label].push_back(i);
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (by_class[c].empty())
      throw ConfigError("class " + config.labels[c] +
                        " has no training sequences");

  // Stratified validation split at whole-sequence (trial) granularity.
  Rng split_rng(derive_seed(train_config.seed, "classifier.split"));
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& members = by_class[c];
    split_rng.shuffle(members);
    const auto n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(members.size()) *
                   train_config.val_fraction));
    for (std::size_t k = 0; k < members.size(); ++k)
      (k < n_val ? val_idx : train_idx).push_back(members[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  // Resample to the fixed length and fit standardization on training data.
  auto prepare = [&](const std::vector<std::size_t>& idx) {
    std::vector<Eigen::MatrixXd> seqs;
    std::vector<std::size_t> labels;
    seqs.reserve(idx.size());
    labels.reserve(idx.size());
    for (std::size_t i : idx) {
      if (data[i].sequence.cols() !=
          static_cast<Eigen::Index>(config.channels))
        throw InvalidArgument("sequence channel count mismatch");
      seqs.push_back(resample_sequence(data[i].sequence, config.seq_len));
      labels.push_back(data[i].label);
    }
    return std::make_pair(std::move(seqs), std::move(labels));
  };
  auto [train_seqs, train_labels] = prepare(train_idx);
  auto [val_seqs, val_labels] = prepare(val_idx);

  ClassifierParams params =
      make_classifier(config, derive_seed(train_config.seed, "classifier.init"));
  {
    const auto channels = static_cast<Eigen::Index>(config.channels);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(channels);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(channels);
    double count = 0.0;
    for (const auto& s : train_seqs) {
      mean += s.colwise().sum().transpose();
      count += static_cast<double>(s.rows());
    }
    mean /= count;
    for (const auto& s : train_seqs)
      var += (s.rowwise() - mean.transpose())
                 .array()
                 .square()
                 .colwise()
                 .sum()
                 .matrix()
                 .transpose();
    var /= count;
    params.input_mean = mean;
    for (Eigen::Index c = 0; c < channels; ++c)
      params.input_std[c] = var[c] > 0.0 ? std::sqrt(var[c]) : 1.0;
  }

  Eigen::VectorXd flat = flatten_classifier(params);
  AdamWState opt(flat.size());
  PlateauState schedule;
  schedule.lr = train_config.learning_rate;
  schedule.factor = train_config.plateau_factor;
  schedule.patience = train_config.plateau_patience;
  schedule.rel_threshold = train_config.plateau_rel_threshold;
  schedule.min_lr = train_config.min_learning_rate;

  Rng epoch_rng(derive_seed(train_config.seed, "classifier.epochs"));
  std::vector<std::size_t> order(train_seqs.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.seed = train_config.seed;
  report.train_count = train_seqs.size();
  report.val_count = val_seqs.size();
  {
    std::string bytes;
    for (const auto& s : train_seqs)
      bytes.append(reinterpret_cast<const char*>(s.data()),
                   static_cast<std::size_t>(s.size()) * sizeof(double));
    for (std::size_t l : train_labels) bytes.push_back(static_cast<char>(l));
    report.dataset_digest = digest_hex(fnv1a64(bytes));
  }

  Eigen::VectorXd best_flat = flat;
  double best_val = std::numeric_limits<double>::infinity();
  double lr = schedule.lr;
  const auto batch = static_cast<std::size_t>(train_config.batch_size);

  std::vector<Eigen::MatrixXd> batch_seqs;
  std::vector<std::size_t> batch_labels;
  for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    epoch_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      batch_seqs.clear();
      batch_labels.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch_seqs.push_back(train_seqs[order[k]]);
        batch_labels.push_back(train_labels[order[k]]);
      }
      if (train_config.input_noise_sigma > 0.0)
        for (auto& s : batch_seqs)
          for (Eigen::Index r = 0; r < s.rows(); ++r)
            for (Eigen::Index c = 0; c < s.cols(); ++c)
              s(r, c) += epoch_rng.normal(
                  0.0, train_config.input_noise_sigma * params.input_std[c]);

      auto [loss, grads] =
          classifier_loss_and_grads(params, batch_seqs, batch_labels);
      epoch_loss += loss * static_cast<double>(stop - start);
      clip_grad_norm(grads, train_config.clip_max_norm);
      adamw_step(flat, grads, opt, lr, 0.9, 0.999, 1e-8,
                 train_config.weight_decay);
      unflatten_classifier(flat, params);
    }
    epoch_loss /= static_cast<double>(order.size());

    double signal = epoch_loss;
    if (!val_seqs.empty()) {
      double val_loss = 0.0;
      for (std::size_t s = 0; s < val_seqs.size(); ++s)
        val_loss +=
            cross_entropy_loss(classifier_forward(params, val_seqs[s]),
                               val_labels[s])
                .first;
      signal = val_loss / static_cast<double>(val_seqs.size());
    }

    report.train_loss.push_back(epoch_loss);
    report.val_loss.push_back(signal);
    report.lr_by_epoch.push_back(lr);
    if (signal < best_val) {
      best_val = signal;
      best_flat = flat;
      report.best_epoch = epoch;
    }
    bool reduced = false;
    lr = plateau_update(schedule, signal, &reduced);
    if (reduced) report.lr_reductions.push_back(epoch);
  }

  report.best_val_loss = best_val;
  unflatten_classifier(best_flat, params);
  return {std::move(params), std::move(report)};
}

EvalResult evaluate_classifier(const ClassifierParams& params,
                               const std::vector<LabeledSequence>& test_data) {
  const std::size_t classes = params.config.class_count();
  EvalResult result;
  result.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (const auto& item : test_data) {
    if (item.label >= classes) throw InvalidArgument("label out of range");
    const Eigen::MatrixXd seq =
        resample_sequence(item.sequence, params.config.seq_len);
    const Eigen::VectorXd logits = classifier_forward(params, seq);
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    result.confusion[item.label][static_cast<std::size_t>(arg)] += 1;
    if (static_cast<std::size_t>(arg) == item.label) ++correct;
  }
  result.accuracy = test_data.empty()
                        ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(test_data.size());
  result.per_class_accuracy.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes; ++k) row += result.confusion[c][k];
    if (row > 0)
      result.per_class_accuracy[c] =
          static_cast<double>(result.confusion[c][c]) /
          static_cast<double>(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr int kClassifierFormatVersion = 1;

std::string blob_encode_flat(const Eigen::VectorXd& flat) {
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

Eigen::VectorXd blob_decode_flat(const std::string& text, std::size_t expect) {
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

}  // namespace

void save_classifier(const ClassifierParams& params, const std::string& path) {
  params.validate();
  json doc;
  doc["format_version"] = kClassifierFormatVersion;
  doc["kind"] = "shape_classifier";
  doc["seq_len"] = params.config.seq_len;
  doc["channels"] = params.config.channels;
  doc["d_model"] = params.config.d_model;
  doc["num_blocks"] = params.config.num_blocks;
  doc["num_heads"] = params.config.num_heads;
  doc["ff_dim"] = params.config.ff_dim;
  doc["labels"] = params.config.labels;
  json mean = json::array(), stddev = json::array();
  for (Eigen::Index c = 0; c < params.input_mean.size(); ++c) {
    mean.push_back(params.input_mean[c]);
    stddev.push_back(params.input_std[c]);
  }
  doc["input_mean"] = mean;
  doc["input_std"] = stddev;
  const Eigen::VectorXd flat = flatten_classifier(params);
  doc["param_count"] = static_cast<std::size_t>(flat.size());
  doc["params_base64"] = blob_encode_flat(flat);
  write_text_file(path, doc.dump(2) + "\n");
}

ClassifierParams load_classifier(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed model file " + path + ": " + ex.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kClassifierFormatVersion)
      throw UnsupportedVersion("classifier format_version not supported");
    if (doc.at("kind").get<std::string>() != "shape_classifier")
      throw CorruptionError("model file is not a shape_classifier");
    ClassifierConfig config;
    config.seq_len = doc.at("seq_len").get<std::size_t>();
    config.channels = doc.at("channels").get<std::size_t>();
    config.d_model = doc.at("d_model").get<std::size_t>();
    config.num_blocks = doc.at("num_blocks").get<std::size_t>();
    config.num_heads = doc.at("num_heads").get<std::size_t>();
    config.ff_dim = doc.at("ff_dim").get<std::size_t>();
    config.labels = doc.at("labels").get<std::vector<std::string>>();
    ClassifierParams params = make_classifier(config, 0);
    const auto mean = doc.at("input_mean").get<std::vector<double>>();
    const auto stddev = doc.at("input_std").get<std::vector<double>>();
    if (mean.size() != config.channels || stddev.size() != config.channels)
      throw CorruptionError("normalization stats have wrong length");
    for (std::size_t c = 0; c < config.channels; ++c) {
      params.input_mean[static_cast<Eigen::Index>(c)] = mean[c];
      params.input_std[static_cast<Eigen::Index>(c)] = stddev[c];
    }
    const auto count = doc.at("param_count").get<std::size_t>();
    unflatten_classifier(
        blob_decode_flat(doc.at("params_base64").get<std::string>(), count),
        params);
    params.validate();
    return params;
  } catch (const json::exception& ex) {
    throw CorruptionError("malformed model file " + path + ": " + ex.what());
  }
}

}  // namespace tacsim
