// Copyright 2026 The asdkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense autoencoder family with hand-written reverse-mode gradients:
// plain reconstruction AE, LAMP activation extraction, quantile heads and
// random network distillation.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "asd/error.hpp"
#include "asd/random.hpp"

namespace asd {

enum class Activation { leaky_relu, identity };

inline constexpr double kLeakyAlpha = 0.2;

inline std::string to_string(Activation a) {
  return a == Activation::leaky_relu ? "leaky_relu" : "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "identity") return Activation::identity;
  throw DataError("unknown activation '" + s + "'");
}

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::leaky_relu;
  double alpha = kLeakyAlpha;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  Eigen::MatrixXd activate(const Eigen::MatrixXd& pre) const {
    if (activation == Activation::identity) return pre;
    const double a = alpha;
    return pre.unaryExpr([a](double z) { return z > 0.0 ? z : a * z; });
  }

  Eigen::MatrixXd derivative(const Eigen::MatrixXd& pre) const {
    if (activation == Activation::identity) return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    const double a = alpha;
    return pre.unaryExpr([a](double z) { return z > 0.0 ? 1.0 : a; });
  }
};

struct LayerGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Stack of dense layers applied to column-major batches (dim x batch).
struct Mlp {
  std::vector<DenseLayer> layers;

  struct Trace {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activations
    std::vector<Eigen::MatrixXd> outputs; // post-activations
  };

  Eigen::Index in_dim() const { return layers.front().in_dim(); }
  Eigen::Index out_dim() const { return layers.back().out_dim(); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Trace* trace = nullptr) const {
    require(!layers.empty(), "Mlp: no layers");
    require(x.rows() == in_dim(), "Mlp: input has " + std::to_string(x.rows()) +
                                      " rows, expected " + std::to_string(in_dim()));
    if (trace) *trace = Trace{};
    Eigen::MatrixXd h = x;
    for (const auto& l : layers) {
      Eigen::MatrixXd pre = (l.weights * h).colwise() + l.bias;
      Eigen::MatrixXd out = l.activate(pre);
      if (trace) {
        trace->inputs.push_back(std::move(h));
        trace->pre.push_back(std::move(pre));
        trace->outputs.push_back(out);
      }
      h = std::move(out);
    }
    return h;
  }

  /// Accumulates parameter gradients for dL/d(output) into `grads` and
  /// returns dL/d(input).
  Eigen::MatrixXd backward(const Trace& trace, const Eigen::MatrixXd& grad_out,
                           std::vector<LayerGrad>& grads) const {
    if (grads.empty()) grads = zero_grads();
    Eigen::MatrixXd g = grad_out;
    for (std::size_t i = layers.size(); i-- > 0;) {
      const auto& l = layers[i];
      const Eigen::MatrixXd delta = g.cwiseProduct(l.derivative(trace.pre[i]));
      grads[i].weights.noalias() += delta * trace.inputs[i].transpose();
      grads[i].bias += delta.rowwise().sum();
      g = l.weights.transpose() * delta;
    }
    return g;
  }

  std::vector<LayerGrad> zero_grads() const {
    std::vector<LayerGrad> g;
    g.reserve(layers.size());
    for (const auto& l : layers)
      g.push_back({Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()),
                   Eigen::VectorXd::Zero(l.out_dim())});
    return g;
  }

  double weight_sq_norm() const {
    double s = 0.0;
    for (const auto& l : layers) s += l.weights.squaredNorm();
    return s;
  }

  bool operator==(const Mlp& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto &a = layers[i], &b = o.layers[i];
      if (a.activation != b.activation || a.alpha != b.alpha ||
          a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
          a.weights != b.weights || a.bias != b.bias)
        return false;
    }
    return true;
  }
};

/// Glorot-uniform weights, zero biases.
inline Mlp make_mlp(const std::vector<Eigen::Index>& dims,
                    const std::vector<Activation>& acts, Rng& rng) {
  require(dims.size() >= 2 && acts.size() + 1 == dims.size(), "make_mlp: bad topology");
  Mlp m;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l;
    l.activation = acts[i];
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
    l.weights.resize(dims[i + 1], dims[i]);
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        l.weights(r, c) = uniform(rng, -limit, limit);
    l.bias = Eigen::VectorXd::Zero(dims[i + 1]);
    m.layers.push_back(std::move(l));
  }
  return m;
}

inline constexpr Eigen::Index kAeInput = 320;
inline const std::vector<Eigen::Index> kEncoderDims = {320, 64, 32, 16};
inline const std::vector<Eigen::Index> kDecoderDims = {16, 32, 64, 320};

inline Mlp make_encoder(Rng& rng, Eigen::Index input_dim = kAeInput) {
  return make_mlp({input_dim, 64, 32, 16},
                  {Activation::leaky_relu, Activation::leaky_relu, Activation::leaky_relu}, rng);
}

inline Mlp make_decoder(Rng& rng, Eigen::Index output_dim = kAeInput) {
  return make_mlp({16, 32, 64, output_dim},
                  {Activation::leaky_relu, Activation::leaky_relu, Activation::identity}, rng);
}

struct TrainConfig {
  int batch_size = 128;
  int epochs = 50;
  double learning_rate = 0.002;
  double l2 = 1e-5;
  std::uint64_t seed = 0;

  void validate() const {
    require(batch_size > 0 && epochs > 0 && learning_rate > 0.0 && l2 >= 0.0,
            "TrainConfig: batch_size, epochs, learning_rate must be positive, l2 >= 0");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size}, {"epochs", c.epochs}, {"learning_rate", c.learning_rate},
       {"l2", c.l2}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.l2 = j.value("l2", d.l2);
  c.seed = j.value("seed", d.seed);
}

// ---------------------------------------------------------------------------
// Models

struct AutoEncoder {
  Mlp encoder;
  Mlp decoder;

  static AutoEncoder create(std::uint64_t seed, Eigen::Index input_dim = kAeInput) {
    Rng rng(derive_seed(seed, "ae_init"));
    AutoEncoder ae;
    ae.encoder = make_encoder(rng, input_dim);
    ae.decoder = make_decoder(rng, input_dim);
    return ae;
  }

  Eigen::Index input_dim() const { return encoder.in_dim(); }

  std::vector<Mlp*> trainable() { return {&encoder, &decoder}; }
  std::vector<const Mlp*> trainable() const { return {&encoder, &decoder}; }

  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& x) const {
    return decoder.forward(encoder.forward(x));
  }

  /// Mean squared reconstruction error over the batch; fills gradients if given.
  double batch_loss(const Eigen::MatrixXd& x, std::vector<std::vector<LayerGrad>>* grads) const {
    Mlp::Trace te, td;
    const Eigen::MatrixXd code = encoder.forward(x, grads ? &te : nullptr);
    const Eigen::MatrixXd recon = decoder.forward(code, grads ? &td : nullptr);
    const Eigen::MatrixXd resid = recon - x;
    const double scale = 1.0 / static_cast<double>(x.size());
    if (grads) {
      const Eigen::MatrixXd g = 2.0 * scale * resid;
      const Eigen::MatrixXd gcode = decoder.backward(td, g, (*grads)[1]);
      encoder.backward(te, gcode, (*grads)[0]);
    }
    return resid.squaredNorm() * scale;
  }
};

inline constexpr std::array<double, 3> kQuantiles = {0.1, 0.5, 0.9};

inline double pinball_loss(double q, double y, double y_hat) {
  require(q > 0.0 && q < 1.0, "pinball_loss: quantile must lie in (0, 1)");
  const double r = y - y_hat;
  return std::max(q * r, (q - 1.0) * r);
}

/// Shared encoder with one decoder head per quantile in kQuantiles.
struct QuantileAutoEncoder {
  Mlp encoder;
  std::array<Mlp, 3> heads;

  static QuantileAutoEncoder create(std::uint64_t seed, Eigen::Index input_dim = kAeInput) {
    Rng rng(derive_seed(seed, "qae_init"));
    QuantileAutoEncoder m;
    m.encoder = make_encoder(rng, input_dim);
    for (auto& h : m.heads) h = make_decoder(rng, input_dim);
    return m;
  }

  Eigen::Index input_dim() const { return encoder.in_dim(); }

  std::vector<Mlp*> trainable() { return {&encoder, &heads[0], &heads[1], &heads[2]}; }
  std::vector<const Mlp*> trainable() const {
    return {&encoder, &heads[0], &heads[1], &heads[2]};
  }

  std::array<Eigen::MatrixXd, 3> predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd code = encoder.forward(x);
    return {heads[0].forward(code), heads[1].forward(code), heads[2].forward(code)};
  }

  /// Sum over heads of the mean pinball loss.
  double batch_loss(const Eigen::MatrixXd& x, std::vector<std::vector<LayerGrad>>* grads) const {
    Mlp::Trace te;
    const Eigen::MatrixXd code = encoder.forward(x, grads ? &te : nullptr);
    const double scale = 1.0 / static_cast<double>(x.size());
    double total = 0.0;
    Eigen::MatrixXd gcode = Eigen::MatrixXd::Zero(code.rows(), code.cols());
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const double q = kQuantiles[h];
      Mlp::Trace th;
      const Eigen::MatrixXd pred = heads[h].forward(code, grads ? &th : nullptr);
      const Eigen::ArrayXXd r = x.array() - pred.array();
      total += (r * q).max(r * (q - 1.0)).sum() * scale;
      if (grads) {
        const Eigen::MatrixXd g =
            (r > 0.0).select(Eigen::ArrayXXd::Constant(r.rows(), r.cols(), -q * scale),
                             Eigen::ArrayXXd::Constant(r.rows(), r.cols(), (1.0 - q) * scale))
                .matrix();
        gcode += heads[h].backward(th, g, (*grads)[h + 1]);
      }
    }
    if (grads) encoder.backward(te, gcode, (*grads)[0]);
    return total;
  }
};

/// Trainable predictor regressing a frozen, randomly initialized target encoder.
struct RndPair {
  Mlp target;
  Mlp predictor;

  static RndPair create(std::uint64_t seed, Eigen::Index input_dim = kAeInput) {
    Rng target_rng(derive_seed(seed, "rnd_target"));
    Rng predictor_rng(derive_seed(seed, "rnd_predictor"));
    return {make_encoder(target_rng, input_dim), make_encoder(predictor_rng, input_dim)};
  }

  Eigen::Index input_dim() const { return predictor.in_dim(); }

  std::vector<Mlp*> trainable() { return {&predictor}; }
  std::vector<const Mlp*> trainable() const { return {&predictor}; }

  double batch_loss(const Eigen::MatrixXd& x, std::vector<std::vector<LayerGrad>>* grads) const {
    const Eigen::MatrixXd y = target.forward(x);
    Mlp::Trace tp;
    const Eigen::MatrixXd pred = predictor.forward(x, grads ? &tp : nullptr);
    const Eigen::MatrixXd resid = pred - y;
    const double scale = 1.0 / static_cast<double>(resid.size());
    if (grads) predictor.backward(tp, 2.0 * scale * resid, (*grads)[0]);
    return resid.squaredNorm() * scale;
  }
};

template <class M>
concept TrainableModel = requires(M m, const M cm, const Eigen::MatrixXd& x,
                                  std::vector<std::vector<LayerGrad>>* g) {
  { m.trainable() } -> std::same_as<std::vector<Mlp*>>;
  { cm.batch_loss(x, g) } -> std::convertible_to<double>;
  { cm.input_dim() } -> std::convertible_to<Eigen::Index>;
};

// ---------------------------------------------------------------------------
// Training

/// Data loss plus (l2 / 2) * sum of squared weights over trainable layers.
template <TrainableModel M>
double total_loss(const M& model, const Eigen::MatrixXd& x, double l2,
                  std::vector<std::vector<LayerGrad>>* grads, double* data_loss = nullptr) {
  if (grads) {
    grads->clear();
    for (const Mlp* m : model.trainable()) grads->push_back(m->zero_grads());
  }
  double loss = model.batch_loss(x, grads);
  if (data_loss) *data_loss = loss;
  const auto stacks = model.trainable();
  for (std::size_t s = 0; s < stacks.size(); ++s) {
    loss += 0.5 * l2 * stacks[s]->weight_sq_norm();
    if (grads)
      for (std::size_t i = 0; i < stacks[s]->layers.size(); ++i)
        (*grads)[s][i].weights += l2 * stacks[s]->layers[i].weights;
  }
  return loss;
}

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Mlp*> stacks, const std::vector<std::vector<LayerGrad>>& grads) {
    if (m_.empty()) {
      for (const Mlp* s : stacks) {
        m_.push_back(s->zero_grads());
        v_.push_back(s->zero_grads());
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t s = 0; s < stacks.size(); ++s) {
      for (std::size_t i = 0; i < stacks[s]->layers.size(); ++i) {
        auto& layer = stacks[s]->layers[i];
        update(layer.weights, grads[s][i].weights, m_[s][i].weights, v_[s][i].weights, c1, c2);
        update(layer.bias, grads[s][i].bias, m_[s][i].bias, v_[s][i].bias, c1, c2);
      }
    }
  }

 private:
  template <class P>
  void update(P& param, const P& grad, P& m, P& v, double c1, double c2) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<LayerGrad>> m_, v_;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean data loss per epoch
};

/// Mini-batch Adam over the columns of `data` (dim x N). Shuffling, batch order
/// and initialization are all driven by cfg.seed, so runs are reproducible.
template <TrainableModel M>
TrainResult train(M& model, const Eigen::MatrixXd& data, const TrainConfig& cfg) {
  cfg.validate();
  require(data.cols() > 0, "train: empty dataset");
  require(data.rows() == model.input_dim(), "train: data dimension does not match model");
  require(data.allFinite(), "train: data contains non-finite values");

  const Eigen::Index n = data.cols();
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  Rng rng(derive_seed(cfg.seed, "train_shuffle"));
  Adam opt(cfg.learning_rate);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<std::vector<LayerGrad>> grads;
  Eigen::MatrixXd xb;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    double epoch_sum = 0.0;
    int batch_idx = 0;
    for (Eigen::Index start = 0; start < n; start += batch, ++batch_idx) {
      const Eigen::Index len = std::min(batch, n - start);
      xb.resize(data.rows(), len);
      for (Eigen::Index j = 0; j < len; ++j) xb.col(j) = data.col(order[start + j]);
      double data_loss = 0.0;
      total_loss(model, xb, cfg.l2, &grads, &data_loss);
      if (!std::isfinite(data_loss)) throw TrainingDiverged(epoch, batch_idx, "non-finite loss");
      epoch_sum += data_loss * static_cast<double>(len);
      opt.step(model.trainable(), grads);
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Scoring and feature extraction

struct AeForward {
  Eigen::VectorXd reconstruction;
  std::vector<Eigen::VectorXd> activations;  // encoder outputs, outer to inner
};

inline AeForward ae_forward(const AutoEncoder& ae, const Eigen::VectorXd& x) {
  require(x.size() == ae.input_dim(), "ae_forward: input dimension mismatch");
  require(x.allFinite(), "ae_forward: non-finite input");
  Mlp::Trace te;
  const Eigen::MatrixXd code = ae.encoder.forward(x, &te);
  AeForward out;
  out.reconstruction = ae.decoder.forward(code).col(0);
  for (const auto& a : te.outputs) out.activations.push_back(a.col(0));
  return out;
}

/// Per-column mean squared reconstruction error for a batch.
inline Eigen::VectorXd mse_scores(const AutoEncoder& ae, const Eigen::MatrixXd& x) {
  require(x.rows() == ae.input_dim(), "mse_scores: input dimension mismatch");
  const Eigen::MatrixXd r = ae.reconstruct(x) - x;
  return r.colwise().squaredNorm().transpose() / static_cast<double>(x.rows());
}

inline double mse_score(const AutoEncoder& ae, const Eigen::VectorXd& x) {
  require(x.allFinite(), "mse_score: non-finite input");
  return mse_scores(ae, x)(0);
}

enum class LampMode { one_lamp, lamp };

/// Encoder activations as features: bottleneck only (16) or all layers
/// concatenated outer to inner (64 + 32 + 16 = 112). Batched over columns.
inline Eigen::MatrixXd lamp_features(const Mlp& encoder, const Eigen::MatrixXd& x, LampMode mode) {
  Mlp::Trace t;
  encoder.forward(x, &t);
  if (mode == LampMode::one_lamp) return t.outputs.back();
  Eigen::Index rows = 0;
  for (const auto& a : t.outputs) rows += a.rows();
  Eigen::MatrixXd out(rows, x.cols());
  Eigen::Index off = 0;
  for (const auto& a : t.outputs) {
    out.middleRows(off, a.rows()) = a;
    off += a.rows();
  }
  return out;
}

inline Eigen::VectorXd lamp_features(const AutoEncoder& ae, const Eigen::VectorXd& x,
                                     LampMode mode) {
  require(x.size() == ae.input_dim(), "lamp_features: input dimension mismatch");
  return lamp_features(ae.encoder, x, mode).col(0);
}

inline Eigen::VectorXd rnd_scores(const RndPair& pair, const Eigen::MatrixXd& x) {
  require(x.rows() == pair.input_dim(), "rnd_scores: input dimension mismatch");
  const Eigen::MatrixXd r = pair.predictor.forward(x) - pair.target.forward(x);
  return r.colwise().squaredNorm().transpose() / static_cast<double>(r.rows());
}

inline double rnd_score(const RndPair& pair, const Eigen::VectorXd& x) {
  return rnd_scores(pair, x)(0);
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json mlp_to_json(const Mlp& m) {
  auto arr = nlohmann::json::array();
  for (const auto& l : m.layers) {
    auto w = nlohmann::json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      std::vector<double> row(l.weights.cols());
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row[c] = l.weights(r, c);
      w.push_back(row);
    }
    arr.push_back({{"in", l.in_dim()},
                   {"out", l.out_dim()},
                   {"activation", to_string(l.activation)},
                   {"alpha", l.alpha},
                   {"weights", std::move(w)},
                   {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return arr;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  if (!j.is_array() || j.empty()) throw DataError("model: layer list missing");
  for (const auto& lj : j) {
    DenseLayer l;
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    l.alpha = lj.value("alpha", kLeakyAlpha);
    const auto in = lj.at("in").get<Eigen::Index>(), out = lj.at("out").get<Eigen::Index>();
    const auto& w = lj.at("weights");
    if (static_cast<Eigen::Index>(w.size()) != out) throw DataError("model: weight rows != out");
    l.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      const auto row = w[r].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != in) throw DataError("model: weight cols != in");
      for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = row[c];
    }
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(b.size()) != out) throw DataError("model: bias size != out");
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
    if (!l.weights.allFinite() || !l.bias.allFinite()) throw DataError("model: non-finite parameter");
    if (!m.layers.empty() && m.layers.back().out_dim() != in)
      throw DataError("model: layer shapes do not chain");
    m.layers.push_back(std::move(l));
  }
  return m;
}

inline std::vector<Eigen::Index> topology(const std::vector<const Mlp*>& stacks) {
  std::vector<Eigen::Index> t;
  for (const Mlp* s : stacks) {
    if (t.empty()) t.push_back(s->in_dim());
    for (const auto& l : s->layers) t.push_back(l.out_dim());
  }
  return t;
}

inline nlohmann::json to_json(const AutoEncoder& ae, const TrainConfig& cfg) {
  return {{"kind", "autoencoder"},
          {"topology", topology({&ae.encoder, &ae.decoder})},
          {"activation", "leaky_relu"},
          {"alpha", kLeakyAlpha},
          {"stacks", {{"encoder", mlp_to_json(ae.encoder)}, {"decoder", mlp_to_json(ae.decoder)}}},
          {"train_config", cfg},
          {"seed", cfg.seed}};
}

inline nlohmann::json to_json(const QuantileAutoEncoder& m, const TrainConfig& cfg) {
  return {{"kind", "quantile_autoencoder"},
          {"topology", topology({&m.encoder, &m.heads[0]})},
          {"activation", "leaky_relu"},
          {"alpha", kLeakyAlpha},
          {"quantiles", kQuantiles},
          {"stacks",
           {{"encoder", mlp_to_json(m.encoder)},
            {"head_q10", mlp_to_json(m.heads[0])},
            {"head_q50", mlp_to_json(m.heads[1])},
            {"head_q90", mlp_to_json(m.heads[2])}}},
          {"train_config", cfg},
          {"seed", cfg.seed}};
}

inline nlohmann::json to_json(const RndPair& p, const TrainConfig& cfg) {
  return {{"kind", "rnd"},
          {"topology", topology({&p.predictor})},
          {"activation", "leaky_relu"},
          {"alpha", kLeakyAlpha},
          {"stacks", {{"target", mlp_to_json(p.target)}, {"predictor", mlp_to_json(p.predictor)}}},
          {"train_config", cfg},
          {"seed", cfg.seed}};
}

namespace detail {

inline void expect_kind(const nlohmann::json& j, const char* kind) {
  if (j.value("kind", "") != kind)
    throw DataError(std::string("model: expected kind '") + kind + "'");
}

inline void check_chain(const Mlp& a, const Mlp& b) {
  if (a.out_dim() != b.in_dim()) throw DataError("model: stacks do not chain");
}

}  // namespace detail

inline AutoEncoder autoencoder_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "autoencoder");
  AutoEncoder ae{mlp_from_json(j.at("stacks").at("encoder")),
                 mlp_from_json(j.at("stacks").at("decoder"))};
  detail::check_chain(ae.encoder, ae.decoder);
  if (ae.decoder.out_dim() != ae.encoder.in_dim()) throw DataError("model: AE output != input");
  return ae;
}

inline QuantileAutoEncoder quantile_autoencoder_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "quantile_autoencoder");
  const auto& s = j.at("stacks");
  QuantileAutoEncoder m;
  m.encoder = mlp_from_json(s.at("encoder"));
  m.heads = {mlp_from_json(s.at("head_q10")), mlp_from_json(s.at("head_q50")),
             mlp_from_json(s.at("head_q90"))};
  for (const auto& h : m.heads) detail::check_chain(m.encoder, h);
  return m;
}

inline RndPair rnd_from_json(const nlohmann::json& j) {
  detail::expect_kind(j, "rnd");
  RndPair p{mlp_from_json(j.at("stacks").at("target")),
            mlp_from_json(j.at("stacks").at("predictor"))};
  if (p.target.in_dim() != p.predictor.in_dim() || p.target.out_dim() != p.predictor.out_dim())
    throw DataError("model: RND target and predictor shapes differ");
  return p;
}

}  // namespace asd
