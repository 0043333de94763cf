#pragma once

// Dense multilayer perceptron: ReLU hidden layers, linear output, MSE loss,
// Adam, early stopping. Optional inverted dropout after every hidden
// activation and an optional flipout (mean-field Gaussian) output layer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uqstream/common.hpp"

namespace uqstream::nn {

using Rng = std::mt19937_64;

enum class FinalLayerKind { deterministic, flipout };

enum class Mode {
  train,             // dropout active, flipout samples
  infer,             // no dropout, flipout uses posterior means
  infer_stochastic,  // dropout active, flipout samples
};

/// Initial log standard deviation of flipout weights.
inline constexpr double kFlipoutInitLogStd = -5.0;

struct NetworkArchitecture {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<std::size_t> hidden_layer_sizes;
  FinalLayerKind final_layer_kind = FinalLayerKind::deterministic;
  double dropout_rate = 0.0;

  std::size_t layer_count() const { return hidden_layer_sizes.size() + 1; }
  std::size_t layer_input_dim(std::size_t l) const {
    return l == 0 ? input_dim : hidden_layer_sizes[l - 1];
  }
  std::size_t layer_output_dim(std::size_t l) const {
    return l + 1 == layer_count() ? output_dim : hidden_layer_sizes[l];
  }
  bool is_flipout_layer(std::size_t l) const {
    return final_layer_kind == FinalLayerKind::flipout && l + 1 == layer_count();
  }

  void validate() const {
    require(input_dim > 0, "architecture: input_dim must be positive");
    require(output_dim > 0, "architecture: output_dim must be positive");
    for (auto h : hidden_layer_sizes) require(h > 0, "architecture: zero-sized hidden layer");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, "architecture: dropout_rate must lie in [0, 1)");
  }
};

struct Layer {
  Matrix weight;   // input_dim x output_dim; posterior mean for flipout
  Vector bias;
  Matrix log_std;  // flipout layer only, else empty
};

struct NetworkParameters {
  std::vector<Layer> layers;

  /// Flat views over every parameter tensor, in a fixed order.
  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    for (auto& l : layers) {
      out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
      if (l.log_std.size() > 0)
        out.emplace_back(l.log_std.data(), static_cast<std::size_t>(l.log_std.size()));
    }
    return out;
  }
  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers) {
      out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
      out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
      if (l.log_std.size() > 0)
        out.emplace_back(l.log_std.data(), static_cast<std::size_t>(l.log_std.size()));
    }
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (auto t : tensors())
      for (double v : t)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// Same shapes, every entry zero.
  NetworkParameters zeros_like() const {
    NetworkParameters z;
    for (const auto& l : layers)
      z.layers.push_back(Layer{Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size()),
                               Matrix::Zero(l.log_std.rows(), l.log_std.cols())});
    return z;
  }

  friend bool operator==(const NetworkParameters& a, const NetworkParameters& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      const auto& x = a.layers[i];
      const auto& y = b.layers[i];
      if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() ||
          x.bias.size() != y.bias.size() || x.log_std.size() != y.log_std.size())
        return false;
      if (x.weight != y.weight || x.bias != y.bias) return false;
      if (x.log_std.size() > 0 && x.log_std != y.log_std) return false;
    }
    return true;
  }
};

using Gradients = NetworkParameters;

/// He-uniform weights for ReLU layers, LeCun-uniform for the linear output
/// layer, zero biases. Deterministic in (arch, seed).
inline NetworkParameters init_network(const NetworkArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  NetworkParameters p;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(arch.layer_input_dim(l));
    const auto out = static_cast<Eigen::Index>(arch.layer_output_dim(l));
    const bool is_output = l + 1 == arch.layer_count();
    const double limit = std::sqrt((is_output ? 3.0 : 6.0) / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{Matrix(in, out), Vector::Zero(out), Matrix()};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    if (arch.is_flipout_layer(l)) layer.log_std = Matrix::Constant(in, out, kFlipoutInitLogStd);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

inline void check_shapes(const NetworkParameters& params, const NetworkArchitecture& arch) {
  require(params.layers.size() == arch.layer_count(), "parameters do not match architecture layer count");
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const auto& layer = params.layers[l];
    require(static_cast<std::size_t>(layer.weight.rows()) == arch.layer_input_dim(l) &&
                static_cast<std::size_t>(layer.weight.cols()) == arch.layer_output_dim(l) &&
                static_cast<std::size_t>(layer.bias.size()) == arch.layer_output_dim(l),
            "parameters do not match architecture shapes");
    require((layer.log_std.size() > 0) == arch.is_flipout_layer(l),
            "flipout parameters present on the wrong layer");
  }
}

inline bool samples_noise(const NetworkArchitecture& arch, Mode mode) {
  if (mode == Mode::infer) return false;
  return arch.dropout_rate > 0.0 || arch.final_layer_kind == FinalLayerKind::flipout;
}

/// Activations and noise recorded by a batched forward pass; consumed by
/// backprop.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input of each layer
  std::vector<Matrix> pre;          // pre-activation of each hidden layer
  std::vector<Matrix> drop_masks;   // scaled keep masks per hidden layer, empty if unused
  Matrix flip_in_signs, flip_out_signs, flip_eps;
  Matrix output;
};

namespace detail {

inline void fill_signs(Matrix& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (rng() & 1U) ? 1.0 : -1.0;
}

inline ForwardCache forward_cached(const NetworkParameters& params, const NetworkArchitecture& arch,
                                   const Eigen::Ref<const Matrix>& x, Mode mode, Rng* rng) {
  const bool noisy = samples_noise(arch, mode);
  require(!noisy || rng != nullptr, "forward: stochastic mode requires a random source");
  const auto batch = x.rows();
  ForwardCache c;
  c.inputs.reserve(arch.layer_count());
  Matrix a = x;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const auto& layer = params.layers[l];
    c.inputs.push_back(a);
    Matrix z = a * layer.weight;
    z.rowwise() += layer.bias.transpose();
    if (arch.is_flipout_layer(l) && noisy) {
      const auto in = layer.weight.rows();
      const auto out = layer.weight.cols();
      c.flip_eps.resize(in, out);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < c.flip_eps.size(); ++i) c.flip_eps.data()[i] = normal(*rng);
      c.flip_in_signs.resize(batch, in);
      c.flip_out_signs.resize(batch, out);
      fill_signs(c.flip_in_signs, *rng);
      fill_signs(c.flip_out_signs, *rng);
      const Matrix delta = (layer.log_std.array().exp() * c.flip_eps.array()).matrix();
      const Matrix perturb = (a.array() * c.flip_in_signs.array()).matrix() * delta;
      z.array() += perturb.array() * c.flip_out_signs.array();
    }
    if (l + 1 == arch.layer_count()) {
      c.output = std::move(z);
      break;
    }
    c.pre.push_back(z);
    a = z.cwiseMax(0.0);
    if (arch.dropout_rate > 0.0 && noisy) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const double keep_scale = 1.0 / (1.0 - arch.dropout_rate);
      Matrix mask(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = unif(*rng) >= arch.dropout_rate ? keep_scale : 0.0;
      a.array() *= mask.array();
      c.drop_masks.push_back(std::move(mask));
    } else {
      c.drop_masks.emplace_back();
    }
  }
  return c;
}

inline double kl_divergence(const NetworkParameters& params, const NetworkArchitecture& arch) {
  if (arch.final_layer_kind != FinalLayerKind::flipout) return 0.0;
  const auto& last = params.layers.back();
  const auto var = (2.0 * last.log_std.array()).exp();
  return (0.5 * (var + last.weight.array().square() - 1.0) - last.log_std.array()).sum();
}

}  // namespace detail

/// Batched forward pass; one output row per input row.
inline Matrix forward_batch(const NetworkParameters& params, const NetworkArchitecture& arch,
                            const Eigen::Ref<const Matrix>& x, Mode mode, Rng* rng = nullptr) {
  require(static_cast<std::size_t>(x.cols()) == arch.input_dim, "forward: input dimension mismatch");
  if (!x.allFinite()) throw InvalidArgument("forward: non-finite input");
  return detail::forward_cached(params, arch, x, mode, rng).output;
}

inline Vector forward(const NetworkParameters& params, const NetworkArchitecture& arch, const Vector& x,
                      Mode mode, Rng* rng = nullptr) {
  require(static_cast<std::size_t>(x.size()) == arch.input_dim, "forward: input dimension mismatch");
  Matrix row = x.transpose();
  return forward_batch(params, arch, row, mode, rng).row(0).transpose();
}

/// Mean of squared componentwise differences.
inline double mse_loss(const Vector& pred, const Vector& target) {
  require(pred.size() == target.size(), "mse_loss: length mismatch");
  require(pred.size() > 0, "mse_loss: empty vectors");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

struct BackpropResult {
  double loss = 0.0;  // mean MSE over the batch plus the weighted KL term
  Gradients grads;
};

/// Exact gradient of mean-over-batch MSE (plus kl_weight * KL for a flipout
/// output layer) with respect to every parameter. Noise (dropout masks,
/// flipout signs and epsilons) is drawn from rng in a parameter-independent
/// order, so reseeding reproduces the same sampled objective.
inline BackpropResult backprop(const NetworkParameters& params, const NetworkArchitecture& arch,
                               const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, Mode mode,
                               Rng* rng = nullptr, double kl_weight = 0.0) {
  require(x.rows() > 0, "backprop: empty batch");
  require(x.rows() == y.rows(), "backprop: batch size mismatch");
  require(static_cast<std::size_t>(x.cols()) == arch.input_dim &&
              static_cast<std::size_t>(y.cols()) == arch.output_dim,
          "backprop: dimension mismatch");
  auto cache = detail::forward_cached(params, arch, x, mode, rng);
  const auto batch = static_cast<double>(x.rows());
  const auto outs = static_cast<double>(arch.output_dim);
  const bool noisy = samples_noise(arch, mode);

  BackpropResult r;
  Matrix diff = cache.output - y;
  r.loss = diff.squaredNorm() / (batch * outs);
  r.grads = params.zeros_like();

  Matrix g = diff * (2.0 / (batch * outs));
  for (std::size_t li = arch.layer_count(); li-- > 0;) {
    const auto& layer = params.layers[li];
    auto& grad = r.grads.layers[li];
    const Matrix& a = cache.inputs[li];
    grad.weight.noalias() = a.transpose() * g;
    grad.bias = g.colwise().sum().transpose();
    Matrix da;
    if (li > 0) da.noalias() = g * layer.weight.transpose();
    if (arch.is_flipout_layer(li)) {
      const auto sigma = layer.log_std.array().exp();
      if (noisy) {
        const Matrix gr = (g.array() * cache.flip_out_signs.array()).matrix();
        const Matrix signed_in = (a.array() * cache.flip_in_signs.array()).matrix();
        const Matrix d_delta = signed_in.transpose() * gr;
        grad.log_std = (d_delta.array() * cache.flip_eps.array() * sigma).matrix();
        if (li > 0) {
          const Matrix delta = (sigma * cache.flip_eps.array()).matrix();
          da.array() += (gr * delta.transpose()).array() * cache.flip_in_signs.array();
        }
      }
      if (kl_weight != 0.0) {
        grad.weight.array() += kl_weight * layer.weight.array();
        grad.log_std.array() += kl_weight * (sigma.square() - 1.0);
      }
    }
    if (li == 0) break;
    const auto& mask = cache.drop_masks[li - 1];
    if (mask.size() > 0) da.array() *= mask.array();
    g = (cache.pre[li - 1].array() > 0.0).select(da.array(), 0.0).matrix();
  }
  if (kl_weight != 0.0) r.loss += kl_weight * detail::kl_divergence(params, arch);
  if (!std::isfinite(r.loss) || !r.grads.all_finite())
    throw TrainingFault("backprop: non-finite loss or gradient");
  return r;
}

/// Objective evaluated by backprop, without computing gradients.
inline double objective(const NetworkParameters& params, const NetworkArchitecture& arch,
                        const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, Mode mode,
                        Rng* rng = nullptr, double kl_weight = 0.0) {
  const Matrix pred = detail::forward_cached(params, arch, x, mode, rng).output;
  double loss = (pred - y).squaredNorm() / static_cast<double>(y.size());
  if (kl_weight != 0.0) loss += kl_weight * detail::kl_divergence(params, arch);
  return loss;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::uint64_t step = 0;
  NetworkParameters first_moment;
  NetworkParameters second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamState make_adam_state(const NetworkParameters& params, double learning_rate = 1e-3) {
  require(learning_rate > 0.0, "adam: learning rate must be positive");
  AdamState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.learning_rate = learning_rate;
  return s;
}

/// One bias-corrected Adam update. Throws TrainingFault on non-finite
/// gradients, leaving params and state untouched.
inline void adam_step(NetworkParameters& params, const Gradients& grads, AdamState& state) {
  if (!grads.all_finite()) throw TrainingFault("adam_step: non-finite gradient");
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  require(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(),
          "adam_step: gradient shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    require(p[k].size() == g[k].size(), "adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      m[k][i] = state.beta1 * m[k][i] + (1.0 - state.beta1) * g[k][i];
      v[k][i] = state.beta2 * v[k][i] + (1.0 - state.beta2) * g[k][i] * g[k][i];
      const double m_hat = m[k][i] / bc1;
      const double v_hat = v[k][i] / bc2;
      p[k][i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t rng_seed = 0;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  double best_validation_loss = 0.0;
  double final_training_loss = 0.0;
  bool stopped_early = false;
};

/// Tracks validation loss and signals a stop after `patience` consecutive
/// epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when this loss is a new best.
  bool update(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      wait_ = 0;
      return true;
    }
    ++wait_;
    return false;
  }

  bool should_stop() const { return wait_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t wait_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

inline double dataset_mse(const NetworkParameters& params, const NetworkArchitecture& arch,
                          const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  const Matrix pred = forward_batch(params, arch, x, Mode::infer);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

/// Minibatch Adam on MSE with seeded per-epoch shuffling and early stopping
/// on validation MSE. On return params hold the best-validation epoch.
/// The flipout KL term is weighted by 1 / |train|.
inline TrainReport fit(NetworkParameters& params, AdamState& adam, const NetworkArchitecture& arch,
                       const Eigen::Ref<const Matrix>& train_x, const Eigen::Ref<const Matrix>& train_y,
                       const Eigen::Ref<const Matrix>& val_x, const Eigen::Ref<const Matrix>& val_y,
                       const TrainConfig& cfg) {
  require(train_x.rows() > 0, "fit: empty training set");
  require(val_x.rows() > 0, "fit: empty validation set");
  require(train_x.rows() == train_y.rows() && val_x.rows() == val_y.rows(), "fit: row count mismatch");
  require(cfg.batch_size >= 1, "fit: batch_size must be at least 1");
  require(cfg.max_epochs >= 1, "fit: max_epochs must be at least 1");
  check_shapes(params, arch);
  adam.learning_rate = cfg.learning_rate;

  Rng shuffle_rng(derive_seed(cfg.rng_seed, "shuffle"));
  Rng noise_rng(derive_seed(cfg.rng_seed, "noise"));
  const double kl_weight =
      arch.final_layer_kind == FinalLayerKind::flipout ? 1.0 / static_cast<double>(train_x.rows()) : 0.0;

  const auto n = train_x.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix xs(n, train_x.cols());
  Matrix ys(n, train_y.cols());

  EarlyStopping stopper(cfg.patience);
  NetworkParameters best = params;
  TrainReport report;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      xs.row(i) = train_x.row(order[static_cast<std::size_t>(i)]);
      ys.row(i) = train_y.row(order[static_cast<std::size_t>(i)]);
    }
    const auto bs = static_cast<Eigen::Index>(cfg.batch_size);
    for (Eigen::Index start = 0; start < n; start += bs) {
      const auto len = std::min(bs, n - start);
      auto step = backprop(params, arch, xs.middleRows(start, len), ys.middleRows(start, len), Mode::train,
                           &noise_rng, kl_weight);
      adam_step(params, step.grads, adam);
    }
    const double val = dataset_mse(params, arch, val_x, val_y);
    if (!std::isfinite(val)) throw TrainingFault("fit: non-finite validation loss at epoch " + std::to_string(epoch));
    report.epochs_run = epoch;
    if (stopper.update(val)) best = params;
    if (stopper.should_stop()) {
      report.stopped_early = true;
      break;
    }
  }
  params = std::move(best);
  report.best_validation_loss = stopper.best();
  report.final_training_loss = dataset_mse(params, arch, train_x, train_y);
  return report;
}

inline TrainReport fit(NetworkParameters& params, AdamState& adam, const NetworkArchitecture& arch,
                       const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                       const TrainConfig& cfg) {
  require(!train_set.empty(), "fit: empty training set");
  require(!val_set.empty(), "fit: empty validation set");
  const auto tr = stack_samples(train_set);
  const auto va = stack_samples(val_set);
  return fit(params, adam, arch, tr.x, tr.y, va.x, va.y, cfg);
}

}  // namespace uqstream::nn
