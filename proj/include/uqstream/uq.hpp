#pragma once

// Epistemic uncertainty estimators: a simple ensemble of independently
// initialised networks, Monte-Carlo dropout, and a flipout output layer.
// Each reports the per-output mean and population standard deviation of its
// draws, plus a scalar score (the mean of the standard deviations).

#include <cstdint>
#include <string>
#include <vector>

#include "uqstream/common.hpp"
#include "uqstream/nn.hpp"
#include "uqstream/parallel.hpp"

namespace uqstream::uq {

enum class EstimatorKind { ensemble, mc_dropout, flipout };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::ensemble;
  std::size_t member_count_or_samples = 10;
  double dropout_rate = 0.2;  // mc_dropout only
};

struct UncertaintyEstimate {
  Vector mean;
  Vector std;
  double score = 0.0;
};

/// Row-wise estimates for a batch of inputs.
struct BatchEstimate {
  Matrix mean;
  Matrix std;
  Vector score;

  UncertaintyEstimate row(Eigen::Index i) const {
    return {mean.row(i).transpose(), std.row(i).transpose(), score(i)};
  }
};

struct Member {
  nn::NetworkParameters params;
  nn::AdamState adam;
};

struct Estimator {
  EstimatorConfig config;
  nn::NetworkArchitecture arch;
  std::vector<Member> members;  // ensemble: one per model; otherwise exactly one
};

/// For mc_dropout the estimator's architecture takes its dropout rate from
/// cfg. A rate of zero is accepted and degenerates to a deterministic net.
inline Estimator build_estimator(nn::NetworkArchitecture arch, const EstimatorConfig& cfg, std::uint64_t seed,
                                 double learning_rate = 1e-3) {
  require(cfg.member_count_or_samples >= 2,
          "estimator: at least two members or samples are needed for a standard deviation");
  switch (cfg.kind) {
    case EstimatorKind::ensemble:
      require(arch.final_layer_kind == nn::FinalLayerKind::deterministic,
              "estimator: ensemble members must have a deterministic output layer");
      break;
    case EstimatorKind::mc_dropout:
      require(arch.final_layer_kind == nn::FinalLayerKind::deterministic,
              "estimator: mc_dropout requires a deterministic output layer");
      require(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0, "estimator: dropout_rate must lie in [0, 1)");
      require(!arch.hidden_layer_sizes.empty(), "estimator: mc_dropout requires at least one hidden layer");
      arch.dropout_rate = cfg.dropout_rate;
      break;
    case EstimatorKind::flipout:
      require(arch.final_layer_kind == nn::FinalLayerKind::flipout,
              "estimator: flipout requires a flipout output layer");
      break;
  }
  arch.validate();
  Estimator est{cfg, arch, {}};
  const std::size_t n = cfg.kind == EstimatorKind::ensemble ? cfg.member_count_or_samples : 1;
  for (std::size_t k = 0; k < n; ++k) {
    auto params = nn::init_network(arch, derive_seed(seed, "init", {k}));
    auto adam = nn::make_adam_state(params, learning_rate);
    est.members.push_back({std::move(params), std::move(adam)});
  }
  return est;
}

/// Fits every member on the same data with its own shuffle stream and early
/// stopping. Results do not depend on `jobs`.
inline std::vector<nn::TrainReport> fit_estimator(Estimator& est, const Eigen::Ref<const Matrix>& train_x,
                                                  const Eigen::Ref<const Matrix>& train_y,
                                                  const Eigen::Ref<const Matrix>& val_x,
                                                  const Eigen::Ref<const Matrix>& val_y, const nn::TrainConfig& cfg,
                                                  std::size_t jobs = 1) {
  std::vector<nn::TrainReport> reports(est.members.size());
  parallel_for(est.members.size(), jobs, [&](std::size_t k) {
    auto member_cfg = cfg;
    member_cfg.rng_seed = derive_seed(cfg.rng_seed, "member", {k});
    try {
      reports[k] = nn::fit(est.members[k].params, est.members[k].adam, est.arch, train_x, train_y, val_x, val_y,
                           member_cfg);
    } catch (const Error& e) {
      throw RuntimeFault("member " + std::to_string(k) + ": " + e.what());
    }
  });
  return reports;
}

inline std::vector<nn::TrainReport> fit_estimator(Estimator& est, const std::vector<Sample>& train_set,
                                                  const std::vector<Sample>& val_set, const nn::TrainConfig& cfg,
                                                  std::size_t jobs = 1) {
  require(!train_set.empty() && !val_set.empty(), "fit_estimator: empty training or validation set");
  const auto tr = stack_samples(train_set);
  const auto va = stack_samples(val_set);
  return fit_estimator(est, tr.x, tr.y, va.x, va.y, cfg, jobs);
}

namespace detail {

/// Mean and population standard deviation across draws. Deviations are taken
/// from the first draw before averaging, so identical draws give exactly zero
/// spread and return the shared value unchanged.
inline BatchEstimate reduce_draws(const std::vector<Matrix>& draws) {
  const auto& first = draws.front();
  const double n = static_cast<double>(draws.size());
  Matrix shift_mean = Matrix::Zero(first.rows(), first.cols());
  for (const auto& d : draws) shift_mean += d - first;
  shift_mean /= n;
  Matrix var = Matrix::Zero(first.rows(), first.cols());
  for (const auto& d : draws) var.array() += (d - first - shift_mean).array().square();
  var /= n;
  BatchEstimate est;
  est.mean = first + shift_mean;
  est.std = var.array().sqrt().matrix();
  est.score = est.std.rowwise().mean();
  return est;
}

}  // namespace detail

/// Ensemble: one deterministic forward pass per member. mc_dropout/flipout:
/// member_count_or_samples stochastic passes drawn from a stream seeded by
/// call_seed, so concurrent calls never share random state.
inline BatchEstimate predict_batch(const Estimator& est, const Eigen::Ref<const Matrix>& x,
                                   std::uint64_t call_seed = 0) {
  require(static_cast<std::size_t>(x.cols()) == est.arch.input_dim, "predict: input dimension mismatch");
  std::vector<Matrix> draws;
  if (est.config.kind == EstimatorKind::ensemble) {
    draws.reserve(est.members.size());
    for (const auto& m : est.members) draws.push_back(nn::forward_batch(m.params, est.arch, x, nn::Mode::infer));
  } else {
    nn::Rng rng(derive_seed(call_seed, "predict"));
    const auto& m = est.members.front();
    draws.reserve(est.config.member_count_or_samples);
    for (std::size_t s = 0; s < est.config.member_count_or_samples; ++s)
      draws.push_back(nn::forward_batch(m.params, est.arch, x, nn::Mode::infer_stochastic, &rng));
  }
  auto out = detail::reduce_draws(draws);
  if (!out.mean.allFinite() || !out.std.allFinite()) throw TrainingFault("predict: non-finite prediction");
  return out;
}

inline UncertaintyEstimate predict_with_uncertainty(const Estimator& est, const Vector& x,
                                                    std::uint64_t call_seed = 0) {
  require(static_cast<std::size_t>(x.size()) == est.arch.input_dim, "predict: input dimension mismatch");
  Matrix row = x.transpose();
  return predict_batch(est, row, call_seed).row(0);
}

}  // namespace uqstream::uq
