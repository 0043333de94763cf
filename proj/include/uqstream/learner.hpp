#pragma once

// The incremental loop: for every streamed sample score its uncertainty,
// let the strategy decide, store and retrain on accept, and record test
// metrics.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uqstream/common.hpp"
#include "uqstream/metrics.hpp"
#include "uqstream/nn.hpp"
#include "uqstream/strategies.hpp"
#include "uqstream/uq.hpp"

namespace uqstream::learner {

using metrics::Trace;
using metrics::TraceRecord;
using metrics::dataset_use;

struct RunConfig {
  strategies::StrategyConfig strategy;
  uq::EstimatorConfig estimator;
  std::vector<std::size_t> hidden_layers{32, 32};
  nn::TrainConfig train_cfg;
  std::size_t buffer_capacity = 100;
  std::size_t eval_every = 1;
  std::uint64_t run_seed = 0;
  std::size_t jobs = 1;  // threads for member training; never changes results

  void validate() const {
    strategy.validate();
    require(buffer_capacity >= 1, "run: buffer_capacity must be positive");
    require(eval_every >= 1, "run: eval_every must be at least 1");
    require(train_cfg.batch_size >= 1 && train_cfg.max_epochs >= 1, "run: invalid training configuration");
    require(train_cfg.learning_rate > 0.0, "run: learning_rate must be positive");
  }
};

inline nn::NetworkArchitecture make_architecture(const RunConfig& cfg, std::size_t input_dim, std::size_t output_dim) {
  nn::NetworkArchitecture arch;
  arch.input_dim = input_dim;
  arch.output_dim = output_dim;
  arch.hidden_layer_sizes = cfg.hidden_layers;
  if (cfg.estimator.kind == uq::EstimatorKind::flipout) arch.final_layer_kind = nn::FinalLayerKind::flipout;
  return arch;
}

/// Read-only view handed to an observer after every iteration.
struct IterationView {
  std::size_t iteration;
  const uq::Estimator& estimator;
  const strategies::Buffer& buffer;
  const TraceRecord& record;
};

using Observer = std::function<void(const IterationView&)>;

namespace detail {

struct Evaluation {
  double mse;
  double r2;
};

inline Evaluation evaluate(const uq::Estimator& est, const SampleMatrices& test, std::uint64_t seed) {
  const auto pred = uq::predict_batch(est, test.x, seed);
  return {metrics::mse(pred.mean, test.y), metrics::mean_r2(pred.mean, test.y)};
}

}  // namespace detail

/// Runs one strategy over the stream. Returns one record per streamed sample.
/// The offline strategy fits once on the whole stream and repeats its single
/// evaluation for every record.
inline Trace run_online(const std::vector<Sample>& stream, const std::vector<Sample>& test_set,
                        const std::vector<Sample>& val_set, const RunConfig& cfg, const Observer& observer = {}) {
  require(!stream.empty(), "run_online: empty stream");
  require(!test_set.empty(), "run_online: empty test set");
  require(!val_set.empty(), "run_online: empty validation set");
  cfg.validate();

  const auto test = stack_samples(test_set);
  const auto val = stack_samples(val_set);
  const auto arch = make_architecture(cfg, static_cast<std::size_t>(stream.front().x.size()),
                                      static_cast<std::size_t>(stream.front().y.size()));
  auto est = uq::build_estimator(arch, cfg.estimator, derive_seed(cfg.run_seed, "estimator"),
                                 cfg.train_cfg.learning_rate);

  auto fit_cfg = [&](std::size_t iteration) {
    auto c = cfg.train_cfg;
    c.rng_seed = derive_seed(cfg.run_seed, "fit", {iteration});
    return c;
  };

  Trace trace;
  trace.reserve(stream.size());

  if (cfg.strategy.kind == strategies::StrategyKind::offline) {
    try {
      const auto all = stack_samples(stream);
      uq::fit_estimator(est, all.x, all.y, val.x, val.y, fit_cfg(0), cfg.jobs);
      const auto ev = detail::evaluate(est, test, derive_seed(cfg.run_seed, "eval", {0}));
      const auto scores = uq::predict_batch(est, all.x, derive_seed(cfg.run_seed, "predict", {0})).score;
      strategies::Buffer everything(stream.size());
      for (const auto& s : stream) everything.push(s);
      double cumulative = 0.0;
      for (std::size_t i = 0; i < stream.size(); ++i) {
        cumulative += ev.mse;
        trace.push_back({i, true, std::nullopt, scores(static_cast<Eigen::Index>(i)), ev.mse, ev.r2, cumulative,
                         stream.size()});
        if (observer) observer({i, est, everything, trace.back()});
      }
    } catch (const Error& e) {
      throw RuntimeFault(std::string("online-learner (offline fit): ") + e.what());
    }
    return trace;
  }

  strategies::Buffer buf(cfg.buffer_capacity);
  strategies::Rng strategy_rng(derive_seed(cfg.run_seed, "strategy"));
  const bool needs_stored = strategies::uses_stored_scores(cfg.strategy.kind);
  detail::Evaluation current{0.0, 0.0};
  double cumulative = 0.0;

  for (std::size_t i = 0; i < stream.size(); ++i) {
    try {
      const auto& incoming = stream[i];
      const double score =
          uq::predict_with_uncertainty(est, incoming.x, derive_seed(cfg.run_seed, "predict", {i, 0})).score;

      Vector stored;
      std::optional<std::span<const double>> stored_view;
      if (needs_stored && buf.full()) {
        const auto held = stack_samples(buf.items());
        stored = uq::predict_batch(est, held.x, derive_seed(cfg.run_seed, "predict", {i, 1})).score;
        stored_view = std::span<const double>(stored.data(), static_cast<std::size_t>(stored.size()));
      }

      const auto decision = strategies::decide(cfg.strategy, buf, score, stored_view, &strategy_rng);
      const auto evicted = strategies::apply(buf, decision, incoming);
      const bool accepted = decision.action == strategies::Action::accept;
      if (accepted) {
        const auto held = stack_samples(buf.items());
        uq::fit_estimator(est, held.x, held.y, val.x, val.y, fit_cfg(i), cfg.jobs);
      }

      if (i % cfg.eval_every == 0 || i + 1 == stream.size())
        current = detail::evaluate(est, test, derive_seed(cfg.run_seed, "eval", {i}));
      cumulative += current.mse;

      std::optional<std::size_t> evicted_index;
      if (evicted) evicted_index = evicted->arrival_index;
      trace.push_back({i, accepted, evicted_index, score, current.mse, current.r2, cumulative, buf.size()});
      if (observer) observer({i, est, buf, trace.back()});
    } catch (const Error& e) {
      throw RuntimeFault("online-learner iteration " + std::to_string(i) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace uqstream::learner
