#pragma once

// Hyperparameter random search, percentile-derived threshold candidates and
// parameter sweeps (p, t, buffer size).

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "uqstream/common.hpp"
#include "uqstream/learner.hpp"
#include "uqstream/metrics.hpp"
#include "uqstream/parallel.hpp"

namespace uqstream::tuning {

// ---------------------------------------------------------------------------
// Random search

struct SearchSpace {
  std::vector<std::size_t> hidden_layers{1, 2, 3, 4};
  std::vector<std::size_t> units{4, 8, 16, 32, 64};
  std::vector<double> learning_rate{1e-2, 1e-3, 1e-4, 1e-5};
  std::vector<std::size_t> batch_size{1, 2, 4, 8, 16};
  std::vector<std::size_t> patience{3, 5, 9};

  std::size_t cardinality() const {
    return hidden_layers.size() * units.size() * learning_rate.size() * batch_size.size() * patience.size();
  }
};

struct Hyperparameters {
  std::size_t hidden_layers = 2;
  std::size_t units = 32;
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t patience = 5;

  auto key() const { return std::tuple(hidden_layers, units, learning_rate, batch_size, patience); }
  friend bool operator==(const Hyperparameters& a, const Hyperparameters& b) { return a.key() == b.key(); }
  friend bool operator<(const Hyperparameters& a, const Hyperparameters& b) { return a.key() < b.key(); }

  /// Same unit count in every hidden layer.
  void apply_to(learner::RunConfig& cfg) const {
    cfg.hidden_layers.assign(hidden_layers, units);
    cfg.train_cfg.learning_rate = learning_rate;
    cfg.train_cfg.batch_size = batch_size;
    cfg.train_cfg.patience = patience;
  }
};

struct ScoredConfig {
  Hyperparameters config;
  double score = 0.0;              // lower is better; +inf when the run failed
  std::optional<std::string> error;
};

using Objective = std::function<double(const Hyperparameters&)>;

/// Draws `iterations` distinct configurations (uniform and independent per
/// dimension, duplicates re-drawn), scores each and returns them sorted by
/// ascending score. Draw order, not completion order, breaks score ties.
inline std::vector<ScoredConfig> random_search(const SearchSpace& space, std::size_t iterations,
                                               const Objective& objective, std::uint64_t seed,
                                               std::size_t jobs = 1) {
  require(iterations >= 1, "random_search: iterations must be at least 1");
  require(iterations <= space.cardinality(), "random_search: more iterations than distinct configurations");
  std::mt19937_64 rng(derive_seed(seed, "random-search"));
  auto pick = [&rng](const auto& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  std::vector<Hyperparameters> drawn;
  std::set<Hyperparameters> seen;
  while (drawn.size() < iterations) {
    Hyperparameters h{pick(space.hidden_layers), pick(space.units), pick(space.learning_rate),
                      pick(space.batch_size), pick(space.patience)};
    if (seen.insert(h).second) drawn.push_back(h);
  }
  std::vector<ScoredConfig> out(drawn.size());
  parallel_for(drawn.size(), jobs, [&](std::size_t i) {
    out[i].config = drawn[i];
    try {
      out[i].score = objective(drawn[i]);
    } catch (const std::exception& e) {
      out[i].score = std::numeric_limits<double>::infinity();
      out[i].error = e.what();
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  return out;
}

/// Objective used by the tuning command: final cumulative MSE of a run
/// whose metrics are evaluated on the validation split.
inline Objective validation_objective(learner::RunConfig base, std::vector<Sample> stream, std::vector<Sample> val) {
  return [base = std::move(base), stream = std::move(stream), val = std::move(val)](const Hyperparameters& h) {
    auto cfg = base;
    h.apply_to(cfg);
    const auto trace = learner::run_online(stream, val, val, cfg);
    return trace.back().cumulative_mse;
  };
}

// ---------------------------------------------------------------------------
// Threshold candidates

/// Percentile with linear interpolation between closest ranks:
/// position q/100 * (n - 1) in the sorted data.
inline double percentile(std::vector<double> values, double q) {
  require(!values.empty(), "percentile: empty input");
  require(q >= 0.0 && q <= 100.0, "percentile: q must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// The k evenly spaced percentiles (10, 20, ..., 90 for k = 9) of each
/// baseline's recorded scores, averaged elementwise across the two lists.
inline std::vector<double> threshold_candidates(const std::vector<double>& fifo_scores,
                                                const std::vector<double>& firo_scores, std::size_t k = 9) {
  require(!fifo_scores.empty() && !firo_scores.empty(), "threshold_candidates: empty score list");
  require(k >= 1, "threshold_candidates: k must be at least 1");
  std::vector<double> out;
  out.reserve(k);
  for (std::size_t j = 1; j <= k; ++j) {
    const double q = 100.0 * static_cast<double>(j) / static_cast<double>(k + 1);
    out.push_back(0.5 * (percentile(fifo_scores, q) + percentile(firo_scores, q)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Median of the candidate list (the middle element for odd k).
inline double median_candidate(const std::vector<double>& candidates) {
  require(!candidates.empty(), "median_candidate: empty list");
  return percentile(candidates, 50.0);
}

inline std::vector<double> incoming_scores(const metrics::Trace& trace) {
  std::vector<double> s;
  s.reserve(trace.size());
  for (const auto& r : trace) s.push_back(r.incoming_uncertainty);
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { p, t, buffer_size };

inline std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::p: return "p";
    case SweepParameter::t: return "t";
    case SweepParameter::buffer_size: return "buffer";
  }
  return "?";
}

inline std::optional<SweepParameter> parse_sweep_parameter(std::string_view s) {
  if (s == "p") return SweepParameter::p;
  if (s == "t") return SweepParameter::t;
  if (s == "buffer" || s == "buffer_size") return SweepParameter::buffer_size;
  return std::nullopt;
}

struct SweepSpec {
  SweepParameter parameter = SweepParameter::p;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;  // one run per value and seed
};

inline std::vector<double> default_p_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }
inline std::vector<double> default_buffer_grid() { return {10, 20, 50, 100, 200, 400}; }

/// `repeats` seeds derived from a base seed.
inline std::vector<std::uint64_t> make_seeds(std::uint64_t base, std::size_t repeats) {
  std::vector<std::uint64_t> s;
  for (std::size_t r = 0; r < repeats; ++r) s.push_back(base + r);
  return s;
}

inline learner::RunConfig substitute(learner::RunConfig cfg, SweepParameter param, double value,
                                     std::uint64_t seed) {
  switch (param) {
    case SweepParameter::p: cfg.strategy.p = value; break;
    case SweepParameter::t: cfg.strategy.t = value; break;
    case SweepParameter::buffer_size:
      require(value >= 1.0 && value == std::floor(value), "sweep: buffer sizes must be positive integers");
      cfg.buffer_capacity = static_cast<std::size_t>(value);
      break;
  }
  cfg.run_seed = seed;
  return cfg;
}

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  std::optional<metrics::EvalSummary> summary;  // empty when the cell failed
  std::optional<std::string> error;
  metrics::Trace trace;
};

/// Runs every (value, seed) cell. A failing cell is recorded, not rethrown.
/// Rows come back ordered by value index then seed index.
inline std::vector<SweepRow> sweep(const SweepSpec& spec, const learner::RunConfig& base,
                                   const std::vector<Sample>& stream, const std::vector<Sample>& test_set,
                                   const std::vector<Sample>& val_set, std::size_t jobs = 1) {
  require(!spec.values.empty(), "sweep: no values");
  require(!spec.seeds.empty(), "sweep: no seeds");
  std::vector<SweepRow> rows(spec.values.size() * spec.seeds.size());
  parallel_for(rows.size(), jobs, [&](std::size_t cell) {
    auto& row = rows[cell];
    row.value = spec.values[cell / spec.seeds.size()];
    row.seed = spec.seeds[cell % spec.seeds.size()];
    try {
      const auto cfg = substitute(base, spec.parameter, row.value, row.seed);
      row.trace = learner::run_online(stream, test_set, val_set, cfg);
      row.summary = metrics::summarize(row.trace);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return rows;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman: need two equally sized lists of length >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) ma += ra[i], mb += rb[i];
  ma /= n;
  mb /= n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace uqstream::tuning
