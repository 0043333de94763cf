#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "uqstream/common.hpp"

namespace uqstream::metrics {

/// Per-iteration snapshot of an online run.
struct TraceRecord {
  std::size_t iteration = 0;
  bool accepted = false;
  std::optional<std::size_t> evicted_arrival_index;
  double incoming_uncertainty = 0.0;
  double test_mse = 0.0;
  double test_mean_r2 = 0.0;
  double cumulative_mse = 0.0;
  std::size_t buffer_fill = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

struct EvalSummary {
  double minimum_mse = 0.0;
  double final_mean_r2 = 0.0;
  double cumulative_mse = 0.0;
  double dataset_use = 0.0;
};

/// Mean over all samples and components of the squared error.
inline double mse(const Eigen::Ref<const Matrix>& preds, const Eigen::Ref<const Matrix>& targets) {
  require(preds.rows() == targets.rows() && preds.cols() == targets.cols(), "mse: shape mismatch");
  require(preds.size() > 0, "mse: empty input");
  return (preds - targets).squaredNorm() / static_cast<double>(preds.size());
}

struct R2Result {
  double mean = 0.0;
  std::vector<std::optional<double>> per_component;  // nullopt: zero target variance
  std::vector<std::size_t> excluded;
};

/// Per-component coefficient of determination, averaged over the components
/// whose target variance is nonzero. Degenerate components are listed in
/// `excluded`; if every component is degenerate a DataError is thrown.
inline R2Result r2_components(const Eigen::Ref<const Matrix>& preds, const Eigen::Ref<const Matrix>& targets) {
  require(preds.rows() == targets.rows() && preds.cols() == targets.cols(), "mean_r2: shape mismatch");
  require(preds.rows() >= 2, "mean_r2: at least two samples are required");
  R2Result r;
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index j = 0; j < targets.cols(); ++j) {
    const auto y = targets.col(j).array();
    const double ybar = y.mean();
    const double ss_tot = (y - ybar).square().sum();
    if (ss_tot == 0.0) {
      r.per_component.emplace_back(std::nullopt);
      r.excluded.push_back(static_cast<std::size_t>(j));
      continue;
    }
    const double ss_res = (y - preds.col(j).array()).square().sum();
    const double r2 = 1.0 - ss_res / ss_tot;
    r.per_component.emplace_back(r2);
    sum += r2;
    ++used;
  }
  if (used == 0) throw DataError("mean_r2: every target component has zero variance");
  r.mean = sum / static_cast<double>(used);
  return r;
}

inline double mean_r2(const Eigen::Ref<const Matrix>& preds, const Eigen::Ref<const Matrix>& targets) {
  return r2_components(preds, targets).mean;
}

inline double cumulative_mse(std::span<const double> trace_mse) {
  require(!trace_mse.empty(), "cumulative_mse: empty list");
  double s = 0.0;
  for (double v : trace_mse) s += v;
  return s;
}

inline double dataset_use(const Trace& trace) {
  require(!trace.empty(), "dataset_use: empty trace");
  const auto accepted = std::count_if(trace.begin(), trace.end(), [](const TraceRecord& r) { return r.accepted; });
  return static_cast<double>(accepted) / static_cast<double>(trace.size());
}

inline EvalSummary summarize(const Trace& trace) {
  require(!trace.empty(), "summarize: empty trace");
  EvalSummary s;
  s.minimum_mse = std::min_element(trace.begin(), trace.end(), [](const auto& a, const auto& b) {
                    return a.test_mse < b.test_mse;
                  })->test_mse;
  s.final_mean_r2 = trace.back().test_mean_r2;
  s.cumulative_mse = trace.back().cumulative_mse;
  s.dataset_use = dataset_use(trace);
  return s;
}

}  // namespace uqstream::metrics
