#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <set>

#include "support.hpp"
#include "uqstream/tuning.hpp"

using namespace uqstream;
using namespace uqstream::tuning;

namespace {

// Hyndman-Fan type 7, written independently of the library.
double reference_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q / 100.0 + 1.0;
  const double fl = std::floor(h);
  const auto below = static_cast<std::size_t>(fl) - 1;
  if (below + 1 >= v.size()) return v.back();
  return v[below] + (h - fl) * (v[below + 1] - v[below]);
}

}  // namespace

TEST(Percentile, HandValues) {
  EXPECT_EQ(percentile({1, 2, 3, 4, 5}, 50), 3.0);
  EXPECT_EQ(percentile({5, 1, 4, 2, 3}, 0), 1.0);
  EXPECT_EQ(percentile({5, 1, 4, 2, 3}, 100), 5.0);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 25), 2.5);
  EXPECT_EQ(percentile({7}, 90), 7.0);
  EXPECT_THROW(percentile({}, 50), InvalidArgument);
}

TEST(Candidates, UniformGrid) {
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(i / 1000.0);
  const auto c = threshold_candidates(grid, grid);
  ASSERT_EQ(c.size(), 9u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(c[k], 0.1 * double(k + 1), 1e-12);
}

TEST(Candidates, ConstantLists) {
  const auto c = threshold_candidates(std::vector<double>(10, 0.2), std::vector<double>(7, 0.6));
  for (double v : c) EXPECT_DOUBLE_EQ(v, 0.4);
  EXPECT_DOUBLE_EQ(median_candidate(c), 0.4);
}

TEST(Candidates, SymmetricSortedAndMatchesReference) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> d(-2.0, 0.7);
  std::vector<double> a(301), b(177);
  for (auto& x : a) x = d(rng);
  for (auto& x : b) x = d(rng);
  const auto c = threshold_candidates(a, b);
  EXPECT_EQ(c, threshold_candidates(b, a));
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));
  for (std::size_t k = 0; k < 9; ++k) {
    const double q = 10.0 * double(k + 1);
    EXPECT_NEAR(c[k], 0.5 * (reference_percentile(a, q) + reference_percentile(b, q)), 1e-9);
  }
  EXPECT_THROW(threshold_candidates({}, b), InvalidArgument);
}

TEST(Candidates, CustomCount) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i);
  const auto c = threshold_candidates(grid, grid, 3);
  EXPECT_EQ(c, (std::vector<double>{25, 50, 75}));
}

TEST(RandomSearch, DistinctDeterministicSorted) {
  const SearchSpace space;
  auto objective = [](const Hyperparameters& h) {
    return double(h.hidden_layers) + double(h.units) / 100.0 + h.learning_rate + double(h.batch_size) / 1000.0 +
           double(h.patience) / 1e5;
  };
  const auto a = random_search(space, 60, objective, 9);
  const auto b = random_search(space, 60, objective, 9, 3);
  ASSERT_EQ(a.size(), 60u);
  std::set<Hyperparameters> seen;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(seen.insert(a[i].config).second);
    EXPECT_TRUE(a[i].config == b[i].config);
    EXPECT_EQ(a[i].score, b[i].score);
    if (i > 0) {
      EXPECT_LE(a[i - 1].score, a[i].score);
    }
    EXPECT_NE(std::find(space.units.begin(), space.units.end(), a[i].config.units), space.units.end());
  }
  EXPECT_EQ(random_search(space, 1, objective, 9).size(), 1u);
  EXPECT_THROW(random_search(space, 0, objective, 9), InvalidArgument);
}

TEST(RandomSearch, FailuresRankedLast) {
  const SearchSpace space;
  auto objective = [](const Hyperparameters& h) {
    if (h.batch_size == 1) throw TrainingFault("diverged");
    return 1.0;
  };
  const auto r = random_search(space, 40, objective, 2);
  bool failed_seen = false;
  for (const auto& c : r) {
    if (c.error) failed_seen = true;
    else EXPECT_FALSE(failed_seen) << "a successful config ranked after a failure";
  }
  EXPECT_TRUE(failed_seen);
}

TEST(RandomSearch, ValidationObjectiveRuns) {
  const auto sp = testing_support::sine_split(60, 0.0, 3.0, 0.05, 1, true);
  learner::RunConfig base;
  base.strategy.kind = strategies::StrategyKind::fifo;
  base.estimator.member_count_or_samples = 2;
  base.train_cfg.max_epochs = 3;
  base.buffer_capacity = 5;
  const auto obj = validation_objective(base, sp.train.samples, sp.validation.samples);
  SearchSpace tiny;
  tiny.hidden_layers = {1};
  tiny.units = {4, 8};
  tiny.learning_rate = {1e-2};
  tiny.batch_size = {4};
  tiny.patience = {3};
  const auto r = random_search(tiny, 2, obj, 1);
  ASSERT_EQ(r.size(), 2u);
  for (const auto& c : r) EXPECT_TRUE(std::isfinite(c.score));
}

TEST(Sweep, CardinalityAndFaultIsolation) {
  const auto sp = testing_support::sine_split(40, 0.0, 3.0, 0.05, 1, true);
  learner::RunConfig base;
  base.strategy = {strategies::StrategyKind::riro, 0.5, std::nullopt};
  base.estimator.member_count_or_samples = 2;
  base.hidden_layers = {4};
  base.train_cfg.max_epochs = 2;
  base.buffer_capacity = 4;
  SweepSpec spec{SweepParameter::p, {0.1, 0.5, 1.5}, make_seeds(3, 2)};
  const auto rows = sweep(spec, base, sp.train.samples, sp.test.samples, sp.validation.samples);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].value, 0.1);
  EXPECT_EQ(rows[1].seed, 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(rows[i].summary.has_value());
  for (std::size_t i = 4; i < 6; ++i) {
    EXPECT_FALSE(rows[i].summary.has_value());
    EXPECT_TRUE(rows[i].error.has_value());
  }
  EXPECT_THROW(sweep({SweepParameter::p, {0.1}, {}}, base, sp.train.samples, sp.test.samples, sp.validation.samples),
               InvalidArgument);
}

TEST(Sweep, ParameterNames) {
  EXPECT_EQ(parse_sweep_parameter("p"), SweepParameter::p);
  EXPECT_EQ(parse_sweep_parameter("t"), SweepParameter::t);
  EXPECT_EQ(parse_sweep_parameter("buffer"), SweepParameter::buffer_size);
  EXPECT_FALSE(parse_sweep_parameter("q").has_value());
  EXPECT_EQ(default_p_grid().size(), 9u);
}

TEST(Spearman, Values) {
  EXPECT_DOUBLE_EQ(spearman({10, 50, 200}, {3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(spearman({10, 50, 200}, {1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({10, 50, 200}, {2, 3, 1}), -0.5);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {1, 1, 2, 2}), spearman({1, 2, 3, 4}, {0, 0, 5, 5}));
}
