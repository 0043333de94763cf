#include <gtest/gtest.h>

#include <random>

#include "uqstream/metrics.hpp"

using namespace uqstream;
using namespace uqstream::metrics;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TraceRecord rec(std::size_t i, double mse, double cum, bool accepted = true) {
  return {i, accepted, std::nullopt, 0.1, mse, 0.5 + 0.001 * double(i), cum, i + 1};
}

}  // namespace

TEST(Mse, HandValues) {
  const Matrix t = random_matrix(4, 3, 1);
  EXPECT_EQ(mse(t, t), 0.0);
  EXPECT_EQ(mse(Matrix::Zero(1, 3), Matrix::Ones(1, 3)), 1.0);
  Matrix p(2, 3), y(2, 3);
  p << 0, 0, 0, 1, 2, 3;
  y << 1, 0, 0, 0, 2, 5;  // per-pair MSE 1/3 and 5/3
  EXPECT_DOUBLE_EQ(mse(p, y), 1.0);
}

TEST(Mse, Errors) {
  EXPECT_THROW(mse(Matrix(0, 3), Matrix(0, 3)), InvalidArgument);
  EXPECT_THROW(mse(Matrix::Zero(2, 3), Matrix::Zero(3, 3)), InvalidArgument);
}

TEST(MeanR2, PerfectMeanAndWrong) {
  const Matrix y = random_matrix(50, 3, 2);
  EXPECT_NEAR(mean_r2(y, y), 1.0, 1e-12);
  const Matrix mean_pred = y.colwise().mean().replicate(50, 1);
  EXPECT_NEAR(mean_r2(mean_pred, y), 0.0, 1e-12);
  const Matrix wrong = (y.colwise().mean().array() + 3.0).matrix().replicate(50, 1);
  EXPECT_LT(mean_r2(wrong, y), 0.0);
}

TEST(MeanR2, ExcludesZeroVarianceComponents) {
  Matrix y(3, 2), p(3, 2);
  y << 1, 5, 2, 5, 3, 5;
  p << 1, 0, 2, 0, 3, 0;
  const auto r = r2_components(p, y);
  EXPECT_EQ(r.excluded, std::vector<std::size_t>{1});
  EXPECT_FALSE(r.per_component[1].has_value());
  EXPECT_EQ(r.mean, 1.0);
  Matrix flat = Matrix::Constant(3, 2, 2.0);
  EXPECT_THROW(mean_r2(p, flat), DataError);
  EXPECT_THROW(mean_r2(Matrix::Zero(1, 2), Matrix::Zero(1, 2)), InvalidArgument);
}

TEST(MeanR2, ReorderingAndAffineInvariance) {
  const Matrix y = random_matrix(30, 3, 3);
  const Matrix p = y + 0.3 * random_matrix(30, 3, 4);
  const double base = mean_r2(p, y);
  EXPECT_LE(base, 1.0);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
  perm.setIdentity();
  std::mt19937_64 rng(5);
  std::shuffle(perm.indices().data(), perm.indices().data() + 30, rng);
  EXPECT_NEAR(mean_r2(perm * p, perm * y), base, 1e-12);
  Eigen::RowVector3d scale(2.0, 0.5, 7.0), shift(1.0, -3.0, 0.25);
  const Matrix ps = (p.array().rowwise() * scale.array()).rowwise() + shift.array();
  const Matrix ys = (y.array().rowwise() * scale.array()).rowwise() + shift.array();
  EXPECT_NEAR(mean_r2(ps, ys), base, 1e-12);
}

TEST(Cumulative, SumAndAdditivity) {
  const std::vector<double> a{0.5, 0.25, 0.25};
  EXPECT_EQ(cumulative_mse(a), 1.0);
  const std::vector<double> z(5, 0.0);
  EXPECT_EQ(cumulative_mse(z), 0.0);
  EXPECT_THROW(cumulative_mse(std::vector<double>{}), InvalidArgument);

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(200);
  for (auto& x : v) x = u(rng);
  for (std::size_t cut : {1u, 17u, 100u, 199u}) {
    const std::span<const double> all(v);
    EXPECT_NEAR(cumulative_mse(all), cumulative_mse(all.first(cut)) + cumulative_mse(all.subspan(cut)), 1e-12);
  }
}

TEST(Summary, Extracts) {
  const Trace t{rec(0, 3, 3), rec(1, 1, 4, false), rec(2, 2, 6)};
  const auto s = summarize(t);
  EXPECT_EQ(s.minimum_mse, 1.0);
  EXPECT_EQ(s.cumulative_mse, 6.0);
  EXPECT_EQ(s.final_mean_r2, t.back().test_mean_r2);
  EXPECT_DOUBLE_EQ(s.dataset_use, 2.0 / 3.0);
  EXPECT_THROW(summarize(Trace{}), InvalidArgument);
}

TEST(Summary, SingleRecord) {
  const Trace t{rec(0, 0.7, 0.7)};
  const auto s = summarize(t);
  EXPECT_EQ(s.minimum_mse, 0.7);
  EXPECT_EQ(s.cumulative_mse, 0.7);
  EXPECT_EQ(s.final_mean_r2, 0.5);
  EXPECT_EQ(s.dataset_use, 1.0);
}

TEST(Summary, MatchesIndependentRecomputation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Trace t;
  double cum = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const double m = u(rng);
    cum += m;
    t.push_back({i, u(rng) < 0.3, std::nullopt, u(rng), m, 1.0 - m, cum, 0});
  }
  double lo = 1e300, total = 0.0;
  int acc = 0;
  for (const auto& r : t) {
    lo = r.test_mse < lo ? r.test_mse : lo;
    total += r.test_mse;
    acc += r.accepted ? 1 : 0;
  }
  const auto s = summarize(t);
  EXPECT_EQ(s.minimum_mse, lo);
  EXPECT_NEAR(s.cumulative_mse, total, 1e-12);
  EXPECT_EQ(s.final_mean_r2, 1.0 - t.back().test_mse);
  EXPECT_EQ(s.dataset_use, acc / 100.0);
}

TEST(DatasetUse, Fractions) {
  Trace t;
  for (std::size_t i = 0; i < 1000; ++i) t.push_back(rec(i, 0, 0, i < 150));
  EXPECT_DOUBLE_EQ(dataset_use(t), 0.15);
}
