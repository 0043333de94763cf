#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "uqstream/data.hpp"

using namespace uqstream;
using namespace uqstream::data;

namespace {

const char* kThreeRows =
    "u,v,r,n1,n2,n3,du,dv,dr\n"
    "0,0,0,1,1,0,0.1,0,0\n"
    "0.1,0,0,1,1,0,0.09,0,0.01\n"
    "0.2,0.01,0,1,1,0.5,0.08,0.02,0.01\n";

std::string error_of(std::string_view text) {
  try {
    parse_csv(text, auv_schema());
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(2.0, 3.0);
  Dataset ds{{}, 2, 2, std::nullopt};
  for (std::size_t i = 0; i < n; ++i) {
    Sample s{Vector(2), Vector(2), i};
    s.x << g(rng), g(rng);
    s.y << g(rng), g(rng);
    ds.samples.push_back(s);
  }
  return ds;
}

}  // namespace

TEST(Csv, WellFormed) {
  const auto ds = parse_csv(kThreeRows, auv_schema());
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.input_dim, 6u);
  EXPECT_EQ(ds.output_dim, 3u);
  EXPECT_EQ(ds.samples[2].arrival_index, 2u);
  EXPECT_EQ(ds.samples[2].x(5), 0.5);
  EXPECT_EQ(ds.samples[1].y(2), 0.01);
}

TEST(Csv, ColumnOrderFollowsHeader) {
  const auto ds = parse_csv("du,dv,dr,u,v,r,n1,n2,n3\n1,2,3,4,5,6,7,8,9\n", auv_schema());
  EXPECT_EQ(ds.samples[0].x(0), 4.0);
  EXPECT_EQ(ds.samples[0].y(0), 1.0);
}

TEST(Csv, Errors) {
  EXPECT_EQ(error_of(""), "empty file");
  EXPECT_EQ(error_of("u,v,r,n1,n2,n3,du,dv,dr\n"), "empty dataset");
  EXPECT_EQ(error_of("u,v,r,n1,n2,n3,du,dv\n1,2,3,4,5,6,7,8\n"), "missing column 'dr'");
  EXPECT_EQ(error_of("u,v,r,n1,n2,n3,du,dv,dr,w\n1,2,3,4,5,6,7,8,9,0\n"), "unexpected column 'w'");
  const auto nan = error_of("u,v,r,n1,n2,n3,du,dv,dr\n0,0,0,0,0,0,0,0,0\n0,NaN,0,0,0,0,0,0,0\n");
  EXPECT_NE(nan.find("row 2"), std::string::npos) << nan;
  EXPECT_NE(nan.find("column 'v'"), std::string::npos) << nan;
  EXPECT_NE(error_of("u,v,r,n1,n2,n3,du,dv,dr\n0,x,0,0,0,0,0,0,0\n").find("column 'v'"), std::string::npos);
  EXPECT_NE(error_of("u,v,r,n1,n2,n3,du,dv,dr\n0,0,0\n").find("row 1"), std::string::npos);
}

TEST(Csv, RoundTripThroughFile) {
  const auto ds = synth_auv(40, 3, 0.01);
  const auto path = std::filesystem::temp_directory_path() / "uqstream_roundtrip.csv";
  {
    std::ofstream out(path);
    out << to_csv(ds, auv_schema());
  }
  const auto back = load_csv(path.string());
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(fingerprint(back), fingerprint(ds));
  std::filesystem::remove(path);
  EXPECT_THROW(load_csv((std::filesystem::temp_directory_path() / "no_such_file.csv").string()), DataError);
}

TEST(Split, SizesWithinOneOfProportions) {
  for (std::size_t n = 5; n <= 500; ++n) {
    const auto s = split(random_dataset(n, 1));
    const double nn = static_cast<double>(n);
    EXPECT_LE(std::abs(double(s.train.size()) - 0.6 * nn), 1.0) << n;
    EXPECT_LE(std::abs(double(s.validation.size()) - 0.2 * nn), 1.0) << n;
    EXPECT_LE(std::abs(double(s.test.size()) - 0.2 * nn), 1.0) << n;
  }
  const auto s = split(random_dataset(100, 1));
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.validation.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(Split, TestStrideAndPartition) {
  const auto s = split(random_dataset(10, 1));
  EXPECT_EQ(s.test_indices, (std::vector<std::size_t>{0, 5}));
  const auto big = split(random_dataset(137, 2));
  std::set<std::size_t> all;
  for (const auto* v : {&big.train_indices, &big.validation_indices, &big.test_indices})
    for (auto i : *v) EXPECT_TRUE(all.insert(i).second) << "index " << i << " appears twice";
  EXPECT_EQ(all.size(), 137u);
  for (std::size_t k = 0; k < big.test_indices.size(); ++k) EXPECT_EQ(big.test_indices[k], 5 * k);
  EXPECT_TRUE(std::is_sorted(big.train_indices.begin(), big.train_indices.end()));
  for (std::size_t k = 0; k < big.train.size(); ++k)
    EXPECT_EQ(big.train.samples[k].arrival_index, big.train_indices[k]);
}

TEST(Split, TooSmall) { EXPECT_THROW(split(random_dataset(4, 1)), DataError); }

TEST(Normalize, RoundTripAndIdentity) {
  const auto ds = random_dataset(50, 3);
  const auto n = normalize(ds);
  const auto back = denormalize(n);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_LT((back.samples[i].x - ds.samples[i].x).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((back.samples[i].y - ds.samples[i].y).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto twice = fit_normalization(n);
  EXPECT_LT((twice.input_shift).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((twice.input_scale.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT((twice.target_scale.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Normalize, ConstantDimension) {
  auto ds = random_dataset(20, 4);
  for (auto& s : ds.samples) s.x(1) = 7.5;
  const auto n = fit_normalization(ds);
  EXPECT_EQ(n.input_scale(1), 1.0);
  EXPECT_EQ(n.input_shift(1), 7.5);
  const auto z = normalize(ds, n);
  EXPECT_EQ(z.samples[3].x(1), 0.0);
}

TEST(Normalize, StatisticsFromTrainOnly) {
  const auto ds = random_dataset(100, 5);
  const auto a = normalize(split(ds));
  auto perturbed = ds;
  for (std::size_t i = 0; i < perturbed.size(); i += 5) perturbed.samples[i].y *= 100.0;  // test rows
  for (std::size_t i = 4; i < perturbed.size(); i += 5) perturbed.samples[i].x.array() += 50.0;  // validation rows
  const auto b = normalize(split(perturbed));
  EXPECT_TRUE(a.train.normalization->input_shift == b.train.normalization->input_shift);
  EXPECT_TRUE(a.train.normalization->target_scale == b.train.normalization->target_scale);
  EXPECT_EQ(fingerprint(a.train), fingerprint(b.train));
  EXPECT_THROW(fit_normalization(Dataset{}), DataError);
}

TEST(Sine, ExactValuesAndOrder) {
  const auto ds = synth_sine(5, 0.0, 2 * std::numbers::pi, 0.0, 1);
  EXPECT_EQ(ds.samples[0].y(0), 0.0);
  EXPECT_EQ(ds.samples[1].x(0), std::numbers::pi / 2);
  EXPECT_EQ(ds.samples[1].y(0), 1.0);
  const auto grid = synth_sine(50, 0.0, 2 * std::numbers::pi, 0.1, 2);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(grid.samples[i - 1].x(0), grid.samples[i].x(0));
  EXPECT_EQ(grid.samples.back().x(0), 2 * std::numbers::pi);
  EXPECT_EQ(fingerprint(grid), fingerprint(synth_sine(50, 0.0, 2 * std::numbers::pi, 0.1, 2)));
  EXPECT_NE(fingerprint(grid), fingerprint(synth_sine(50, 0.0, 2 * std::numbers::pi, 0.1, 3)));
  EXPECT_THROW(synth_sine(50, 1.0, 1.0, 0.0, 0), InvalidArgument);
  EXPECT_THROW(synth_sine(1, 0.0, 1.0, 0.0, 0), InvalidArgument);
}

TEST(Auv, ZeroThrustEquilibrium) {
  AuvParams p;
  for (auto& a : p.amplitude) a = 0.0;
  const auto ds = synth_auv(200, 7, 0.0, p);
  for (const auto& s : ds.samples) {
    EXPECT_TRUE(s.x.isZero(0.0));
    EXPECT_TRUE(s.y.isZero(0.0));
  }
}

TEST(Auv, SpeedsStayBelowCap) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = synth_auv(5000, seed, 0.0);
    double peak = 0.0;
    for (const auto& s : ds.samples) peak = std::max({peak, std::abs(s.x(0)), std::abs(s.x(1)), std::abs(s.x(2))});
    EXPECT_LT(peak, kAuvSpeedCap) << "seed " << seed;
  }
}

TEST(Auv, DeterministicAndSchema) {
  const auto a = synth_auv(300, 4, 0.01);
  EXPECT_EQ(a.input_dim, 6u);
  EXPECT_EQ(a.output_dim, 3u);
  EXPECT_EQ(fingerprint(a), fingerprint(synth_auv(300, 4, 0.01)));
  EXPECT_NE(fingerprint(a), fingerprint(synth_auv(300, 5, 0.01)));
  EXPECT_THROW(synth_auv(5, 4, 0.01), InvalidArgument);
}

TEST(Auv, TargetsFollowDocumentedDynamics) {
  const AuvParams p;
  const auto ds = synth_auv(50, 2, 0.0, p);
  for (const auto& s : ds.samples) {
    const double u = s.x(0), v = s.x(1), r = s.x(2), n1 = s.x(3), n2 = s.x(4), n3 = s.x(5);
    EXPECT_NEAR(s.y(0), p.k_surge * (n1 + n2) - p.d_u * u - p.q_u * u * std::abs(u) + p.c_u * v * r, 1e-12);
    EXPECT_NEAR(s.y(1), p.k_sway * n3 - p.d_v * v - p.q_v * v * std::abs(v) - p.c_v * u * r, 1e-12);
    EXPECT_NEAR(s.y(2),
                p.k_yaw * (n1 - n2) + p.k_yaw3 * n3 - p.d_r * r - p.q_r * r * std::abs(r) + p.c_r * u * v, 1e-12);
  }
  for (std::size_t i = 1; i < ds.size(); ++i)
    EXPECT_NEAR(ds.samples[i].x(0), ds.samples[i - 1].x(0) + p.dt * ds.samples[i - 1].y(0), 1e-12);
}
