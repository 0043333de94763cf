#pragma once

// Dataset ingestion, temporal 60/20/20 splitting, normalisation and the
// synthetic generators (sine toy, planar AUV surrogate).

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "uqstream/common.hpp"

namespace uqstream::data {

/// Column names of inputs and targets, in model order.
struct Schema {
  std::vector<std::string> inputs;
  std::vector<std::string> targets;
};

/// (du, dv, dr) = F(u, v, r, n1, n2, n3)
inline Schema auv_schema() { return {{"u", "v", "r", "n1", "n2", "n3"}, {"du", "dv", "dr"}}; }
inline Schema sine_schema() { return {{"x"}, {"y"}}; }

struct Normalization {
  Vector input_shift, input_scale;
  Vector target_shift, target_scale;

  Vector apply_x(const Vector& x) const { return (x - input_shift).cwiseQuotient(input_scale); }
  Vector apply_y(const Vector& y) const { return (y - target_shift).cwiseQuotient(target_scale); }
  Vector inverse_x(const Vector& x) const { return x.cwiseProduct(input_scale) + input_shift; }
  Vector inverse_y(const Vector& y) const { return y.cwiseProduct(target_scale) + target_shift; }
  Matrix inverse_y(const Matrix& y) const {
    Matrix out = y.array().rowwise() * target_scale.transpose().array();
    out.rowwise() += target_shift.transpose();
    return out;
  }
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::optional<Normalization> normalization;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  SampleMatrices matrices() const { return stack_samples(samples); }
};

struct SplitDataset {
  Dataset train, validation, test;
  std::vector<std::size_t> train_indices, validation_indices, test_indices;
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses CSV text whose header names exactly the schema's columns (any
/// order). Row numbers in errors count data rows from 1.
inline Dataset parse_csv(std::string_view text, const Schema& schema) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!detail::trim(line).empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (lines.empty()) throw DataError("empty file");
  auto header = detail::split_fields(lines.front());
  if (!header.empty() && header.front().starts_with("\xEF\xBB\xBF")) header.front().remove_prefix(3);

  auto locate = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    throw DataError("missing column '" + name + "'");
  };
  std::vector<std::size_t> in_cols, out_cols;
  for (const auto& c : schema.inputs) in_cols.push_back(locate(c));
  for (const auto& c : schema.targets) out_cols.push_back(locate(c));
  if (header.size() != in_cols.size() + out_cols.size()) {
    for (auto h : header) {
      const auto name = std::string(detail::trim(h));
      bool known = false;
      for (const auto& c : schema.inputs) known |= c == name;
      for (const auto& c : schema.targets) known |= c == name;
      if (!known) throw DataError("unexpected column '" + name + "'");
    }
    throw DataError("duplicate columns in header");
  }
  if (lines.size() == 1) throw DataError("empty dataset");

  Dataset ds;
  ds.input_dim = in_cols.size();
  ds.output_dim = out_cols.size();
  ds.samples.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = detail::split_fields(lines[r]);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    auto cell = [&](std::size_t col) {
      auto v = detail::parse_double(fields[col]);
      if (!v)
        throw DataError("row " + std::to_string(r) + ", column '" + std::string(detail::trim(header[col])) +
                        "': not a finite number: '" + std::string(detail::trim(fields[col])) + "'");
      return *v;
    };
    Sample s{Vector(ds.input_dim), Vector(ds.output_dim), r - 1};
    for (std::size_t i = 0; i < in_cols.size(); ++i) s.x(static_cast<Eigen::Index>(i)) = cell(in_cols[i]);
    for (std::size_t i = 0; i < out_cols.size(); ++i) s.y(static_cast<Eigen::Index>(i)) = cell(out_cols[i]);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline Dataset load_csv(const std::string& path, const Schema& schema = auv_schema()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str(), schema);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string to_csv(const Dataset& ds, const Schema& schema) {
  require(schema.inputs.size() == ds.input_dim && schema.targets.size() == ds.output_dim,
          "to_csv: schema does not match dataset dimensions");
  std::string out;
  bool first = true;
  for (const auto* cols : {&schema.inputs, &schema.targets})
    for (const auto& c : *cols) {
      if (!first) out += ',';
      out += c;
      first = false;
    }
  out += '\n';
  for (const auto& s : ds.samples) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      out += format_double(s.x(i));
      out += ',';
    }
    for (Eigen::Index i = 0; i < s.y.size(); ++i) {
      out += format_double(s.y(i));
      out += i + 1 == s.y.size() ? '\n' : ',';
    }
  }
  return out;
}

/// FNV-1a over the raw bytes of every input and target value, in order.
inline std::uint64_t fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (auto b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : ds.samples) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) mix(s.x(i));
    for (Eigen::Index i = 0; i < s.y.size(); ++i) mix(s.y(i));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Splitting

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out{{}, ds.input_dim, ds.output_dim, ds.normalization};
  out.samples.reserve(idx.size());
  for (auto i : idx) out.samples.push_back(ds.samples[i]);
  return out;
}

/// Test set: every 5th index starting at 0. Validation: every 4th of the
/// remaining indices (positions 3, 7, ...). Train: the rest, in order.
/// The seed is accepted for interface stability; the split is deterministic.
inline SplitDataset split(const Dataset& ds, std::uint64_t /*seed*/ = 0) {
  if (ds.size() < 5) throw DataError("split: at least 5 samples are required, got " + std::to_string(ds.size()));
  SplitDataset s;
  std::size_t rest = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i % 5 == 0) {
      s.test_indices.push_back(i);
    } else {
      (rest % 4 == 3 ? s.validation_indices : s.train_indices).push_back(i);
      ++rest;
    }
  }
  s.train = subset(ds, s.train_indices);
  s.validation = subset(ds, s.validation_indices);
  s.test = subset(ds, s.test_indices);
  return s;
}

// ---------------------------------------------------------------------------
// Normalisation

/// Zero-mean, unit-variance per dimension (population variance). Constant
/// dimensions get scale 1 and shift equal to the constant.
inline Normalization fit_normalization(const Dataset& ds) {
  if (ds.empty()) throw DataError("normalize: empty dataset");
  const auto m = ds.matrices();
  auto stats = [](const Matrix& a, Vector& shift, Vector& scale) {
    shift = a.colwise().mean().transpose();
    scale.resize(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double var = (a.col(j).array() - shift(j)).square().mean();
      scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  };
  Normalization n;
  stats(m.x, n.input_shift, n.input_scale);
  stats(m.y, n.target_shift, n.target_scale);
  return n;
}

inline Dataset normalize(const Dataset& ds, const Normalization& n) {
  Dataset out = ds;
  for (auto& s : out.samples) {
    s.x = n.apply_x(s.x);
    s.y = n.apply_y(s.y);
  }
  out.normalization = n;
  return out;
}

inline Dataset normalize(const Dataset& ds) { return normalize(ds, fit_normalization(ds)); }

inline Dataset denormalize(const Dataset& ds) {
  require(ds.normalization.has_value(), "denormalize: dataset is not normalised");
  Dataset out = ds;
  for (auto& s : out.samples) {
    s.x = ds.normalization->inverse_x(s.x);
    s.y = ds.normalization->inverse_y(s.y);
  }
  out.normalization.reset();
  return out;
}

/// Statistics come from the train split only and are applied to all three.
inline SplitDataset normalize(const SplitDataset& s) {
  const auto n = fit_normalization(s.train);
  SplitDataset out = s;
  out.train = normalize(s.train, n);
  out.validation = normalize(s.validation, n);
  out.test = normalize(s.test, n);
  return out;
}

// ---------------------------------------------------------------------------
// Generators

/// (x, sin x + noise) on an evenly spaced increasing grid over [x_min, x_max].
inline Dataset synth_sine(std::size_t n, double x_min, double x_max, double noise_std, std::uint64_t seed) {
  require(n >= 2, "synth_sine: n must be at least 2");
  require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min, "synth_sine: invalid x range");
  require(noise_std >= 0.0, "synth_sine: noise_std must be nonnegative");
  std::mt19937_64 rng(derive_seed(seed, "sine"));
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds{{}, 1, 1, std::nullopt};
  const double step = (x_max - x_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i + 1 == n ? x_max : x_min + static_cast<double>(i) * step;
    double y = std::sin(x);
    if (noise_std > 0.0) y += noise_std * noise(rng);
    ds.samples.push_back({Vector::Constant(1, x), Vector::Constant(1, y), i});
  }
  return ds;
}

/// Coefficients of the planar vehicle surrogate. Accelerations:
///   du = k_surge (n1 + n2) - d_u u - q_u u|u| + c_u v r
///   dv = k_sway n3         - d_v v - q_v v|v| - c_v u r
///   dr = k_yaw (n1 - n2) + k_yaw3 n3 - d_r r - q_r r|r| + c_r u v
/// Thruster i is amplitude_i * sin(2 pi t / period_i + phase_i) with the
/// phases drawn from the seed. Velocities are integrated with explicit Euler.
struct AuvParams {
  double dt = 0.2;
  double k_surge = 0.8, k_sway = 0.6, k_yaw = 0.9, k_yaw3 = 0.2;
  double d_u = 0.5, d_v = 0.7, d_r = 0.6;
  double q_u = 1.2, q_v = 1.5, q_r = 1.0;
  double c_u = 0.6, c_v = 0.4, c_r = 0.1;
  double amplitude[3] = {1.0, 1.0, 1.0};
  double period[3] = {20.0, 30.0, 60.0};
  double initial_state[3] = {0.0, 0.0, 0.0};
};

/// Upper bound on |u| for the default coefficients and unit amplitudes,
/// verified by simulation in the tests.
inline constexpr double kAuvSpeedCap = 2.0;

inline Dataset synth_auv(std::size_t n, std::uint64_t seed, double noise_std, const AuvParams& p = {}) {
  require(n >= 10, "synth_auv: n must be at least 10");
  require(noise_std >= 0.0, "synth_auv: noise_std must be nonnegative");
  require(p.dt > 0.0, "synth_auv: dt must be positive");
  for (double t : p.period) require(t > 0.0, "synth_auv: thruster periods must be positive");
  std::mt19937_64 rng(derive_seed(seed, "auv"));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  double phase[3];
  for (auto& ph : phase) ph = phase_dist(rng);
  std::normal_distribution<double> noise(0.0, 1.0);

  double u = p.initial_state[0], v = p.initial_state[1], r = p.initial_state[2];
  Dataset ds{{}, 6, 3, std::nullopt};
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * p.dt;
    double thrust[3];
    for (int k = 0; k < 3; ++k)
      thrust[k] = p.amplitude[k] * std::sin(2.0 * std::numbers::pi * t / p.period[k] + phase[k]);
    const double du = p.k_surge * (thrust[0] + thrust[1]) - p.d_u * u - p.q_u * u * std::abs(u) + p.c_u * v * r;
    const double dv = p.k_sway * thrust[2] - p.d_v * v - p.q_v * v * std::abs(v) - p.c_v * u * r;
    const double dr = p.k_yaw * (thrust[0] - thrust[1]) + p.k_yaw3 * thrust[2] - p.d_r * r - p.q_r * r * std::abs(r) +
                      p.c_r * u * v;
    Sample s{Vector(6), Vector(3), i};
    s.x << u, v, r, thrust[0], thrust[1], thrust[2];
    s.y << du, dv, dr;
    if (noise_std > 0.0)
      for (Eigen::Index k = 0; k < 3; ++k) s.y(k) += noise_std * noise(rng);
    ds.samples.push_back(std::move(s));
    u += p.dt * du;
    v += p.dt * dv;
    r += p.dt * dr;
  }
  return ds;
}

}  // namespace uqstream::data
