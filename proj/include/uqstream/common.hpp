#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uqstream {

using Vector = Eigen::VectorXd;
// Rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One input/target pair of the learning problem, tagged with the position
/// at which it arrived in the stream.
struct Sample {
  Vector x;
  Vector y;
  std::size_t arrival_index = 0;
};

struct SampleMatrices {
  Matrix x;
  Matrix y;
};

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument, shape mismatch or inconsistent configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration file or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during training or inference (non-finite values).
class TrainingFault : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV parse errors, empty datasets).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failure of a running computation (training fault, propagated module
/// error), annotated with where it happened.
class RuntimeFault : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, std::string_view msg) {
  if (!cond) throw InvalidArgument(std::string(msg));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

// ---------------------------------------------------------------------------
// Seed derivation. Every random stream in a run is derived from one run seed
// and a list of labels/indices, so that parallel and serial execution see the
// same numbers.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t s = splitmix64(base ^ hash_label(label));
  for (auto i : indices) s = splitmix64(s ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return s;
}

/// Stacks sample inputs and targets row-wise. All samples must share dims.
inline SampleMatrices stack_samples(const std::vector<Sample>& samples) {
  require(!samples.empty(), "stack_samples: empty sample list");
  const auto in = samples.front().x.size();
  const auto out = samples.front().y.size();
  SampleMatrices m{Matrix(samples.size(), in), Matrix(samples.size(), out)};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].x.size() == in && samples[i].y.size() == out,
            "stack_samples: inconsistent sample dimensions");
    m.x.row(static_cast<Eigen::Index>(i)) = samples[i].x.transpose();
    m.y.row(static_cast<Eigen::Index>(i)) = samples[i].y.transpose();
  }
  return m;
}

}  // namespace uqstream
