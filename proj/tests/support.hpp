#pragma once

// Shared helpers for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "uqstream/data.hpp"
#include "uqstream/nn.hpp"

namespace testing_support {

using namespace uqstream;

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t entries = 0;
};

/// Compares backprop against central differences for every parameter entry.
/// Stochastic modes reseed the noise source for every evaluation, so the
/// sampled objective is the same function of the parameters throughout.
inline GradientCheck check_gradient(const nn::NetworkParameters& params, const nn::NetworkArchitecture& arch,
                                    const Matrix& x, const Matrix& y, nn::Mode mode, std::uint64_t noise_seed = 7,
                                    double kl_weight = 0.0, double step = 1e-5) {
  nn::Rng rng(noise_seed);
  const auto analytic = nn::backprop(params, arch, x, y, mode, &rng, kl_weight).grads;
  auto probe = params;
  auto slots = probe.tensors();
  const auto grads = analytic.tensors();
  GradientCheck out;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    for (std::size_t i = 0; i < slots[k].size(); ++i) {
      const double saved = slots[k][i];
      slots[k][i] = saved + step;
      nn::Rng r1(noise_seed);
      const double up = nn::objective(probe, arch, x, y, mode, &r1, kl_weight);
      slots[k][i] = saved - step;
      nn::Rng r2(noise_seed);
      const double down = nn::objective(probe, arch, x, y, mode, &r2, kl_weight);
      slots[k][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grads[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      out.max_relative_error = std::max(out.max_relative_error, std::abs(a - numeric) / denom);
      ++out.entries;
    }
  }
  return out;
}

/// A random small architecture and matching parameters and batch.
struct RandomProblem {
  nn::NetworkArchitecture arch;
  nn::NetworkParameters params;
  Matrix x, y;
};

inline RandomProblem random_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  RandomProblem p;
  p.arch.input_dim = pick(1, 6);
  p.arch.output_dim = pick(1, 3);
  const auto depth = pick(1, 3);
  for (std::size_t i = 0; i < depth; ++i) p.arch.hidden_layer_sizes.push_back(pick(2, 8));
  p.params = nn::init_network(p.arch, seed + 1000);
  // Non-zero biases so no unit sits exactly at the ReLU kink.
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& l : p.params.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * normal(rng);
  const auto batch = static_cast<Eigen::Index>(pick(1, 5));
  p.x.resize(batch, static_cast<Eigen::Index>(p.arch.input_dim));
  p.y.resize(batch, static_cast<Eigen::Index>(p.arch.output_dim));
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < p.y.size(); ++i) p.y.data()[i] = normal(rng);
  return p;
}

/// Sine toy split into the three sets.
inline data::SplitDataset sine_split(std::size_t n, double x_min, double x_max, double noise, std::uint64_t seed,
                                     bool normalise = false) {
  auto s = data::split(data::synth_sine(n, x_min, x_max, noise, seed));
  return normalise ? data::normalize(s) : s;
}

}  // namespace testing_support
