#pragma once

// Fixed-capacity sample buffer and the point-selection policies that decide,
// for each incoming sample, whether to store it and which stored sample to
// evict.

#include <algorithm>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uqstream/common.hpp"

namespace uqstream::strategies {

using Rng = std::mt19937_64;

enum class StrategyKind { offline, fifo, firo, riro, greedy, threshold, threshold_greedy };

inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::offline,   StrategyKind::fifo,
                                                  StrategyKind::firo,      StrategyKind::riro,
                                                  StrategyKind::greedy,    StrategyKind::threshold,
                                                  StrategyKind::threshold_greedy};

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::offline: return "offline";
    case StrategyKind::fifo: return "fifo";
    case StrategyKind::firo: return "firo";
    case StrategyKind::riro: return "riro";
    case StrategyKind::greedy: return "greedy";
    case StrategyKind::threshold: return "threshold";
    case StrategyKind::threshold_greedy: return "threshold_greedy";
  }
  return "?";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view s) {
  for (auto k : kAllStrategies)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline bool uses_probability(StrategyKind k) { return k == StrategyKind::riro; }
inline bool uses_threshold(StrategyKind k) {
  return k == StrategyKind::threshold || k == StrategyKind::threshold_greedy;
}
/// Strategies whose decision needs the scores of the stored points.
inline bool uses_stored_scores(StrategyKind k) {
  return k == StrategyKind::greedy || k == StrategyKind::threshold_greedy;
}

struct StrategyConfig {
  StrategyKind kind = StrategyKind::fifo;
  std::optional<double> p;  // riro only
  std::optional<double> t;  // threshold kinds only

  void validate() const {
    if (uses_probability(kind)) {
      require(p.has_value(), "strategy riro requires p");
      require(*p > 0.0 && *p <= 1.0, "strategy: p must lie in (0, 1]");
    } else {
      require(!p.has_value(), "strategy: p is only used by riro");
    }
    if (uses_threshold(kind)) {
      require(t.has_value(), "threshold strategies require t");
      require(*t >= 0.0 && std::isfinite(*t), "strategy: t must be a finite nonnegative value");
    } else {
      require(!t.has_value(), "strategy: t is only used by threshold strategies");
    }
  }
};

class Buffer {
 public:
  explicit Buffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "buffer: capacity must be positive");
    items_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool full() const { return items_.size() >= capacity_; }
  bool empty() const { return items_.empty(); }
  const std::vector<Sample>& items() const { return items_; }

  /// Appends without eviction; the buffer must not be full.
  void push(Sample s) {
    require(!full(), "buffer: push into a full buffer");
    items_.push_back(std::move(s));
  }

  Sample erase(std::size_t pos) {
    require(pos < items_.size(), "buffer: eviction index out of range");
    Sample out = std::move(items_[pos]);
    items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(pos));
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Sample> items_;
};

enum class Action { accept, skip };

struct Decision {
  Action action = Action::skip;
  std::optional<std::size_t> evict_index;  // present iff accept into a full buffer

  friend bool operator==(const Decision&, const Decision&) = default;
};

namespace detail {

inline std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Lowest index wins ties.
inline std::size_t argmin(std::span<const double> v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t oldest(const Buffer& buf) {
  const auto& items = buf.items();
  auto it = std::min_element(items.begin(), items.end(), [](const Sample& a, const Sample& b) {
    return a.arrival_index < b.arrival_index;
  });
  return static_cast<std::size_t>(it - items.begin());
}

inline Rng& need_rng(Rng* rng) {
  require(rng != nullptr, "decide: strategy requires a random source");
  return *rng;
}

inline double need_score(std::optional<double> s) {
  require(s.has_value(), "decide: strategy requires the incoming uncertainty score");
  require(*s >= 0.0 && std::isfinite(*s), "decide: uncertainty score must be finite and nonnegative");
  return *s;
}

inline std::span<const double> need_stored(std::optional<std::span<const double>> s, const Buffer& buf) {
  require(s.has_value(), "decide: strategy requires the stored uncertainty scores");
  require(s->size() == buf.size(), "decide: stored score count does not match buffer size");
  return *s;
}

}  // namespace detail

/// Per-sample store/skip decision. Greedy replaces only on a strictly larger
/// incoming score; threshold kinds skip when score <= t, full or not.
inline Decision decide(const StrategyConfig& cfg, const Buffer& buf, std::optional<double> incoming_score,
                       std::optional<std::span<const double>> stored_scores, Rng* rng) {
  cfg.validate();
  const bool full = buf.full();
  switch (cfg.kind) {
    case StrategyKind::offline:
      throw InvalidArgument("decide: the offline strategy does not make per-sample decisions");
    case StrategyKind::fifo:
      if (!full) return {Action::accept, std::nullopt};
      return {Action::accept, detail::oldest(buf)};
    case StrategyKind::firo:
      if (!full) return {Action::accept, std::nullopt};
      return {Action::accept, detail::uniform_index(buf.size(), detail::need_rng(rng))};
    case StrategyKind::riro: {
      auto& r = detail::need_rng(rng);
      const bool take = std::uniform_real_distribution<double>(0.0, 1.0)(r) < *cfg.p;
      if (!take) return {Action::skip, std::nullopt};
      if (!full) return {Action::accept, std::nullopt};
      return {Action::accept, detail::uniform_index(buf.size(), r)};
    }
    case StrategyKind::greedy: {
      const double s = detail::need_score(incoming_score);
      if (!full) return {Action::accept, std::nullopt};
      const auto stored = detail::need_stored(stored_scores, buf);
      const auto victim = detail::argmin(stored);
      if (s > stored[victim]) return {Action::accept, victim};
      return {Action::skip, std::nullopt};
    }
    case StrategyKind::threshold: {
      const double s = detail::need_score(incoming_score);
      auto& r = detail::need_rng(rng);
      if (s <= *cfg.t) return {Action::skip, std::nullopt};
      if (!full) return {Action::accept, std::nullopt};
      return {Action::accept, detail::uniform_index(buf.size(), r)};
    }
    case StrategyKind::threshold_greedy: {
      const double s = detail::need_score(incoming_score);
      if (s <= *cfg.t) return {Action::skip, std::nullopt};
      if (!full) return {Action::accept, std::nullopt};
      return {Action::accept, detail::argmin(detail::need_stored(stored_scores, buf))};
    }
  }
  throw InvalidArgument("decide: unknown strategy");
}

/// Applies a decision in place. Returns the evicted sample, if any.
inline std::optional<Sample> apply(Buffer& buf, const Decision& d, Sample s) {
  if (d.action == Action::skip) {
    require(!d.evict_index.has_value(), "apply: a skip decision cannot evict");
    return std::nullopt;
  }
  std::optional<Sample> evicted;
  if (buf.full()) {
    require(d.evict_index.has_value(), "apply: accepting into a full buffer requires an eviction");
    evicted = buf.erase(*d.evict_index);
  } else {
    require(!d.evict_index.has_value(), "apply: eviction requested on a non-full buffer");
  }
  buf.push(std::move(s));
  return evicted;
}

}  // namespace uqstream::strategies
