#pragma once

// Experiment configuration file (JSON). Every key maps one-to-one onto a
// RunConfig field or a command setting; unknown keys are rejected.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uqstream/common.hpp"
#include "uqstream/data.hpp"
#include "uqstream/learner.hpp"
#include "uqstream/tuning.hpp"

namespace uqstream::config {

using nlohmann::json;

enum class DatasetKind { sine, auv, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::sine;
  std::size_t n = 250;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  double x_min = 0.0;
  double x_max = 6.283185307179586;
  std::string path;            // csv only
  std::string schema = "auv";  // csv only: "auv" or "sine"
  bool normalize = true;
  data::AuvParams auv;         // auv only
};

struct SweepSettings {
  std::vector<double> values;  // empty: the default grid for the parameter
  std::size_t repeats = 3;
};

struct TuneSettings {
  std::size_t iterations = 60;
  std::uint64_t seed = 0;
};

struct ToySettings {
  std::size_t grid_points = 200;
  std::optional<double> x_min, x_max;  // default: the dataset range padded by 15%
};

struct ExperimentConfig {
  DatasetSpec dataset;
  learner::RunConfig run;
  SweepSettings sweep;
  TuneSettings tune;
  ToySettings toy;
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + display() + "' must be an object");
  }

  /// Rejects any key not in `allowed`.
  void only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (auto a : allowed) ok |= a == k;
      if (!ok) throw ConfigError("unknown configuration key '" + qualify(k) + "'");
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  Reader child(const std::string& k) const { return Reader(j_.at(k), qualify(k)); }

  template <typename T>
  void get(const std::string& k, T& out) const {
    if (!j_.contains(k)) return;
    const auto& v = j_.at(k);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0)) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("configuration key '" + qualify(k) + "' has the wrong type");
    }
  }

  template <typename T>
  void get(const std::string& k, std::optional<T>& out) const {
    if (!j_.contains(k)) return;
    if (j_.at(k).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(k, v);
    out = v;
  }

  template <typename T>
  void get_list(const std::string& k, std::vector<T>& out) const {
    if (!j_.contains(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigError("configuration key '" + qualify(k) + "' must be a list");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      json wrap = {{"item", v[i]}};
      T item{};
      Reader(wrap, qualify(k) + "[" + std::to_string(i) + "]").get_item(item);
      out.push_back(item);
    }
  }

  std::string qualify(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }

 private:
  template <typename T>
  void get_item(T& out) const {
    try {
      get("item", out);
    } catch (const ConfigError&) {
      throw ConfigError("configuration key '" + path_ + "' has the wrong type");
    }
  }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
};

inline void fail_value(const std::string& key, const std::string& what) {
  throw ConfigError("configuration key '" + key + "': " + what);
}

inline std::string to_string(uq::EstimatorKind k) {
  switch (k) {
    case uq::EstimatorKind::ensemble: return "ensemble";
    case uq::EstimatorKind::mc_dropout: return "mc_dropout";
    case uq::EstimatorKind::flipout: return "flipout";
  }
  return "?";
}

inline std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::sine: return "sine";
    case DatasetKind::auv: return "auv";
    case DatasetKind::csv: return "csv";
  }
  return "?";
}

inline void read_triple(const Reader& r, const std::string& key, double (&out)[3]) {
  if (!r.has(key)) return;
  std::vector<double> v;
  r.get_list(key, v);
  if (v.size() != 3) fail_value(r.qualify(key), "expected exactly 3 values");
  std::copy(v.begin(), v.end(), out);
}

inline void read_auv(const Reader& r, data::AuvParams& p) {
  r.only({"dt", "k_surge", "k_sway", "k_yaw", "k_yaw3", "d_u", "d_v", "d_r", "q_u", "q_v", "q_r", "c_u", "c_v",
          "c_r", "amplitudes", "periods", "initial_state"});
  r.get("dt", p.dt);
  r.get("k_surge", p.k_surge);
  r.get("k_sway", p.k_sway);
  r.get("k_yaw", p.k_yaw);
  r.get("k_yaw3", p.k_yaw3);
  r.get("d_u", p.d_u);
  r.get("d_v", p.d_v);
  r.get("d_r", p.d_r);
  r.get("q_u", p.q_u);
  r.get("q_v", p.q_v);
  r.get("q_r", p.q_r);
  r.get("c_u", p.c_u);
  r.get("c_v", p.c_v);
  r.get("c_r", p.c_r);
  read_triple(r, "amplitudes", p.amplitude);
  read_triple(r, "periods", p.period);
  read_triple(r, "initial_state", p.initial_state);
  if (!(p.dt > 0.0)) fail_value(r.qualify("dt"), "must be positive");
  for (double t : p.period)
    if (!(t > 0.0)) fail_value(r.qualify("periods"), "must be positive");
}

inline json auv_json(const data::AuvParams& p) {
  auto triple = [](const double (&v)[3]) { return json::array({v[0], v[1], v[2]}); };
  return {{"dt", p.dt},       {"k_surge", p.k_surge}, {"k_sway", p.k_sway}, {"k_yaw", p.k_yaw},
          {"k_yaw3", p.k_yaw3}, {"d_u", p.d_u},         {"d_v", p.d_v},       {"d_r", p.d_r},
          {"q_u", p.q_u},     {"q_v", p.q_v},         {"q_r", p.q_r},       {"c_u", p.c_u},
          {"c_v", p.c_v},     {"c_r", p.c_r},         {"amplitudes", triple(p.amplitude)},
          {"periods", triple(p.period)}, {"initial_state", triple(p.initial_state)}};
}

}  // namespace detail

/// Parses a configuration object. `base_dir` resolves relative CSV paths.
inline ExperimentConfig from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  using detail::Reader;
  ExperimentConfig c;
  Reader root(j, "");
  root.only({"dataset", "strategy", "estimator", "network", "train", "buffer_capacity", "eval_every", "run_seed",
             "sweep", "tune", "toy"});

  if (root.has("dataset")) {
    auto d = root.child("dataset");
    d.only({"kind", "n", "noise_std", "seed", "x_min", "x_max", "path", "schema", "normalize", "auv"});
    std::string kind = detail::to_string(c.dataset.kind);
    d.get("kind", kind);
    if (kind == "sine") c.dataset.kind = DatasetKind::sine;
    else if (kind == "auv") c.dataset.kind = DatasetKind::auv;
    else if (kind == "csv") c.dataset.kind = DatasetKind::csv;
    else detail::fail_value("dataset.kind", "expected sine, auv or csv, got '" + kind + "'");
    d.get("n", c.dataset.n);
    d.get("noise_std", c.dataset.noise_std);
    d.get("seed", c.dataset.seed);
    d.get("x_min", c.dataset.x_min);
    d.get("x_max", c.dataset.x_max);
    d.get("path", c.dataset.path);
    d.get("schema", c.dataset.schema);
    d.get("normalize", c.dataset.normalize);
    if (c.dataset.schema != "auv" && c.dataset.schema != "sine")
      detail::fail_value("dataset.schema", "expected auv or sine");
    if (c.dataset.kind == DatasetKind::csv) {
      if (c.dataset.path.empty()) detail::fail_value("dataset.path", "required for csv datasets");
      std::filesystem::path p(c.dataset.path);
      if (p.is_relative() && !base_dir.empty()) c.dataset.path = std::filesystem::absolute(base_dir / p).string();
    }
    if (c.dataset.noise_std < 0.0) detail::fail_value("dataset.noise_std", "must be nonnegative");
    if (d.has("auv")) detail::read_auv(d.child("auv"), c.dataset.auv);
  }

  auto& run = c.run;
  if (root.has("strategy")) {
    auto s = root.child("strategy");
    s.only({"kind", "p", "t"});
    std::string kind = "fifo";
    s.get("kind", kind);
    auto k = strategies::parse_strategy(kind);
    if (!k) detail::fail_value("strategy.kind", "unknown strategy '" + kind + "'");
    run.strategy.kind = *k;
    s.get("p", run.strategy.p);
    s.get("t", run.strategy.t);
  }
  if (root.has("estimator")) {
    auto e = root.child("estimator");
    e.only({"kind", "members", "dropout_rate"});
    std::string kind = "ensemble";
    e.get("kind", kind);
    if (kind == "ensemble") run.estimator.kind = uq::EstimatorKind::ensemble;
    else if (kind == "mc_dropout") run.estimator.kind = uq::EstimatorKind::mc_dropout;
    else if (kind == "flipout") run.estimator.kind = uq::EstimatorKind::flipout;
    else detail::fail_value("estimator.kind", "expected ensemble, mc_dropout or flipout, got '" + kind + "'");
    e.get("members", run.estimator.member_count_or_samples);
    e.get("dropout_rate", run.estimator.dropout_rate);
    if (run.estimator.member_count_or_samples < 2) detail::fail_value("estimator.members", "must be at least 2");
  }
  if (root.has("network")) {
    auto n = root.child("network");
    n.only({"hidden_layers"});
    n.get_list("hidden_layers", run.hidden_layers);
    for (auto h : run.hidden_layers)
      if (h == 0) detail::fail_value("network.hidden_layers", "layer sizes must be positive");
  }
  if (root.has("train")) {
    auto t = root.child("train");
    t.only({"max_epochs", "patience", "batch_size", "learning_rate"});
    t.get("max_epochs", run.train_cfg.max_epochs);
    t.get("patience", run.train_cfg.patience);
    t.get("batch_size", run.train_cfg.batch_size);
    t.get("learning_rate", run.train_cfg.learning_rate);
  }
  root.get("buffer_capacity", run.buffer_capacity);
  root.get("eval_every", run.eval_every);
  root.get("run_seed", run.run_seed);

  if (root.has("sweep")) {
    auto s = root.child("sweep");
    s.only({"values", "repeats"});
    s.get_list("values", c.sweep.values);
    s.get("repeats", c.sweep.repeats);
  }
  if (root.has("tune")) {
    auto t = root.child("tune");
    t.only({"iterations", "seed"});
    t.get("iterations", c.tune.iterations);
    t.get("seed", c.tune.seed);
  }
  if (root.has("toy")) {
    auto t = root.child("toy");
    t.only({"grid_points", "x_min", "x_max"});
    t.get("grid_points", c.toy.grid_points);
    t.get("x_min", c.toy.x_min);
    t.get("x_max", c.toy.x_max);
  }

  try {
    run.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

/// Full snapshot with every default filled in; from_json(to_json(c)) == c.
inline json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"kind", detail::to_string(c.dataset.kind)}, {"n", c.dataset.n},
                  {"noise_std", c.dataset.noise_std},             {"seed", c.dataset.seed},
                  {"x_min", c.dataset.x_min},                     {"x_max", c.dataset.x_max},
                  {"path", c.dataset.path},                       {"schema", c.dataset.schema},
                  {"normalize", c.dataset.normalize}};
  if (c.dataset.kind == DatasetKind::auv) j["dataset"]["auv"] = detail::auv_json(c.dataset.auv);
  json s = {{"kind", std::string(strategies::to_string(c.run.strategy.kind))}};
  if (c.run.strategy.p) s["p"] = *c.run.strategy.p;
  if (c.run.strategy.t) s["t"] = *c.run.strategy.t;
  j["strategy"] = s;
  j["estimator"] = {{"kind", detail::to_string(c.run.estimator.kind)},
                    {"members", c.run.estimator.member_count_or_samples},
                    {"dropout_rate", c.run.estimator.dropout_rate}};
  j["network"] = {{"hidden_layers", c.run.hidden_layers}};
  j["train"] = {{"max_epochs", c.run.train_cfg.max_epochs},
                {"patience", c.run.train_cfg.patience},
                {"batch_size", c.run.train_cfg.batch_size},
                {"learning_rate", c.run.train_cfg.learning_rate}};
  j["buffer_capacity"] = c.run.buffer_capacity;
  j["eval_every"] = c.run.eval_every;
  j["run_seed"] = c.run.run_seed;
  j["sweep"] = {{"values", c.sweep.values}, {"repeats", c.sweep.repeats}};
  j["tune"] = {{"iterations", c.tune.iterations}, {"seed", c.tune.seed}};
  json toy = {{"grid_points", c.toy.grid_points}};
  if (c.toy.x_min) toy["x_min"] = *c.toy.x_min;
  if (c.toy.x_max) toy["x_max"] = *c.toy.x_max;
  j["toy"] = toy;
  return j;
}

/// A manifest written by the CLI can be passed back as a configuration.
inline bool is_manifest(const json& j) { return j.is_object() && j.contains("manifest_version"); }

struct LoadedConfig {
  ExperimentConfig config;
  std::optional<std::string> expected_fingerprint;  // set when loaded from a manifest
};

inline LoadedConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  LoadedConfig out;
  if (is_manifest(j)) {
    if (!j.contains("config")) throw ConfigError("manifest has no 'config' entry");
    out.config = from_json(j.at("config"), path.parent_path());
    if (j.contains("dataset_fingerprint") && j.at("dataset_fingerprint").is_string())
      out.expected_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  } else {
    out.config = from_json(j, path.parent_path());
  }
  return out;
}

/// Builds the dataset described by `d` (not yet split or normalised).
inline data::Dataset make_dataset(const DatasetSpec& d) {
  switch (d.kind) {
    case DatasetKind::sine: return data::synth_sine(d.n, d.x_min, d.x_max, d.noise_std, d.seed);
    case DatasetKind::auv: return data::synth_auv(d.n, d.seed, d.noise_std, d.auv);
    case DatasetKind::csv:
      return data::load_csv(d.path, d.schema == "sine" ? data::sine_schema() : data::auv_schema());
  }
  throw ConfigError("unknown dataset kind");
}

inline data::SplitDataset prepare(const DatasetSpec& d) {
  auto split = data::split(make_dataset(d));
  return d.normalize ? data::normalize(split) : split;
}

}  // namespace uqstream::config
