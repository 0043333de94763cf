// Command-line front end: run, sweep, tune, toyframes, synth.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime fault.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "uqstream/config.hpp"
#include "uqstream/data.hpp"
#include "uqstream/io.hpp"
#include "uqstream/learner.hpp"
#include "uqstream/tuning.hpp"

namespace fs = std::filesystem;
using namespace uqstream;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string parameter;
  // synth
  std::string kind = "auv";
  std::size_t n = 1000;
  double noise = 0.0;
  double x_min = 0.0;
  double x_max = 6.283185307179586;
};

struct Prepared {
  config::ExperimentConfig cfg;
  data::SplitDataset data;
  std::uint64_t fingerprint = 0;
};

// Configuration and dataset problems are configuration errors (exit 2).
Prepared prepare(const Options& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  auto loaded = config::load(opt.config_path);
  Prepared p{std::move(loaded.config), {}, 0};
  if (opt.seed) p.cfg.run.run_seed = *opt.seed;
  try {
    const auto raw = config::make_dataset(p.cfg.dataset);
    p.fingerprint = data::fingerprint(raw);
    auto split = data::split(raw);
    p.data = p.cfg.dataset.normalize ? data::normalize(split) : split;
  } catch (const Error& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  if (loaded.expected_fingerprint && *loaded.expected_fingerprint != io::hex64(p.fingerprint))
    throw ConfigError("dataset fingerprint " + io::hex64(p.fingerprint) + " does not match manifest (" +
                      *loaded.expected_fingerprint + ")");
  p.cfg.run.jobs = opt.jobs;
  return p;
}

std::string strategy_name(const learner::RunConfig& run) { return std::string(strategies::to_string(run.strategy.kind)); }

int cmd_run(const Options& opt) {
  auto p = prepare(opt);
  const fs::path out(opt.out);
  auto trace = learner::run_online(p.data.train.samples, p.data.test.samples, p.data.validation.samples, p.cfg.run);
  const auto summary = metrics::summarize(trace);
  io::write_file(out / "trace.csv", io::trace_csv(trace));
  auto s = io::summary_json(summary);
  s["strategy"] = strategy_name(p.cfg.run);
  s["iterations"] = trace.size();
  io::write_file(out / "summary.json", s.dump(2) + "\n");
  io::write_file(out / "curves.svg", io::curves_svg({{strategy_name(p.cfg.run), trace}}));
  io::write_file(out / "manifest.json",
                 io::manifest("run", p.cfg, p.fingerprint, {"trace.csv", "summary.json", "curves.svg"}).dump(2) + "\n");
  std::cout << strategy_name(p.cfg.run) << ": cumulative MSE " << summary.cumulative_mse << ", minimum MSE "
            << summary.minimum_mse << ", final mean R2 " << summary.final_mean_r2 << ", dataset use "
            << summary.dataset_use << "\n";
  return 0;
}

std::string cell_name(double value, std::uint64_t seed) {
  return "value_" + data::format_double(value) + "_seed_" + std::to_string(seed);
}

int cmd_sweep(const Options& opt) {
  const auto param = tuning::parse_sweep_parameter(opt.parameter);
  if (!param) throw ConfigError("unknown sweep parameter '" + opt.parameter + "' (expected p, t or buffer)");
  auto p = prepare(opt);
  auto base = p.cfg.run;
  base.jobs = 1;
  const auto kind = base.strategy.kind;
  if (*param == tuning::SweepParameter::p && kind != strategies::StrategyKind::riro)
    throw ConfigError("a p sweep requires strategy.kind = riro");
  if (*param == tuning::SweepParameter::t && !strategies::uses_threshold(kind))
    throw ConfigError("a t sweep requires a threshold strategy");
  if (p.cfg.sweep.repeats == 0) throw ConfigError("configuration key 'sweep.repeats' must be at least 1");

  const fs::path out(opt.out);
  auto& d = p.data;
  tuning::SweepSpec spec{*param, p.cfg.sweep.values, tuning::make_seeds(base.run_seed, p.cfg.sweep.repeats)};
  nlohmann::json extra = nlohmann::json::object();
  if (spec.values.empty()) {
    switch (*param) {
      case tuning::SweepParameter::p: spec.values = tuning::default_p_grid(); break;
      case tuning::SweepParameter::buffer_size: spec.values = tuning::default_buffer_grid(); break;
      case tuning::SweepParameter::t: {
        // Candidates from the uncertainty recorded by the two baselines that use every point.
        auto baseline = base;
        baseline.strategy = {strategies::StrategyKind::fifo, std::nullopt, std::nullopt};
        const auto fifo = learner::run_online(d.train.samples, d.test.samples, d.validation.samples, baseline);
        baseline.strategy.kind = strategies::StrategyKind::firo;
        const auto firo = learner::run_online(d.train.samples, d.test.samples, d.validation.samples, baseline);
        io::write_file(out / "baselines" / "fifo_trace.csv", io::trace_csv(fifo));
        io::write_file(out / "baselines" / "firo_trace.csv", io::trace_csv(firo));
        spec.values = tuning::threshold_candidates(tuning::incoming_scores(fifo), tuning::incoming_scores(firo));
        extra["threshold_candidates"] = spec.values;
        break;
      }
    }
  }
  try {
    for (double v : spec.values) tuning::substitute(base, *param, v, 0).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("sweep values: ") + e.what());
  }

  const auto rows = tuning::sweep(spec, base, d.train.samples, d.test.samples, d.validation.samples, opt.jobs);
  std::vector<std::string> outputs{"sweep.csv", "sweep.svg"};
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.summary) {
      ++failed;
      std::cerr << "cell " << cell_name(r.value, r.seed) << " failed: " << r.error.value_or("") << "\n";
      continue;
    }
    const auto rel = fs::path("cells") / cell_name(r.value, r.seed) / "trace.csv";
    io::write_file(out / rel, io::trace_csv(r.trace));
    outputs.push_back(rel.string());
  }
  io::write_file(out / "sweep.csv", io::sweep_csv(rows, *param));
  io::write_file(out / "sweep.svg", io::sweep_svg(rows, *param, strategy_name(base)));
  extra["parameter"] = std::string(tuning::to_string(*param));
  extra["values"] = spec.values;
  extra["seeds_list"] = spec.seeds;
  io::write_file(out / "manifest.json", io::manifest("sweep", p.cfg, p.fingerprint, outputs, extra).dump(2) + "\n");
  std::cout << rows.size() << " cells, " << failed << " failed\n";
  return failed == rows.size() ? kExitRuntime : 0;
}

int cmd_tune(const Options& opt) {
  auto p = prepare(opt);
  auto base = p.cfg.run;
  base.jobs = 1;
  const auto objective = tuning::validation_objective(base, p.data.train.samples, p.data.validation.samples);
  std::vector<tuning::ScoredConfig> ranked;
  try {
    ranked = tuning::random_search(tuning::SearchSpace{}, p.cfg.tune.iterations, objective, p.cfg.tune.seed, opt.jobs);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const fs::path out(opt.out);
  io::write_file(out / "tune.csv", io::tune_csv(ranked));
  io::write_file(out / "manifest.json", io::manifest("tune", p.cfg, p.fingerprint, {"tune.csv"}).dump(2) + "\n");
  const auto& best = ranked.front();
  std::cout << "best: " << best.config.hidden_layers << "x" << best.config.units << " lr "
            << best.config.learning_rate << " batch " << best.config.batch_size << " patience "
            << best.config.patience << " -> " << best.score << "\n";
  return std::isfinite(best.score) ? 0 : kExitRuntime;
}

std::string toy_frame(const learner::IterationView& v, const std::vector<Sample>& stream, const Matrix& grid,
                      const uq::BatchEstimate& est, const data::Normalization* norm) {
  auto unx = [&](double x) { return norm ? x * norm->input_scale(0) + norm->input_shift(0) : x; };
  auto uny = [&](double y) { return norm ? y * norm->target_scale(0) + norm->target_shift(0) : y; };
  auto scale_y = norm ? norm->target_scale(0) : 1.0;
  svg::Panel p;
  p.title = "iteration " + std::to_string(v.iteration) + (v.record.accepted ? " (accepted)" : " (skipped)") +
            ", stored " + std::to_string(v.buffer.size());
  p.x_label = "x";
  p.y_label = "y";
  svg::Band band{"#1f77b4", {}, {}, {}};
  svg::Series mean{"mean prediction", "#1f77b4", {}, {}};
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const double x = unx(grid(i, 0));
    const double m = uny(est.mean(i, 0));
    const double s = est.std(i, 0) * scale_y;
    band.x.push_back(x);
    band.lower.push_back(m - 2 * s);
    band.upper.push_back(m + 2 * s);
    mean.x.push_back(x);
    mean.y.push_back(m);
  }
  svg::Series seen{"seen points", "#999999", {}, {}, true, 2.0, 0.6};
  for (std::size_t i = 0; i <= v.iteration && i < stream.size(); ++i) {
    seen.x.push_back(unx(stream[i].x(0)));
    seen.y.push_back(uny(stream[i].y(0)));
  }
  svg::Series stored{"stored points", "#d62728", {}, {}, true, 3.5};
  for (const auto& s : v.buffer.items()) {
    stored.x.push_back(unx(s.x(0)));
    stored.y.push_back(uny(s.y(0)));
  }
  svg::Series incoming{"incoming point", "#2ca02c", {}, {}, true, 5.0};
  incoming.x.push_back(unx(stream[v.iteration].x(0)));
  incoming.y.push_back(uny(stream[v.iteration].y(0)));
  p.bands.push_back(std::move(band));
  p.series = {seen, stored, incoming, mean};
  p.y_min = -2.5;
  p.y_max = 2.5;
  return svg::render({p}, 1, 640, 360);
}

int cmd_toyframes(const Options& opt) {
  auto p = prepare(opt);
  if (p.data.train.input_dim != 1 || p.data.train.output_dim != 1)
    throw ConfigError("toyframes requires a one-dimensional (sine) dataset");
  const auto& stream = p.data.train.samples;
  const data::Normalization* norm = p.data.train.normalization ? &*p.data.train.normalization : nullptr;

  auto raw_x = [&](double x) { return norm ? x * norm->input_scale(0) + norm->input_shift(0) : x; };
  auto model_x = [&](double x) { return norm ? (x - norm->input_shift(0)) / norm->input_scale(0) : x; };
  double lo = raw_x(stream.front().x(0)), hi = lo;
  for (const std::vector<Sample>* set : std::initializer_list<const std::vector<Sample>*>{&stream, &p.data.test.samples})
    for (const auto& s : *set) lo = std::min(lo, raw_x(s.x(0))), hi = std::max(hi, raw_x(s.x(0)));
  const double pad = 0.15 * (hi - lo);
  const double gx_lo = model_x(p.cfg.toy.x_min.value_or(lo - pad));
  const double gx_hi = model_x(p.cfg.toy.x_max.value_or(hi + pad));
  const auto gn = std::max<std::size_t>(2, p.cfg.toy.grid_points);
  Matrix grid(static_cast<Eigen::Index>(gn), 1);
  for (std::size_t i = 0; i < gn; ++i)
    grid(static_cast<Eigen::Index>(i), 0) =
        gx_lo + (gx_hi - gx_lo) * static_cast<double>(i) / static_cast<double>(gn - 1);

  const fs::path out(opt.out);
  std::vector<std::string> outputs{"trace.csv"};
  const auto digits = std::to_string(stream.size()).size();
  auto observer = [&](const learner::IterationView& v) {
    const auto est = uq::predict_batch(v.estimator, grid, derive_seed(p.cfg.run.run_seed, "frame", {v.iteration}));
    std::string num = std::to_string(v.iteration);
    num.insert(0, digits - std::min(digits, num.size()), '0');
    const auto rel = fs::path("frames") / ("iteration-" + num + ".svg");
    io::write_file(out / rel, toy_frame(v, stream, grid, est, norm));
    outputs.push_back(rel.string());
  };
  auto trace = learner::run_online(stream, p.data.test.samples, p.data.validation.samples, p.cfg.run, observer);
  io::write_file(out / "trace.csv", io::trace_csv(trace));
  io::write_file(out / "manifest.json", io::manifest("toyframes", p.cfg, p.fingerprint, outputs).dump(2) + "\n");
  std::cout << trace.size() << " frames written to " << (out / "frames").string() << "\n";
  return 0;
}

int cmd_synth(const Options& opt) {
  if (opt.out.empty()) throw ConfigError("--out is required");
  const std::uint64_t seed = opt.seed.value_or(0);
  data::Dataset ds;
  data::Schema schema;
  try {
    if (opt.kind == "sine") {
      ds = data::synth_sine(opt.n, opt.x_min, opt.x_max, opt.noise, seed);
      schema = data::sine_schema();
    } else if (opt.kind == "auv") {
      ds = data::synth_auv(opt.n, seed, opt.noise);
      schema = data::auv_schema();
    } else {
      throw ConfigError("unknown synth kind '" + opt.kind + "' (expected sine or auv)");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  io::write_file(opt.out, data::to_csv(ds, schema));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-gated online learning under a fixed-capacity sample buffer"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", opt.config_path, "Configuration file or manifest (JSON)")->required();
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", opt.seed, "Override run_seed");
    sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run one online-learning experiment");
  add_common(run, true);
  auto* sweep = app.add_subcommand("sweep", "Sweep p, t or the buffer size");
  add_common(sweep, true);
  sweep->add_option("--parameter", opt.parameter, "p, t or buffer")->required();
  auto* tune = app.add_subcommand("tune", "Random search over the network hyperparameters");
  add_common(tune, true);
  auto* toy = app.add_subcommand("toyframes", "Per-iteration SVG frames of the sine toy task");
  add_common(toy, true);
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  synth->add_option("--kind", opt.kind, "sine or auv");
  synth->add_option("--n", opt.n, "Number of samples");
  synth->add_option("--noise", opt.noise, "Target noise standard deviation");
  synth->add_option("--x-min", opt.x_min, "Sine range start");
  synth->add_option("--x-max", opt.x_max, "Sine range end");
  synth->add_option("--seed", opt.seed, "Generator seed");
  synth->add_option("--out", opt.out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(opt);
    if (*sweep) return cmd_sweep(opt);
    if (*tune) return cmd_tune(opt);
    if (*toy) return cmd_toyframes(opt);
    if (*synth) return cmd_synth(opt);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime fault: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
