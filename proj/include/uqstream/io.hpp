#pragma once

// Output writers: trace CSV, summary and manifest JSON, and the SVG figures.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uqstream/config.hpp"
#include "uqstream/data.hpp"
#include "uqstream/metrics.hpp"
#include "uqstream/svg.hpp"
#include "uqstream/tuning.hpp"

namespace uqstream::io {

using nlohmann::json;

inline constexpr const char* kCodeVersion = "uqstream 1.0.0";
inline constexpr const char* kTraceHeader =
    "iteration,accepted,evicted_arrival_index,incoming_uncertainty,test_mse,test_mean_r2,cumulative_mse,buffer_fill";

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string trace_csv(const metrics::Trace& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace) {
    out += std::to_string(r.iteration);
    out += r.accepted ? ",1," : ",0,";
    if (r.evicted_arrival_index) out += std::to_string(*r.evicted_arrival_index);
    out += ',' + data::format_double(r.incoming_uncertainty);
    out += ',' + data::format_double(r.test_mse);
    out += ',' + data::format_double(r.test_mean_r2);
    out += ',' + data::format_double(r.cumulative_mse);
    out += ',' + std::to_string(r.buffer_fill);
    out += '\n';
  }
  return out;
}

inline json summary_json(const metrics::EvalSummary& s) {
  return {{"minimum_mse", s.minimum_mse},
          {"final_mean_r2", s.final_mean_r2},
          {"cumulative_mse", s.cumulative_mse},
          {"dataset_use", s.dataset_use}};
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Everything needed to rerun the command bit-identically.
inline json manifest(const std::string& command, const config::ExperimentConfig& cfg, std::uint64_t fingerprint,
                     const std::vector<std::string>& outputs, const json& extra = json::object()) {
  json m;
  m["manifest_version"] = 1;
  m["code_version"] = kCodeVersion;
  m["command"] = command;
  m["seeds"] = {{"run_seed", cfg.run.run_seed}, {"dataset_seed", cfg.dataset.seed}, {"tune_seed", cfg.tune.seed}};
  m["dataset_fingerprint"] = hex64(fingerprint);
  m["config"] = config::to_json(cfg);
  m["outputs"] = outputs;
  for (const auto& [k, v] : extra.items()) m[k] = v;
  return m;
}

/// Four stacked panels: test MSE, mean R^2, cumulative MSE and the
/// uncertainty of each incoming point.
inline std::string curves_svg(const std::vector<std::pair<std::string, metrics::Trace>>& runs) {
  std::vector<svg::Panel> panels(4);
  panels[0].title = "Test MSE";
  panels[1].title = "Test mean R2";
  panels[2].title = "Cumulative MSE";
  panels[3].title = "Predicted uncertainty of incoming point";
  for (auto& p : panels) p.x_label = "iteration";
  panels[1].y_min = -1.0;
  panels[1].y_max = 1.0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& [name, trace] = runs[k];
    const auto& color = svg::palette()[k % svg::palette().size()];
    std::vector<double> it, m, r2, cum, unc;
    for (const auto& r : trace) {
      it.push_back(static_cast<double>(r.iteration));
      m.push_back(r.test_mse);
      r2.push_back(r.test_mean_r2);
      cum.push_back(r.cumulative_mse);
      unc.push_back(r.incoming_uncertainty);
    }
    panels[0].series.push_back({name, color, it, m});
    panels[1].series.push_back({name, color, it, r2});
    panels[2].series.push_back({name, color, it, cum});
    panels[3].series.push_back({name, color, it, unc});
  }
  return svg::render(panels, 1, 720, 260);
}

inline std::string sweep_csv(const std::vector<tuning::SweepRow>& rows, tuning::SweepParameter param) {
  std::string out = std::string(tuning::to_string(param)) +
                    ",seed,minimum_mse,final_mean_r2,cumulative_mse,dataset_use,error\n";
  for (const auto& r : rows) {
    out += data::format_double(r.value) + ',' + std::to_string(r.seed);
    if (r.summary) {
      out += ',' + data::format_double(r.summary->minimum_mse) + ',' + data::format_double(r.summary->final_mean_r2) +
             ',' + data::format_double(r.summary->cumulative_mse) + ',' + data::format_double(r.summary->dataset_use) +
             ",\n";
    } else {
      std::string msg = r.error.value_or("");
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out += ",,,,," + msg + '\n';
    }
  }
  return out;
}

/// Final cumulative MSE against the swept value, one point per seed.
inline std::string sweep_svg(const std::vector<tuning::SweepRow>& rows, tuning::SweepParameter param,
                             const std::string& strategy) {
  svg::Panel p;
  p.title = "Final cumulative MSE (" + strategy + ")";
  p.x_label = std::string(tuning::to_string(param));
  p.y_label = "cumulative MSE";
  svg::Series s{strategy, svg::palette()[0], {}, {}, true, 3.5};
  for (const auto& r : rows)
    if (r.summary) {
      s.x.push_back(r.value);
      s.y.push_back(r.summary->cumulative_mse);
    }
  p.series.push_back(std::move(s));
  return svg::render({p}, 1, 640, 360);
}

inline std::string tune_csv(const std::vector<tuning::ScoredConfig>& ranked) {
  std::string out = "rank,hidden_layers,units,learning_rate,batch_size,patience,score,error\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& c = ranked[i];
    std::string msg = c.error.value_or("");
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out += std::to_string(i + 1) + ',' + std::to_string(c.config.hidden_layers) + ',' +
           std::to_string(c.config.units) + ',' + data::format_double(c.config.learning_rate) + ',' +
           std::to_string(c.config.batch_size) + ',' + std::to_string(c.config.patience) + ',' +
           (c.error ? std::string() : data::format_double(c.score)) + ',' + msg + '\n';
  }
  return out;
}

}  // namespace uqstream::io
