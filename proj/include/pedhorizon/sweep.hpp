#pragma once

// Scenario x horizon x pedestrian sweeps, in memory or persisted to a
// results directory that can be resumed after an interruption.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedhorizon/config.hpp"
#include "pedhorizon/io.hpp"
#include "pedhorizon/metrics.hpp"
#include "pedhorizon/simulation.hpp"

namespace pedhorizon {

inline constexpr const char* kToolName = "pedhorizon";
inline constexpr const char* kToolVersion = "1.0.0";

struct SweepOptions {
  unsigned jobs = 0;  // 0: one per hardware thread
  std::function<void(std::size_t done, std::size_t total)> progress;
  // Called under a lock for every finished episode, in completion order.
  std::function<void(const RunSummary&)> on_result;
};

struct SweepOutput {
  std::vector<RunSummary> runs;  // ordered by (scenario, horizon, sample_index)
  std::map<std::string, double> baselines;
};

inline unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Canonical position of an episode: scenarios in config order, then
/// horizons ascending, then sample index.
struct CellKey {
  std::string sc;
  double horizon = 0.0;
  int sample_index = 0;
  auto tie() const { return std::tie(sc, horizon, sample_index); }
  bool operator<(const CellKey& o) const { return tie() < o.tie(); }
};

/// Runs every episode not already in `completed`. Results do not depend on
/// the number of jobs or on completion order.
inline SweepOutput run_sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {},
                             const std::vector<RunSummary>& completed = {}) {
  cfg.validate();
  const auto peds = cfg.pedestrian_samples();

  struct Task {
    std::size_t slot;
    std::size_t sc;
    double horizon;
    std::size_t ped;
  };
  std::map<CellKey, const RunSummary*> done;
  for (const RunSummary& r : completed) done[{r.scenario, r.horizon, r.sample_index}] = &r;

  std::vector<ScenarioGeometry> geoms;
  SweepOutput out;
  for (const auto& sc : cfg.scenarios) {
    geoms.push_back(build_geometry(sc, cfg.nominal_pedestrian_speed, cfg.geometry));
    out.baselines[sc.id] = baseline_travel_time(sc, geoms.back(), cfg.planner, cfg.simulation);
  }

  std::vector<Task> tasks;
  const std::size_t total = cfg.scenarios.size() * cfg.horizons.size() * peds.size();
  out.runs.resize(total);
  std::size_t slot = 0;
  for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
    for (double h : cfg.horizons) {
      for (std::size_t p = 0; p < peds.size(); ++p, ++slot) {
        const auto it = done.find({cfg.scenarios[s].id, h, peds[p].sample_index});
        if (it != done.end()) {
          out.runs[slot] = *it->second;
        } else {
          tasks.push_back({slot, s, h, p});
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::size_t finished = total - tasks.size();

  auto worker = [&] {
    while (!failed) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      try {
        const ScenarioCategory& sc = cfg.scenarios[t.sc];
        const PedestrianSample& ped = peds[t.ped];
        const RunResult r = run_episode(sc, geoms[t.sc], ped, t.horizon, cfg.planner, cfg.simulation);
        RunSummary s = summarize(r, ped.speed, classify_speed_group(sc, geoms[t.sc], ped.speed));
        std::lock_guard lock(mu);
        out.runs[t.slot] = s;
        ++finished;
        if (opt.on_result) opt.on_result(s);
        if (opt.progress) opt.progress(finished, total);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const unsigned jobs = std::min<std::size_t>(resolve_jobs(opt.jobs), std::max<std::size_t>(1, tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---- persisted sweeps ------------------------------------------------------

inline const std::vector<std::string>& results_header() {
  static const std::vector<std::string> h = {
      "sc", "horizon", "sample_index", "ped_speed", "group", "collided", "collision_speed",
      "travel_time", "valid", "comfortable_share", "uncomfortable_share",
      "highly_uncomfortable_share", "braking_time_comfortable", "braking_time_uncomfortable",
      "braking_time_highly_uncomfortable", "min_planner_frequency"};
  return h;
}

inline std::string format_result_row(const RunSummary& r) {
  using io::format_double;
  const ComfortBreakdown b = breakdown(r.braking);
  return io::join_csv({r.scenario, format_double(r.horizon), std::to_string(r.sample_index),
                       format_double(r.ped_speed), to_string(r.group), r.collided ? "1" : "0",
                       io::format_optional(r.collision_speed), io::format_optional(r.travel_time),
                       r.valid ? "1" : "0", format_double(b.comfortable), format_double(b.uncomfortable),
                       format_double(b.highly_uncomfortable), format_double(r.braking.comfortable),
                       format_double(r.braking.uncomfortable),
                       format_double(r.braking.highly_uncomfortable),
                       format_double(r.min_planner_frequency)});
}

inline std::vector<RunSummary> parse_results(const io::CsvTable& t, const std::string& file) {
  const auto col = [&](const char* name) { return t.column(name, file); };
  const std::size_t c_sc = col("sc"), c_h = col("horizon"), c_i = col("sample_index"),
                    c_v = col("ped_speed"), c_g = col("group"), c_c = col("collided"),
                    c_cs = col("collision_speed"), c_tt = col("travel_time"), c_ok = col("valid"),
                    c_b0 = col("braking_time_comfortable"), c_b1 = col("braking_time_uncomfortable"),
                    c_b2 = col("braking_time_highly_uncomfortable"), c_f = col("min_planner_frequency");
  std::vector<RunSummary> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string where = file + " row " + std::to_string(i + 2);
    RunSummary r;
    r.scenario = f[c_sc];
    r.horizon = io::parse_double(f[c_h], where + " horizon");
    r.sample_index = static_cast<int>(io::parse_long(f[c_i], where + " sample_index"));
    r.ped_speed = io::parse_double(f[c_v], where + " ped_speed");
    r.group = parse_speed_group(f[c_g]);
    r.collided = io::parse_bool(f[c_c], where + " collided");
    r.collision_speed = io::parse_optional(f[c_cs], where + " collision_speed");
    r.travel_time = io::parse_optional(f[c_tt], where + " travel_time");
    r.valid = io::parse_bool(f[c_ok], where + " valid");
    r.braking.comfortable = io::parse_double(f[c_b0], where + " braking_time_comfortable");
    r.braking.uncomfortable = io::parse_double(f[c_b1], where + " braking_time_uncomfortable");
    r.braking.highly_uncomfortable = io::parse_double(f[c_b2], where + " braking_time_highly_uncomfortable");
    r.min_planner_frequency = io::parse_double(f[c_f], where + " min_planner_frequency");
    out.push_back(std::move(r));
  }
  return out;
}

/// Hash of the config's canonical JSON form, so whitespace and key order
/// do not matter.
inline std::string config_hash(const std::string& config_text) {
  try {
    return io::fnv1a_hex(nlohmann::json::parse(config_text).dump());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

namespace files {
inline const char* results = "results.csv";
inline const char* partial = "results.partial.csv";
inline const char* baselines = "baselines.csv";
inline const char* manifest = "manifest.json";
inline const char* config = "config.json";
}  // namespace files

struct DirSweepOptions {
  unsigned jobs = 0;
  bool resume = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct DirSweepReport {
  std::size_t total = 0;
  std::size_t reused = 0;
};

/// Runs the configured sweep into `out_dir`: results.csv (canonical order),
/// baselines.csv, config.json and manifest.json. Finished episodes are
/// appended to results.partial.csv as they complete; with `resume` they are
/// picked up again instead of being recomputed.
inline DirSweepReport run_sweep_to_dir(const std::string& config_text, const std::filesystem::path& out_dir,
                                       const DirSweepOptions& opt = {}) {
  namespace fs = std::filesystem;
  const ExperimentConfig cfg = parse_config_text(config_text);
  const std::string hash = config_hash(config_text);
  fs::create_directories(out_dir);

  const fs::path partial = out_dir / files::partial;
  std::vector<RunSummary> completed;
  if (opt.resume && fs::exists(out_dir / files::config)) {
    if (config_hash(read_text_file((out_dir / files::config).string())) != hash) {
      throw ConfigError("--resume: " + (out_dir / files::config).string() +
                        " differs from the given config; refusing to mix results");
    }
    if (fs::exists(partial)) {
      completed = parse_results(io::read_csv(partial, true), partial.string());
    } else if (fs::exists(out_dir / files::results)) {
      completed = parse_results(io::read_csv(out_dir / files::results), (out_dir / files::results).string());
    }
  }
  io::write_file_atomic(out_dir / files::config, config_text);

  // rewrite the partial file with exactly the reusable rows, dropping any torn tail
  {
    std::string text = io::join_csv(results_header()) + "\n";
    for (const auto& r : completed) text += format_result_row(r) + "\n";
    io::write_file_atomic(partial, text);
  }
  std::ofstream append(partial, std::ios::binary | std::ios::app);
  if (!append) throw Error("cannot append to '" + partial.string() + "'");

  SweepOptions so;
  so.jobs = opt.jobs;
  so.progress = opt.progress;
  so.on_result = [&](const RunSummary& r) {
    append << format_result_row(r) << '\n';
    append.flush();
  };
  const SweepOutput res = run_sweep(cfg, so, completed);
  append.close();

  std::string results = io::join_csv(results_header()) + "\n";
  for (const auto& r : res.runs) results += format_result_row(r) + "\n";
  io::write_file_atomic(out_dir / files::results, results);

  std::string baselines = "sc,baseline_travel_time\n";
  for (const auto& sc : cfg.scenarios) {
    baselines += sc.id + "," + io::format_double(res.baselines.at(sc.id)) + "\n";
  }
  io::write_file_atomic(out_dir / files::baselines, baselines);

  nlohmann::ordered_json m;
  m["tool"] = kToolName;
  m["tool_version"] = kToolVersion;
  m["config_hash"] = hash;
  m["master_seed"] = cfg.master_seed;
  m["rows"] = res.runs.size();
  m["pedestrian_count"] = cfg.pedestrian_count;
  nlohmann::json scs = nlohmann::json::array();
  for (const auto& sc : cfg.scenarios) scs.push_back(sc.id);
  m["scenarios"] = scs;
  m["horizons"] = cfg.horizons;
  io::write_file_atomic(out_dir / files::manifest, m.dump(2) + "\n");
  fs::remove(partial);

  return {res.runs.size(), completed.size()};
}

}  // namespace pedhorizon
