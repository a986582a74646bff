#pragma once

// The metric and derive stages: sweep results -> metric tables -> horizon
// reports, both as in-memory functions and as directory-to-file commands.

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedhorizon/config.hpp"
#include "pedhorizon/io.hpp"
#include "pedhorizon/metrics.hpp"
#include "pedhorizon/requirements.hpp"
#include "pedhorizon/sweep.hpp"

namespace pedhorizon {

struct DelayPoint {
  std::string sc;
  double horizon = 0.0;
  std::string group;  // all, P1, P2, P3
  std::optional<double> mean;
  int completed = 0;
};

struct FrequencyPoint {
  std::string sc;
  double horizon = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct MetricsBundle {
  MetricTable table;
  std::vector<DelayPoint> delays;
  std::vector<FrequencyPoint> frequency;
  std::map<std::string, std::map<double, double>> braking_time;  // sc -> horizon -> seconds
};

/// Groups runs into (scenario, horizon) cells and computes every metric.
/// All cells of the scenario x horizon grid must be present.
inline MetricsBundle compute_metrics(const std::vector<RunSummary>& runs,
                                     const std::vector<std::string>& scenarios,
                                     const std::vector<double>& horizons,
                                     const std::map<std::string, double>& baselines) {
  if (runs.empty()) throw Error("metrics: no runs in the results");
  std::map<std::string, std::map<double, std::vector<RunSummary>>> cells;
  for (const RunSummary& r : runs) cells[r.scenario][r.horizon].push_back(r);

  std::vector<std::string> missing;
  for (const auto& sc : scenarios) {
    for (double h : horizons) {
      if (!cells.count(sc) || !cells[sc].count(h)) missing.push_back("(" + sc + ", " + io::format_double(h) + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "metrics: results are missing cells";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }

  MetricsBundle out{MetricTable(horizons), {}, {}, {}};
  out.table.baseline_times = baselines;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& sc : scenarios) {
    const auto bt = baselines.find(sc);
    if (bt == baselines.end()) throw Error("metrics: no baseline travel time for " + sc);
    std::vector<double> safety, comfortable, unc, hunc, delay;
    for (double h : horizons) {
      const auto& c = cells[sc][h];
      safety.push_back(safety_metric(c));
      const ComfortBreakdown b = comfort_breakdown(c);
      comfortable.push_back(b.comfortable);
      unc.push_back(b.uncomfortable);
      hunc.push_back(b.highly_uncomfortable);
      BrakingTime total;
      for (const auto& r : c) total += r.braking;
      out.braking_time[sc][h] = total.total();

      const auto all = mean_delay(c, bt->second);
      delay.push_back(all.value_or(nan));
      auto count = [&](std::optional<SpeedGroup> g) {
        int n = 0;
        for (const auto& r : c) {
          if ((!g || r.group == *g) && !r.collided && r.valid && r.travel_time) ++n;
        }
        return n;
      };
      out.delays.push_back({sc, h, "all", all, count(std::nullopt)});
      for (SpeedGroup g : {SpeedGroup::P1, SpeedGroup::P2, SpeedGroup::P3}) {
        out.delays.push_back({sc, h, to_string(g), mean_delay(c, bt->second, g), count(g)});
      }

      double sum = 0.0, sq = 0.0;
      for (const auto& r : c) sum += r.min_planner_frequency;
      const double mean = sum / static_cast<double>(c.size());
      for (const auto& r : c) sq += (r.min_planner_frequency - mean) * (r.min_planner_frequency - mean);
      out.frequency.push_back({sc, h, mean, std::sqrt(sq / static_cast<double>(c.size()))});
    }
    out.table.set(metric::safety, sc, safety);
    out.table.set(metric::comfort, sc, comfortable);
    out.table.set(metric::uncomfortable, sc, unc);
    out.table.set(metric::highly_uncomfortable, sc, hunc);
    out.table.set(metric::delay, sc, delay);
    bool complete = true;
    for (double d : delay) complete = complete && std::isfinite(d);
    // a horizon where no run finished leaves the efficiency series undefined
    out.table.set(metric::efficiency, sc,
                  complete ? efficiency_from_delays(delay) : std::vector<double>(horizons.size(), nan));
  }
  return out;
}

inline MetricsBundle compute_metrics(const SweepOutput& sweep, const ExperimentConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& sc : cfg.scenarios) ids.push_back(sc.id);
  return compute_metrics(sweep.runs, ids, cfg.horizons, sweep.baselines);
}

namespace files {
inline const char* metric_table = "metric_table.csv";
inline const char* delay_curves = "delay_curves.csv";
inline const char* comfort_breakdown = "comfort_breakdown.csv";
inline const char* frequency = "frequency.csv";
}  // namespace files

struct MetricsFiles {
  std::string metric_table;
  std::string delay_curves;
  std::string comfort_breakdown;
  std::string frequency;
};

inline MetricsFiles render_metrics(const MetricsBundle& b, const std::vector<std::string>& scenarios) {
  using io::format_double;
  const auto& hs = b.table.horizons();
  MetricsFiles f;
  f.metric_table = "metric,sc,horizon,value\n";
  for (const auto& sc : scenarios) {
    for (const auto& m : {metric::safety, metric::comfort, metric::efficiency}) {
      const auto& v = b.table.series(m, sc);
      for (std::size_t i = 0; i < hs.size(); ++i) {
        f.metric_table += m + "," + sc + "," + format_double(hs[i]) + "," + format_double(v[i]) + "\n";
      }
    }
  }
  f.delay_curves = "sc,horizon,group,mean_delay,completed_runs\n";
  for (const auto& d : b.delays) {
    f.delay_curves += d.sc + "," + format_double(d.horizon) + "," + d.group + "," +
                      io::format_optional(d.mean) + "," + std::to_string(d.completed) + "\n";
  }
  f.comfort_breakdown = "sc,horizon,comfortable,uncomfortable,highly_uncomfortable,braking_time\n";
  for (const auto& sc : scenarios) {
    const auto& c = b.table.series(metric::comfort, sc);
    const auto& u = b.table.series(metric::uncomfortable, sc);
    const auto& x = b.table.series(metric::highly_uncomfortable, sc);
    for (std::size_t i = 0; i < hs.size(); ++i) {
      f.comfort_breakdown += sc + "," + format_double(hs[i]) + "," + format_double(c[i]) + "," +
                             format_double(u[i]) + "," + format_double(x[i]) + "," +
                             format_double(b.braking_time.at(sc).at(hs[i])) + "\n";
    }
  }
  f.frequency = "sc,horizon,mean_min_frequency,std_min_frequency\n";
  for (const auto& p : b.frequency) {
    f.frequency += p.sc + "," + format_double(p.horizon) + "," + format_double(p.mean) + "," +
                   format_double(p.stddev) + "\n";
  }
  return f;
}

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_text_file(p.string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(p.string() + ": not valid JSON: " + e.what());
  }
}

/// The manifest must describe the config stored next to it.
inline nlohmann::json checked_manifest(const std::filesystem::path& dir) {
  const auto mpath = dir / files::manifest;
  const auto cpath = dir / files::config;
  if (!std::filesystem::exists(mpath)) throw Error("missing " + mpath.string());
  if (!std::filesystem::exists(cpath)) throw Error("missing " + cpath.string());
  const nlohmann::json m = read_json_file(mpath);
  if (!m.contains("config_hash") || !m["config_hash"].is_string()) {
    throw FormatError(mpath.string() + ": no config_hash");
  }
  if (m["config_hash"].get<std::string>() != config_hash(read_text_file(cpath.string()))) {
    throw Error(mpath.string() + ": config hash does not match " + cpath.string());
  }
  return m;
}

}  // namespace detail

/// `metrics --results <file> --out <dir>`: reads the sweep directory that
/// holds <file>, checks it against its manifest and writes the four tables
/// plus a copy of the config and manifest.
inline void run_metrics_command(const std::filesystem::path& results_file, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(results_file)) throw Error("results file '" + results_file.string() + "' not found");
  const fs::path dir = results_file.parent_path().empty() ? fs::path(".") : results_file.parent_path();
  const nlohmann::json manifest = detail::checked_manifest(dir);
  const std::string config_text = read_text_file((dir / files::config).string());
  const ExperimentConfig cfg = parse_config_text(config_text);

  const auto runs = parse_results(io::read_csv(results_file), results_file.string());
  if (runs.empty()) throw Error(results_file.string() + ": no result rows");
  const std::size_t expected = manifest.value("rows", std::size_t{0});
  if (runs.size() != expected) {
    throw Error(results_file.string() + ": " + std::to_string(runs.size()) + " rows, manifest expects " +
                std::to_string(expected));
  }

  std::map<std::string, double> baselines;
  const auto bt = io::read_csv(dir / files::baselines);
  const std::size_t c_sc = bt.column("sc", files::baselines), c_t = bt.column("baseline_travel_time", files::baselines);
  for (const auto& row : bt.rows) baselines[row[c_sc]] = io::parse_double(row[c_t], files::baselines);

  std::vector<std::string> ids;
  for (const auto& sc : cfg.scenarios) ids.push_back(sc.id);
  const MetricsBundle b = compute_metrics(runs, ids, cfg.horizons, baselines);
  const MetricsFiles f = render_metrics(b, ids);

  fs::create_directories(out_dir);
  io::write_file_atomic(out_dir / files::metric_table, f.metric_table);
  io::write_file_atomic(out_dir / files::delay_curves, f.delay_curves);
  io::write_file_atomic(out_dir / files::comfort_breakdown, f.comfort_breakdown);
  io::write_file_atomic(out_dir / files::frequency, f.frequency);
  io::write_file_atomic(out_dir / files::config, config_text);
  io::write_file_atomic(out_dir / files::manifest, manifest.dump(2) + "\n");
}

/// Rebuilds the metric table (with the highly-uncomfortable share and the
/// delay series) from a metrics directory.
inline MetricTable load_metric_table(const std::filesystem::path& dir) {
  detail::checked_manifest(dir);
  const auto mt = io::read_csv(dir / files::metric_table);
  const std::string f1 = (dir / files::metric_table).string();
  const std::size_t c_m = mt.column("metric", f1), c_sc = mt.column("sc", f1), c_h = mt.column("horizon", f1),
                    c_v = mt.column("value", f1);
  std::set<double> hset;
  for (const auto& r : mt.rows) hset.insert(io::parse_double(r[c_h], f1));
  if (hset.empty()) throw FormatError(f1 + ": no rows");
  const std::vector<double> hs(hset.begin(), hset.end());
  auto index_of = [&](double h) {
    return static_cast<std::size_t>(std::lower_bound(hs.begin(), hs.end(), h) - hs.begin());
  };
  MetricTable t(hs);
  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& r : mt.rows) {
    const std::string& m = r[c_m];
    if (m != metric::safety && m != metric::comfort && m != metric::efficiency) {
      throw FormatError(f1 + ": unknown metric '" + m + "'");
    }
    const double v = r[c_v].empty() ? std::numeric_limits<double>::quiet_NaN() : io::parse_double(r[c_v], f1);
    t.set(m, r[c_sc], index_of(io::parse_double(r[c_h], f1)), v);
    ++counts[{m, r[c_sc]}];
  }
  for (const auto& [key, n] : counts) {
    if (n != hs.size()) {
      throw FormatError(f1 + ": series " + key.first + "/" + key.second + " does not cover every horizon");
    }
  }
  const auto cb = io::read_csv(dir / files::comfort_breakdown);
  const std::string f2 = (dir / files::comfort_breakdown).string();
  const std::size_t d_sc = cb.column("sc", f2), d_h = cb.column("horizon", f2),
                    d_u = cb.column("uncomfortable", f2), d_x = cb.column("highly_uncomfortable", f2);
  for (const auto& r : cb.rows) {
    const double h = io::parse_double(r[d_h], f2);
    const std::size_t i = index_of(h);
    if (i >= hs.size() || hs[i] != h) throw FormatError(f2 + ": horizon " + r[d_h] + " not in the metric table");
    t.set(metric::uncomfortable, r[d_sc], i, io::parse_double(r[d_u], f2));
    t.set(metric::highly_uncomfortable, r[d_sc], i, io::parse_double(r[d_x], f2));
  }
  const auto dc = io::read_csv(dir / files::delay_curves);
  const std::string f3 = (dir / files::delay_curves).string();
  const std::size_t e_sc = dc.column("sc", f3), e_h = dc.column("horizon", f3), e_g = dc.column("group", f3),
                    e_v = dc.column("mean_delay", f3);
  for (const auto& r : dc.rows) {
    if (r[e_g] != "all") continue;
    const double h = io::parse_double(r[e_h], f3);
    const std::size_t i = index_of(h);
    if (i >= hs.size() || hs[i] != h) throw FormatError(f3 + ": horizon " + r[e_h] + " not in the metric table");
    t.set(metric::delay, r[e_sc], i,
          r[e_v].empty() ? std::numeric_limits<double>::quiet_NaN() : io::parse_double(r[e_v], f3));
  }
  return t;
}

// ---- derive ------------------------------------------------------------------

struct HorizonPair {
  std::optional<double> required;
  std::optional<double> optimal;
};

/// Everything the derive report shows: the per-scenario/per-metric grid
/// (with an all-ones weighting for the "overall" row and column) and one
/// overall pair per application scheme.
struct DeriveReport {
  std::vector<std::string> scenarios;
  // row (scenario id or "overall") -> column (safety, comfort, efficiency, overall)
  std::map<std::string, std::map<std::string, HorizonPair>> grid;
  std::vector<AggregateResult> applications;
};

inline DeriveReport derive_report(const MetricTable& table, const std::vector<WeightScheme>& schemes,
                                  const RequirementsOptions& opt) {
  DeriveReport rep;
  rep.scenarios = table.scenarios();
  const std::vector<std::string> M = {metric::safety, metric::comfort, metric::efficiency};
  auto ones = [&](const std::vector<std::string>& scs, const std::vector<std::string>& ms) {
    WeightScheme w;
    w.name = "uniform";
    for (const auto& sc : scs) w.scenario_weights[sc] = 1.0;
    for (const auto& m : ms) w.metric_weights[m] = 1.0;
    return w;
  };
  auto overall = [&](const std::vector<std::string>& scs, const std::vector<std::string>& ms) {
    const WeightScheme w = ones(scs, ms);
    std::vector<std::string> mm = {metric::safety};
    mm.insert(mm.end(), ms.begin(), ms.end());
    return HorizonPair{required_overall(table, scs, mm, w, opt), optimal_overall(table, scs, mm, w, opt)};
  };
  for (const auto& sc : rep.scenarios) {
    auto& row = rep.grid[sc];
    const auto s = scenario_required_optimal(table, metric::safety, sc, opt);
    row[metric::safety] = {s.required, s.optimal};
    for (const auto& m : weighted_metrics()) {
      const auto p = scenario_required_optimal(table, m, sc, opt);
      row[m] = {p.required, p.optimal};
    }
    row["overall"] = overall({sc}, weighted_metrics());
  }
  auto& all = rep.grid["overall"];
  const double floor = detail::safety_floor(table, rep.scenarios);
  all[metric::safety] = {floor, floor};
  for (const auto& m : weighted_metrics()) all[m] = overall(rep.scenarios, {m});
  all["overall"] = overall(rep.scenarios, weighted_metrics());

  for (const auto& s : schemes) rep.applications.push_back(derive_application(table, s, opt));
  return rep;
}

inline std::string render_report_text(const DeriveReport& rep) {
  auto cell = [](const std::optional<double>& x) { return x ? io::format_fixed(*x, 2) : std::string("-"); };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::ostringstream os;
  os << "Required (r) and optimal (o) prediction horizons [s]\n\n";
  os << pad("", 8);
  for (const char* c : {"safety", "comfort", "efficiency", "overall"}) os << " | " << pad(c, 15);
  os << "\n" << pad("", 8);
  for (int i = 0; i < 4; ++i) os << " | " << pad("r", 7) << pad("o", 8);
  os << "\n";
  std::vector<std::string> rows = rep.scenarios;
  rows.push_back("overall");
  for (const auto& r : rows) {
    os << pad(r, 8);
    for (const char* c : {"safety", "comfort", "efficiency", "overall"}) {
      const HorizonPair& p = rep.grid.at(r).at(c);
      os << " | " << pad(cell(p.required), 7) << pad(cell(p.optimal), 8);
    }
    os << "\n";
  }
  os << "\nApplications\n\n";
  for (const auto& a : rep.applications) {
    os << pad(a.scheme.name, 12) << "  r = " << pad(cell(a.required_overall), 6)
       << "  o = " << pad(cell(a.optimal_overall), 6) << "\n";
  }
  return os.str();
}

inline std::string render_report_json(const DeriveReport& rep) {
  auto opt_json = [](const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); };
  nlohmann::ordered_json j;
  nlohmann::ordered_json grid;
  std::vector<std::string> rows = rep.scenarios;
  rows.push_back("overall");
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    for (const char* c : {"safety", "comfort", "efficiency", "overall"}) {
      const HorizonPair& p = rep.grid.at(r).at(c);
      row[c] = {{"required", opt_json(p.required)}, {"optimal", opt_json(p.optimal)}};
    }
    grid[r] = row;
  }
  j["per_scenario"] = grid;
  nlohmann::ordered_json apps = nlohmann::ordered_json::array();
  for (const auto& a : rep.applications) {
    nlohmann::ordered_json e;
    e["name"] = a.scheme.name;
    e["required"] = opt_json(a.required_overall);
    e["optimal"] = a.optimal_overall;
    e["cost_argmin"] = a.cost_argmin;
    e["cost_at_argmin"] = a.cost_at_argmin;
    e["safety_floor"] = a.safety_floor;
    nlohmann::ordered_json pm = nlohmann::ordered_json::array();
    for (const auto& p : a.per_metric) {
      pm.push_back({{"metric", p.metric}, {"sc", p.sc}, {"required", opt_json(p.required)}, {"optimal", p.optimal}});
    }
    e["per_metric"] = pm;
    apps.push_back(e);
  }
  j["applications"] = apps;
  return j.dump(2) + "\n";
}

struct DeriveSettings {
  std::vector<WeightScheme> schemes;
  RequirementsOptions options;
};

/// A weights file is a JSON array of schemes, or an experiment config whose
/// "weight_schemes" and "requirements" sections are used (both optional).
inline DeriveSettings load_derive_settings(const std::string& path) {
  DeriveSettings s;
  s.schemes = load_weight_schemes(path);
  const nlohmann::json j = detail::read_json_file(path);
  if (j.is_object() && j.contains("requirements")) {
    nlohmann::json only = nlohmann::json::object();
    only["requirements"] = j["requirements"];
    s.options = parse_config(only).requirements;
  }
  return s;
}

/// `derive --metrics <dir> --weights <file> --out <file>`: writes the text
/// report to <file> and the machine-readable form next to it (.json).
inline std::filesystem::path derive_json_path(const std::filesystem::path& out) {
  std::filesystem::path p = out;
  if (p.extension() == ".json") return p.replace_extension(".report.json");
  return p.replace_extension(".json");
}

inline void run_derive_command(const std::filesystem::path& metrics_dir, const std::string& weights_file,
                               const std::filesystem::path& out_file) {
  const MetricTable table = load_metric_table(metrics_dir);
  const DeriveSettings settings = load_derive_settings(weights_file);
  const DeriveReport rep = derive_report(table, settings.schemes, settings.options);
  if (out_file.has_parent_path()) std::filesystem::create_directories(out_file.parent_path());
  io::write_file_atomic(out_file, render_report_text(rep));
  io::write_file_atomic(derive_json_path(out_file), render_report_json(rep));
}

}  // namespace pedhorizon
