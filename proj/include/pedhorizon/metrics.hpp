#pragma once

// Vehicle-level metrics over sets of episodes, and the horizon-indexed
// tables the requirements engine consumes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/scenario.hpp"
#include "pedhorizon/simulation.hpp"

namespace pedhorizon {

enum class ComfortClass { NotBraking, Comfortable, Uncomfortable, HighlyUncomfortable };

inline constexpr double kComfortableLimit = -0.89;  // m/s^2
inline constexpr double kUncomfortableLimit = -1.89;

/// A threshold value itself belongs to the harsher band: -0.89 is
/// uncomfortable, -1.89 highly uncomfortable.
inline ComfortClass classify_decel(double a) {
  if (a >= 0.0) return ComfortClass::NotBraking;
  if (a > kComfortableLimit) return ComfortClass::Comfortable;
  if (a > kUncomfortableLimit) return ComfortClass::Uncomfortable;
  return ComfortClass::HighlyUncomfortable;
}

/// Time spent braking in each comfort class, in seconds.
struct BrakingTime {
  double comfortable = 0.0;
  double uncomfortable = 0.0;
  double highly_uncomfortable = 0.0;

  double total() const { return comfortable + uncomfortable + highly_uncomfortable; }

  BrakingTime& operator+=(const BrakingTime& o) {
    comfortable += o.comfortable;
    uncomfortable += o.uncomfortable;
    highly_uncomfortable += o.highly_uncomfortable;
    return *this;
  }
};

/// Shares of braking time in percent.
struct ComfortBreakdown {
  double comfortable = 100.0;
  double uncomfortable = 0.0;
  double highly_uncomfortable = 0.0;
};

inline ComfortBreakdown breakdown(const BrakingTime& bt) {
  const double total = bt.total();
  if (!(total > 0.0)) return {};  // no braking at all
  return {100.0 * bt.comfortable / total, 100.0 * bt.uncomfortable / total,
          100.0 * bt.highly_uncomfortable / total};
}

/// Each trace sample stands for the integration step that ended at its time stamp.
inline BrakingTime braking_time(const std::vector<TraceSample>& trace) {
  BrakingTime bt;
  double prev_t = 0.0;
  for (const TraceSample& s : trace) {
    const double dt = s.t - prev_t;
    prev_t = s.t;
    switch (classify_decel(s.a)) {
      case ComfortClass::Comfortable: bt.comfortable += dt; break;
      case ComfortClass::Uncomfortable: bt.uncomfortable += dt; break;
      case ComfortClass::HighlyUncomfortable: bt.highly_uncomfortable += dt; break;
      case ComfortClass::NotBraking: break;
    }
  }
  return bt;
}

/// The per-episode facts the metrics need; one row of the sweep results.
struct RunSummary {
  std::string scenario;
  double horizon = 0.0;
  int sample_index = -1;
  double ped_speed = 0.0;
  SpeedGroup group = SpeedGroup::P2;
  bool collided = false;
  std::optional<double> collision_speed;
  std::optional<double> travel_time;
  bool valid = true;
  BrakingTime braking;
  double min_planner_frequency = 0.0;
};

inline RunSummary summarize(const RunResult& r, double ped_speed, SpeedGroup group) {
  RunSummary s;
  s.scenario = r.scenario;
  s.horizon = r.horizon;
  s.sample_index = r.sample_index;
  s.ped_speed = ped_speed;
  s.group = group;
  s.collided = r.collided;
  s.collision_speed = r.collision_speed;
  s.travel_time = r.travel_time;
  s.valid = r.valid;
  s.braking = braking_time(r.accel_trace);
  s.min_planner_frequency = r.min_planner_frequency;
  return s;
}

/// Percentage of collision-free runs.
inline double safety_metric(std::span<const RunSummary> runs) {
  if (runs.empty()) throw Error("safety_metric: no runs for this cell");
  const auto ok = std::count_if(runs.begin(), runs.end(), [](const RunSummary& r) { return !r.collided; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(runs.size());
}

/// Pools braking time over all runs before taking shares.
inline ComfortBreakdown comfort_breakdown(std::span<const RunSummary> runs) {
  if (runs.empty()) throw Error("comfort_metric: no runs for this cell");
  BrakingTime bt;
  for (const RunSummary& r : runs) bt += r.braking;
  return breakdown(bt);
}

inline double comfort_metric(std::span<const RunSummary> runs) {
  return comfort_breakdown(runs).comfortable;
}

inline double travel_delay(double t, double t_b) {
  if (!(t_b > 0.0)) throw DomainError("travel_delay: baseline time must be positive");
  if (!(t >= 0.0)) throw DomainError("travel_delay: travel time must be non-negative");
  return 100.0 * (t - t_b) / t_b;
}

/// Mean delay over completed runs, optionally restricted to one group.
/// Empty when no run of the selection finished.
inline std::optional<double> mean_delay(std::span<const RunSummary> runs, double t_b,
                                        std::optional<SpeedGroup> group = std::nullopt) {
  double sum = 0.0;
  int n = 0;
  for (const RunSummary& r : runs) {
    if (group && r.group != *group) continue;
    if (r.collided || !r.valid || !r.travel_time) continue;
    sum += travel_delay(*r.travel_time, t_b);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

/// Piecewise-linear interpolation over ascending knots; no extrapolation.
inline double interpolate_metric(const std::vector<double>& knots, const std::vector<double>& values,
                                 double h) {
  if (knots.empty() || knots.size() != values.size()) {
    throw DomainError("interpolate_metric: knots and values must be non-empty and of equal length");
  }
  if (h < knots.front() || h > knots.back() || std::isnan(h)) {
    throw DomainError("interpolate_metric: horizon outside the sampled range");
  }
  const auto it = std::lower_bound(knots.begin(), knots.end(), h);
  const auto i = static_cast<std::size_t>(it - knots.begin());
  if (knots[i] == h) return values[i];
  const double h0 = knots[i - 1], h1 = knots[i];
  const double u = (h - h0) / (h1 - h0);
  return values[i - 1] + u * (values[i] - values[i - 1]);
}

inline double interpolate_metric(const std::map<double, double>& series, double h) {
  std::vector<double> k, v;
  for (const auto& [x, y] : series) {
    k.push_back(x);
    v.push_back(y);
  }
  return interpolate_metric(k, v, h);
}

/// f_eff(h) = max delay - delay(h). The maximum of a piecewise-linear
/// interpolant is attained at a knot, so the knot maximum is exact.
inline std::vector<double> efficiency_from_delays(const std::vector<double>& delays) {
  if (delays.empty()) throw DomainError("efficiency_from_delays: empty delay curve");
  for (double d : delays) {
    if (!std::isfinite(d)) throw DomainError("efficiency_from_delays: delay curve has gaps");
  }
  const double peak = *std::max_element(delays.begin(), delays.end());
  std::vector<double> eff;
  eff.reserve(delays.size());
  for (double d : delays) eff.push_back(peak - d);
  return eff;
}

inline std::map<double, double> efficiency_from_delays(const std::map<double, double>& curve) {
  std::vector<double> d;
  for (const auto& [h, v] : curve) d.push_back(v);
  const std::vector<double> e = efficiency_from_delays(d);
  std::map<double, double> out;
  std::size_t i = 0;
  for (const auto& [h, v] : curve) out[h] = e[i++];
  return out;
}

namespace metric {
inline const std::string safety = "safety";
inline const std::string comfort = "comfort";
inline const std::string efficiency = "efficiency";
// auxiliary series kept alongside the three headline metrics
inline const std::string uncomfortable = "uncomfortable";
inline const std::string highly_uncomfortable = "highly_uncomfortable";
inline const std::string delay = "delay";
}  // namespace metric

/// f^m(h, s) sampled on a shared set of horizon knots. Missing values are NaN.
class MetricTable {
 public:
  MetricTable() = default;
  explicit MetricTable(std::vector<double> horizons) : horizons_(std::move(horizons)) {
    validate_horizons(horizons_);
  }

  const std::vector<double>& horizons() const { return horizons_; }

  void set(const std::string& m, const std::string& sc, std::vector<double> values) {
    if (values.size() != horizons_.size()) {
      throw FormatError("metric table: series " + m + "/" + sc + " does not cover every horizon");
    }
    series_[m][sc] = std::move(values);
  }

  void set(const std::string& m, const std::string& sc, std::size_t knot, double value) {
    auto& s = series_[m][sc];
    if (s.empty()) s.assign(horizons_.size(), std::numeric_limits<double>::quiet_NaN());
    s.at(knot) = value;
  }

  bool has(const std::string& m, const std::string& sc) const {
    const auto it = series_.find(m);
    return it != series_.end() && it->second.count(sc) > 0;
  }

  const std::vector<double>& series(const std::string& m, const std::string& sc) const {
    const auto it = series_.find(m);
    if (it == series_.end() || !it->second.count(sc)) {
      throw FormatError("metric table: no '" + m + "' series for " + sc);
    }
    return it->second.at(sc);
  }

  std::vector<std::string> scenarios() const {
    std::vector<std::string> out;
    for (const auto& [m, by_sc] : series_) {
      for (const auto& [sc, v] : by_sc) {
        if (std::find(out.begin(), out.end(), sc) == out.end()) out.push_back(sc);
      }
    }
    return out;
  }

  /// Copy without the given scenario.
  MetricTable without(const std::string& sc) const {
    MetricTable t = *this;
    for (auto& [m, by_sc] : t.series_) by_sc.erase(sc);
    return t;
  }

  /// Copy restricted to horizons >= h0, with h0 itself as the first knot.
  /// Efficiency is re-derived from the delay series where one is present, so
  /// it is measured against the worst delay inside the restricted range.
  MetricTable from(double h0) const {
    if (!(h0 >= horizons_.front() && h0 <= horizons_.back())) {
      throw DomainError("metric table: restriction point outside the sampled range");
    }
    std::vector<double> hs = {h0};
    for (double h : horizons_) {
      if (h > h0) hs.push_back(h);
    }
    MetricTable t(hs);
    t.baseline_times = baseline_times;
    for (const auto& [m, by_sc] : series_) {
      for (const auto& [sc, v] : by_sc) {
        std::vector<double> out;
        for (double h : hs) out.push_back(interpolate_metric(horizons_, v, h));
        t.series_[m][sc] = std::move(out);
      }
    }
    const auto d = t.series_.find(metric::delay);
    if (d != t.series_.end()) {
      for (const auto& [sc, delays] : d->second) {
        if (std::all_of(delays.begin(), delays.end(), [](double x) { return std::isfinite(x); })) {
          t.series_[metric::efficiency][sc] = efficiency_from_delays(delays);
        }
      }
    }
    return t;
  }

  double at(const std::string& m, const std::string& sc, double h) const {
    return interpolate_metric(horizons_, series(m, sc), h);
  }

  std::map<std::string, double> baseline_times;

 private:
  std::vector<double> horizons_;
  std::map<std::string, std::map<std::string, std::vector<double>>> series_;
};

}  // namespace pedhorizon
