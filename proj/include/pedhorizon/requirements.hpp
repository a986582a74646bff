#pragma once

// Required and optimal prediction horizons from a metric table under an
// application weight scheme.
//
// All series are piecewise linear in h between the table knots, so the
// weighted squared-deviation cost is a quadratic on every knot segment and
// the satisfying set changes only at knots or at threshold crossings. Both
// searches are therefore done exactly instead of on a sampling grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/metrics.hpp"

namespace pedhorizon {

enum class Normalization { Pooled, PerScenario };

/// Which series decides whether a horizon is good enough for comfort: the
/// comfortable share (compared against its value at r) or the
/// highly-uncomfortable share (must not exceed its value at r).
enum class ComfortMembership { ComfortableShare, HighlyUncomfortableShare };

/// Horizons the comfort and efficiency requirements are judged on: every
/// swept horizon, or only those at or beyond the safety optimum. At unsafe
/// horizons an ego that never reacts looks ideal for comfort and delay.
enum class HorizonDomain { All, Safe };

struct RequirementsOptions {
  Normalization normalization = Normalization::Pooled;
  ComfortMembership comfort_membership = ComfortMembership::ComfortableShare;
  double satisficing_fraction = 0.85;
  HorizonDomain horizon_domain = HorizonDomain::All;

  void validate() const {
    if (!(satisficing_fraction > 0.0 && satisficing_fraction <= 1.0)) {
      throw ConfigError("requirements.satisficing_fraction: must be in (0, 1]");
    }
  }
};

/// Weighted metrics: comfort and efficiency. Safety is never weighted.
inline const std::vector<std::string>& weighted_metrics() {
  static const std::vector<std::string> m = {metric::comfort, metric::efficiency};
  return m;
}

struct WeightScheme {
  std::string name;
  std::map<std::string, double> scenario_weights;
  std::map<std::string, double> metric_weights;

  double scenario_weight(const std::string& sc) const {
    const auto it = scenario_weights.find(sc);
    return it == scenario_weights.end() ? 0.0 : it->second;
  }
  double metric_weight(const std::string& m) const {
    const auto it = metric_weights.find(m);
    return it == metric_weights.end() ? 0.0 : it->second;
  }

  void validate() const {
    const std::string where = "weight scheme '" + name + "'";
    for (const auto& [sc, w] : scenario_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(where + ": weight of " + sc + " must be >= 0");
    }
    for (const auto& [m, w] : metric_weights) {
      if (std::find(weighted_metrics().begin(), weighted_metrics().end(), m) == weighted_metrics().end()) {
        throw ConfigError(where + ": unknown metric '" + m + "' (weighted metrics: comfort, efficiency)");
      }
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(where + ": weight of " + m + " must be >= 0");
    }
    bool any = false;
    for (const auto& [sc, ws] : scenario_weights) {
      for (const auto& [m, wm] : metric_weights) any = any || (ws > 0.0 && wm > 0.0);
    }
    if (!any) throw ConfigError(where + ": needs at least one scenario and one metric with nonzero weight");
  }
};

inline int indicator(double w_s, double w_m) {
  if (!(w_s >= 0.0 && w_m >= 0.0)) throw DomainError("indicator: weights must be >= 0");
  return (w_s == 0.0 || w_m == 0.0) ? 0 : 1;
}

struct PerMetricHorizons {
  std::string metric;
  std::string sc;
  std::optional<double> required;
  double optimal = 0.0;
};

struct AggregateResult {
  std::optional<double> required_overall;
  double optimal_overall = 0.0;
  double cost_argmin = 0.0;     // unconstrained minimiser of the cost
  double cost_at_argmin = 0.0;
  double safety_floor = 0.0;
  WeightScheme scheme;
  std::vector<PerMetricHorizons> per_metric;
};

namespace detail {

inline std::size_t first_max(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}
inline std::size_t first_min(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

inline void require_finite(const std::vector<double>& v, const std::string& m, const std::string& sc) {
  for (double x : v) {
    if (!std::isfinite(x)) throw FormatError("metric table: '" + m + "' series for " + sc + " has gaps");
  }
}

/// Shortest h at which the interpolant first reaches `threshold`.
inline double first_reaching(const std::vector<double>& h, const std::vector<double>& v, double threshold) {
  if (v[0] >= threshold) return h[0];
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] >= threshold) {
      const double u = (threshold - v[i - 1]) / (v[i] - v[i - 1]);
      return std::min(h[i], h[i - 1] + std::clamp(u, 0.0, 1.0) * (h[i] - h[i - 1]));
    }
  }
  throw DomainError("threshold never reached");  // unreachable for thresholds <= max
}

}  // namespace detail

/// Per-(metric, scenario) required and optimal horizons; ties go to the
/// shortest horizon. Extremes of a piecewise-linear series sit at knots.
inline PerMetricHorizons per_metric_required_optimal(const MetricTable& table, const std::string& m,
                                                     const std::string& sc,
                                                     const RequirementsOptions& opt = {}) {
  const std::vector<double>& h = table.horizons();
  const std::vector<double>& v = table.series(m, sc);
  detail::require_finite(v, m, sc);
  PerMetricHorizons r{m, sc, std::nullopt, 0.0};
  if (m == metric::safety) {
    r.optimal = h[detail::first_max(v)];
    r.required = r.optimal;
  } else if (m == metric::comfort) {
    r.optimal = h[detail::first_max(v)];
    const std::vector<double>& hu = table.series(metric::highly_uncomfortable, sc);
    detail::require_finite(hu, metric::highly_uncomfortable, sc);
    r.required = h[detail::first_min(hu)];
  } else if (m == metric::efficiency) {
    const std::size_t o = detail::first_max(v);
    r.optimal = h[o];
    r.required = detail::first_reaching(h, v, opt.satisficing_fraction * v[o]);
  } else {
    throw DomainError("per_metric_required_optimal: unknown metric '" + m + "'");
  }
  return r;
}

/// Metric values mapped to [0, 100] (worst -> 0, best -> 100), keyed by
/// metric then scenario.
using NormalizedTable = std::map<std::string, std::map<std::string, std::vector<double>>>;

inline std::vector<double> normalize_values(const std::vector<double>& v, double lo, double hi) {
  std::vector<double> out(v.size(), 100.0);
  if (!(hi > lo)) return out;  // constant: nothing to penalise
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 100.0 * (v[i] - lo) / (hi - lo);
  return out;
}

/// Extremes of an interpolated series over any grid that contains the knots
/// are the knot extremes, so normalisation only looks at knot values.
inline NormalizedTable normalize(const MetricTable& table, const std::vector<std::string>& S,
                                 const std::vector<std::string>& M,
                                 Normalization mode = Normalization::Pooled) {
  NormalizedTable out;
  for (const std::string& m : M) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const std::string& sc : S) {
      const auto& v = table.series(m, sc);
      detail::require_finite(v, m, sc);
      lo = std::min(lo, *std::min_element(v.begin(), v.end()));
      hi = std::max(hi, *std::max_element(v.begin(), v.end()));
    }
    for (const std::string& sc : S) {
      const auto& v = table.series(m, sc);
      if (mode == Normalization::PerScenario) {
        out[m][sc] = normalize_values(v, *std::min_element(v.begin(), v.end()),
                                      *std::max_element(v.begin(), v.end()));
      } else {
        out[m][sc] = normalize_values(v, lo, hi);
      }
    }
  }
  return out;
}

/// The weighted squared deviation from each pair's optimum, for the pairs
/// that contribute under a scheme.
class CostFunction {
 public:
  struct Term {
    std::string metric;
    std::string sc;
    double weight = 0.0;
    std::vector<double> normalized;
    double target = 0.0;  // normalised value at the pair's optimum
  };

  CostFunction(const MetricTable& table, const std::vector<std::string>& S,
               const std::vector<std::string>& M, const WeightScheme& scheme,
               const RequirementsOptions& opt = {})
      : h_(table.horizons()) {
    std::vector<std::string> weighted;
    for (const std::string& m : M) {
      if (m != metric::safety && scheme.metric_weight(m) > 0.0) weighted.push_back(m);
    }
    for (const std::string& m : weighted) {
      std::vector<std::string> scs;
      for (const std::string& sc : S) {
        if (indicator(scheme.scenario_weight(sc), scheme.metric_weight(m))) scs.push_back(sc);
      }
      if (scs.empty()) continue;
      const NormalizedTable n = normalize(table, scs, {m}, opt.normalization);
      for (const std::string& sc : scs) {
        const PerMetricHorizons pm = per_metric_required_optimal(table, m, sc, opt);
        Term t;
        t.metric = m;
        t.sc = sc;
        t.weight = scheme.scenario_weight(sc) * scheme.metric_weight(m);
        t.normalized = n.at(m).at(sc);
        t.target = interpolate_metric(h_, t.normalized, pm.optimal);
        terms_.push_back(std::move(t));
      }
    }
  }

  double operator()(double h) const {
    double c = 0.0;
    for (const Term& t : terms_) {
      const double d = interpolate_metric(h_, t.normalized, h) - t.target;
      c += t.weight * d * d;
    }
    return c;
  }

  struct Minimum {
    double horizon = 0.0;
    double cost = 0.0;
  };

  /// Global minimiser over the knot range; the shortest one on ties.
  Minimum minimize() const {
    Minimum best{h_.front(), (*this)(h_.front())};
    auto consider = [&](double h) {
      const double c = (*this)(h);
      if (c < best.cost - kTieTolerance * std::max(best.cost, 1.0)) best = {h, c};
    };
    for (std::size_t i = 0; i + 1 < h_.size(); ++i) {
      const double span = h_[i + 1] - h_[i];
      double a = 0.0, b = 0.0;
      for (const Term& t : terms_) {
        const double alpha = t.normalized[i] - t.target;
        const double beta = (t.normalized[i + 1] - t.normalized[i]) / span;
        a += t.weight * beta * beta;
        b += 2.0 * t.weight * beta * alpha;
      }
      if (a > 0.0) {
        const double u = -b / (2.0 * a);
        if (u > 0.0 && u < span) consider(h_[i] + u);
      }
      consider(h_[i + 1]);
    }
    return best;
  }

  const std::vector<Term>& terms() const { return terms_; }

 private:
  static constexpr double kTieTolerance = 1e-12;
  std::vector<double> h_;
  std::vector<Term> terms_;
};

namespace detail {

inline std::vector<std::string> contributing_scenarios(const MetricTable& table,
                                                       const std::vector<std::string>& S,
                                                       const WeightScheme& scheme) {
  std::vector<std::string> out;
  const auto present = table.scenarios();
  for (const std::string& sc : S) {
    if (!(scheme.scenario_weight(sc) > 0.0)) continue;
    if (std::find(present.begin(), present.end(), sc) == present.end()) {
      throw ConfigError("weight scheme '" + scheme.name + "': scenario " + sc +
                        " is weighted but absent from the metric table");
    }
    out.push_back(sc);
  }
  return out;
}

inline double safety_floor(const MetricTable& table, const std::vector<std::string>& S) {
  double floor = table.horizons().front();
  for (const std::string& sc : S) {
    floor = std::max(floor, per_metric_required_optimal(table, metric::safety, sc).optimal);
  }
  return floor;
}

/// The table the requirements of `S` are evaluated on.
inline MetricTable evaluation_table(const MetricTable& table, const std::vector<std::string>& S,
                                    const RequirementsOptions& opt) {
  if (opt.horizon_domain == HorizonDomain::All) return table;
  return table.from(safety_floor(table, S));
}

}  // namespace detail

/// Per-metric horizons of one scenario, over the configured horizon domain.
inline PerMetricHorizons scenario_required_optimal(const MetricTable& table, const std::string& m,
                                                   const std::string& sc, const RequirementsOptions& opt = {}) {
  return per_metric_required_optimal(detail::evaluation_table(table, {sc}, opt), m, sc, opt);
}

inline double cost_fc(double h, const MetricTable& table, const std::vector<std::string>& S,
                      const std::vector<std::string>& M, const WeightScheme& scheme,
                      const RequirementsOptions& opt = {}) {
  const auto scs = detail::contributing_scenarios(table, S, scheme);
  return CostFunction(detail::evaluation_table(table, scs, opt), scs, M, scheme, opt)(h);
}

/// The cost minimiser, raised to the contributing scenarios'
/// safety optimum when it is shorter.
inline double optimal_overall(const MetricTable& table, const std::vector<std::string>& S,
                              const std::vector<std::string>& M, const WeightScheme& scheme,
                              const RequirementsOptions& opt = {}) {
  const auto scs = detail::contributing_scenarios(table, S, scheme);
  const CostFunction f(detail::evaluation_table(table, scs, opt), scs, M, scheme, opt);
  return std::max(detail::safety_floor(table, scs), f.minimize().horizon);
}

/// Shortest horizon at which every contributing pair is at least as good as
/// at its own required horizon, raised to the safety floor; empty when no
/// horizon satisfies all pairs at once.
inline std::optional<double> required_overall(const MetricTable& full, const std::vector<std::string>& S,
                                              const std::vector<std::string>& M,
                                              const WeightScheme& scheme,
                                              const RequirementsOptions& opt = {}) {
  const auto scs = detail::contributing_scenarios(full, S, scheme);
  const MetricTable table = detail::evaluation_table(full, scs, opt);
  const std::vector<double>& h = table.horizons();

  // each condition reads: sign * (series(h) - threshold) >= 0
  struct Condition {
    const std::vector<double>* series;
    double threshold;
    double sign;
  };
  std::vector<Condition> conds;
  for (const std::string& m : M) {
    if (m == metric::safety) continue;
    for (const std::string& sc : scs) {
      if (!indicator(scheme.scenario_weight(sc), scheme.metric_weight(m))) continue;
      const PerMetricHorizons pm = per_metric_required_optimal(table, m, sc, opt);
      if (m == metric::comfort && opt.comfort_membership == ComfortMembership::HighlyUncomfortableShare) {
        const auto& hu = table.series(metric::highly_uncomfortable, sc);
        conds.push_back({&hu, interpolate_metric(h, hu, *pm.required), -1.0});
      } else if (m == metric::efficiency) {
        const auto& v = table.series(m, sc);
        conds.push_back({&v, opt.satisficing_fraction * v[detail::first_max(v)], 1.0});
      } else {
        const auto& v = table.series(m, sc);
        conds.push_back({&v, interpolate_metric(h, v, *pm.required), 1.0});
      }
    }
  }

  // The satisfying set is closed, so its minimum is a knot or a crossing.
  std::set<double> points(h.begin(), h.end());
  for (const Condition& c : conds) {
    const auto& v = *c.series;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
      const double g0 = v[i] - c.threshold, g1 = v[i + 1] - c.threshold;
      if ((g0 < 0.0) != (g1 < 0.0)) {
        const double u = g0 / (g0 - g1);
        points.insert(h[i] + std::clamp(u, 0.0, 1.0) * (h[i + 1] - h[i]));
      }
    }
  }
  auto satisfied = [&](double x) {
    for (const Condition& c : conds) {
      const double g = c.sign * (interpolate_metric(h, *c.series, x) - c.threshold);
      if (g < -1e-9 * std::max(1.0, std::abs(c.threshold))) return false;
    }
    return true;
  };
  for (double x : points) {
    if (satisfied(x)) return std::max(detail::safety_floor(table, scs), x);
  }
  return std::nullopt;
}

/// Every scenario the scheme names, plus all three metrics.
inline AggregateResult derive_application(const MetricTable& table, const WeightScheme& scheme,
                                          const RequirementsOptions& opt = {}) {
  scheme.validate();
  opt.validate();
  std::vector<std::string> S;
  for (const auto& [sc, w] : scheme.scenario_weights) S.push_back(sc);
  const std::vector<std::string> M = {metric::safety, metric::comfort, metric::efficiency};
  const auto scs = detail::contributing_scenarios(table, S, scheme);

  AggregateResult r;
  r.scheme = scheme;
  r.safety_floor = detail::safety_floor(table, scs);
  const CostFunction f(detail::evaluation_table(table, scs, opt), scs, M, scheme, opt);
  const CostFunction::Minimum mn = f.minimize();
  r.cost_argmin = mn.horizon;
  r.cost_at_argmin = mn.cost;
  r.optimal_overall = std::max(r.safety_floor, mn.horizon);
  r.required_overall = required_overall(table, S, M, scheme, opt);
  for (const std::string& sc : scs) {
    r.per_metric.push_back(scenario_required_optimal(table, metric::safety, sc, opt));
    for (const std::string& m : weighted_metrics()) {
      if (indicator(scheme.scenario_weight(sc), scheme.metric_weight(m))) {
        r.per_metric.push_back(scenario_required_optimal(table, m, sc, opt));
      }
    }
  }
  return r;
}

}  // namespace pedhorizon
