#pragma once

// Brute-force reference for the requirements stage: dense 0.001 s grid,
// plain loops, no shared code with the library beyond the input types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pedhorizon/metrics.hpp"
#include "pedhorizon/requirements.hpp"

namespace oracle {

using pedhorizon::MetricTable;
using pedhorizon::WeightScheme;
namespace metric = pedhorizon::metric;

inline double lerp_at(const std::vector<double>& k, const std::vector<double>& v, double h) {
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    if (h >= k[i] && h <= k[i + 1]) {
      if (h == k[i]) return v[i];
      if (h == k[i + 1]) return v[i + 1];
      return v[i] + (v[i + 1] - v[i]) * (h - k[i]) / (k[i + 1] - k[i]);
    }
  }
  return k.size() == 1 && h == k[0] ? v[0] : std::numeric_limits<double>::quiet_NaN();
}

struct Grid {
  std::vector<double> h;
  explicit Grid(const std::vector<double>& knots) {
    const long lo = std::lround(knots.front() * 1000.0), hi = std::lround(knots.back() * 1000.0);
    for (long i = lo; i <= hi; ++i) h.push_back(static_cast<double>(i) / 1000.0);
  }
};

struct Result {
  std::optional<double> required;
  double optimal = 0.0;
  double argmin = 0.0;
  double min_cost = 0.0;
};

/// Every series of a table evaluated once at every grid point.
class SampledTable {
 public:
  explicit SampledTable(const MetricTable& t) : grid_(t.horizons()) {
    for (const std::string& m : {metric::safety, metric::comfort, metric::efficiency,
                                 metric::highly_uncomfortable, metric::delay}) {
      for (const std::string& sc : t.scenarios()) {
        if (!t.has(m, sc)) continue;
        auto& out = v_[m][sc];
        for (double h : grid_.h) out.push_back(lerp_at(t.horizons(), t.series(m, sc), h));
      }
    }
  }
  const std::vector<double>& h() const { return grid_.h; }
  const std::vector<double>& at(const std::string& m, const std::string& sc) const { return v_.at(m).at(sc); }

 private:
  Grid grid_;
  std::map<std::string, std::map<std::string, std::vector<double>>> v_;
};

class Evaluator {
 public:
  /// With `safe_only`, every search runs on the grid points at or beyond
  /// the safety floor, and efficiency is re-measured from the delays there.
  Evaluator(const SampledTable& t, const WeightScheme& w, double fraction = 0.85, bool safe_only = false)
      : w_(w), fraction_(fraction) {
    for (const auto& [sc, ws] : w.scenario_weights) {
      if (ws > 0.0) scs_.push_back(sc);
    }
    for (const std::string& m : {metric::comfort, metric::efficiency}) {
      if (w.metric_weight(m) > 0.0) ms_.push_back(m);
    }
    floor_ = t.h().front();
    for (const auto& sc : scs_) {
      const auto& v = t.at(metric::safety, sc);
      std::size_t best = 0;
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
      }
      floor_ = std::max(floor_, t.h()[best]);
    }
    std::size_t lo = 0;
    if (safe_only) {
      while (t.h()[lo] < floor_) ++lo;
    }
    h_.assign(t.h().begin() + static_cast<long>(lo), t.h().end());
    for (const auto& sc : scs_) {
      for (const std::string& m : {metric::comfort, metric::efficiency, metric::highly_uncomfortable}) {
        const auto& v = t.at(m, sc);
        v_[m][sc].assign(v.begin() + static_cast<long>(lo), v.end());
      }
      if (safe_only) {
        const auto& d = t.at(metric::delay, sc);
        const double worst = *std::max_element(d.begin() + static_cast<long>(lo), d.end());
        auto& e = v_[metric::efficiency][sc];
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = worst - d[lo + i];
      }
    }
  }

  // index of the shortest grid horizon maximising (or minimising) a series
  std::size_t arg_best(const std::string& m, const std::string& sc, bool maximise) const {
    const auto& v = v_.at(m).at(sc);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (maximise ? v[i] > v[best] : v[i] < v[best]) best = i;
    }
    return best;
  }

  double safety_floor() const { return floor_; }

  Result run() const {
    Result r;
    const std::size_t n = h_.size();
    std::vector<double> costs(n, 0.0);
    for (const auto& m : ms_) {
      // pooled normalisation over the scenarios that count
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& sc : scs_) {
        for (double x : v_.at(m).at(sc)) {
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
      auto norm = [&](double x) { return hi > lo ? 100.0 * (x - lo) / (hi - lo) : 100.0; };
      for (const auto& sc : scs_) {
        const auto& v = v_.at(m).at(sc);
        const double target = norm(v[arg_best(m, sc, true)]);
        const double ww = w_.scenario_weight(sc) * w_.metric_weight(m);
        for (std::size_t i = 0; i < n; ++i) {
          const double d = norm(v[i]) - target;
          costs[i] += ww * d * d;
        }
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (costs[i] < costs[best]) best = i;
    }
    r.argmin = h_[best];
    r.min_cost = costs[best];
    r.optimal = std::max(floor_, r.argmin);

    struct Cond {
      const std::vector<double>* v;
      double threshold;
    };
    std::vector<Cond> conds;
    for (const auto& m : ms_) {
      for (const auto& sc : scs_) {
        const auto& v = v_.at(m).at(sc);
        if (m == metric::comfort) {
          conds.push_back({&v, v[arg_best(metric::highly_uncomfortable, sc, false)]});
        } else {
          conds.push_back({&v, fraction_ * v[arg_best(m, sc, true)]});
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool ok = true;
      for (const auto& c : conds) {
        if ((*c.v)[i] < c.threshold - 1e-9 * std::max(1.0, std::abs(c.threshold))) {
          ok = false;
          break;
        }
      }
      if (ok) {
        r.required = std::max(floor_, h_[i]);
        break;
      }
    }
    return r;
  }

 private:
  const WeightScheme& w_;
  double fraction_;
  double floor_ = 0.0;
  std::vector<std::string> scs_;
  std::vector<std::string> ms_;
  std::vector<double> h_;
  std::map<std::string, std::map<std::string, std::vector<double>>> v_;
};

/// Synthetic table over the given horizons for SC1..SC3 with every series
/// the requirements stage reads.
inline MetricTable random_table(std::mt19937_64& rng, const std::vector<double>& horizons) {
  MetricTable t(horizons);
  std::uniform_real_distribution<double> pct(0.0, 100.0), delay(0.0, 15.0), u(0.0, 1.0);
  const std::size_t n = horizons.size();
  for (const std::string sc : {"SC1", "SC2", "SC3"}) {
    // safety: rises to 100 at a random knot, occasionally never does
    std::vector<double> safety(n);
    const std::size_t reach = static_cast<std::size_t>(u(rng) * static_cast<double>(n));
    double level = pct(rng) * 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      level = std::min(100.0, level + pct(rng) * 0.2);
      safety[i] = i >= reach ? 100.0 : level;
    }
    if (u(rng) < 0.1) safety[n - 1] = 99.0;
    std::vector<double> comfort(n), hu(n), unc(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      comfort[i] = pct(rng);
      hu[i] = (100.0 - comfort[i]) * u(rng);
      unc[i] = 100.0 - comfort[i] - hu[i];
      d[i] = delay(rng);
    }
    t.set(metric::safety, sc, safety);
    t.set(metric::comfort, sc, comfort);
    t.set(metric::uncomfortable, sc, unc);
    t.set(metric::highly_uncomfortable, sc, hu);
    t.set(metric::delay, sc, d);
    t.set(metric::efficiency, sc, pedhorizon::efficiency_from_delays(d));
  }
  return t;
}

/// Like random_table, but with the shapes sweeps actually produce: safety
/// saturating, comfort drifting upward, a delay hump followed by a valley.
/// These mostly admit a required horizon, which the noisy tables rarely do.
inline MetricTable smooth_table(std::mt19937_64& rng, const std::vector<double>& horizons) {
  MetricTable t(horizons);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = horizons.size();
  for (const std::string sc : {"SC1", "SC2", "SC3"}) {
    const double h_safe = 0.4 + 2.0 * u(rng), c0 = 30.0 + 40.0 * u(rng), rise = 20.0 * u(rng);
    const double peak_h = 0.5 + 2.5 * u(rng), peak = 5.0 + 20.0 * u(rng), valley = 5.0 + 10.0 * u(rng);
    std::vector<double> safety(n), comfort(n), hu(n), unc(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = horizons[i];
      safety[i] = h >= h_safe ? 100.0 : 100.0 * h / h_safe * (0.5 + 0.5 * u(rng));
      comfort[i] = std::min(100.0, c0 + rise * h / horizons.back() * 5.0 + 3.0 * (u(rng) - 0.5));
      hu[i] = (100.0 - comfort[i]) * (0.2 + 0.1 * u(rng));
      unc[i] = 100.0 - comfort[i] - hu[i];
      d[i] = h <= peak_h ? peak * h / peak_h
                         : peak * std::exp(-(h - peak_h) / 3.0) + 0.3 * std::pow(std::max(0.0, h - valley), 2);
      d[i] += 0.5 * u(rng);
    }
    t.set(metric::safety, sc, safety);
    t.set(metric::comfort, sc, comfort);
    t.set(metric::uncomfortable, sc, unc);
    t.set(metric::highly_uncomfortable, sc, hu);
    t.set(metric::delay, sc, d);
    t.set(metric::efficiency, sc, pedhorizon::efficiency_from_delays(d));
  }
  return t;
}

inline WeightScheme random_scheme(std::mt19937_64& rng, const std::string& name) {
  std::uniform_real_distribution<double> w(0.05, 2.0), u(0.0, 1.0);
  while (true) {
    WeightScheme s;
    s.name = name;
    for (const std::string sc : {"SC1", "SC2", "SC3"}) s.scenario_weights[sc] = u(rng) < 0.3 ? 0.0 : w(rng);
    for (const std::string& m : {metric::comfort, metric::efficiency}) {
      s.metric_weights[m] = u(rng) < 0.25 ? 0.0 : w(rng);
    }
    try {
      s.validate();
      return s;
    } catch (const pedhorizon::ConfigError&) {
    }
  }
}

}  // namespace oracle
