#pragma once

// Receding-horizon longitudinal planner. A plan is a sequence of
// accelerations held for dt_plan each; its cost sums, per knot, a Gaussian
// risk field around the predicted pedestrian, squared relative speed error,
// squared normalized acceleration and squared normalized jerk.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/kinematics.hpp"
#include "pedhorizon/predictor.hpp"

namespace pedhorizon {

struct PlannerConfig {
  // Calibrated so SC1-SC3 need roughly 0.8 / 1.0 / 1.2 s of horizon for
  // collision-free crossings.
  double w_risk = 60.0;
  double w_speed = 1.25;
  double w_acc = 0.5;
  double w_jerk = 0.2;
  double sigma_risk = 0.5;  // m
  double dt_plan = 0.2;     // s
  double a_min = -8.0;
  double a_max = 2.0;
  double j_max = 10.0;

  // Lattice for the exact search. Empty means a_min..a_max in lattice_step.
  std::vector<double> accel_levels;
  double lattice_step = 0.5;
  // Exact branch-and-bound is used while the lattice tree has at most this
  // many leaves; longer plans fall back to the parametric search.
  double exhaustive_budget = 20000.0;

  // Parametric search: brake (or accelerate) toward one target, then either
  // hold zero or track the reference speed. -0.88 sits just inside the
  // comfortable band, whose limit -0.89 itself counts as uncomfortable.
  std::vector<double> phase_targets = {-8.0, -6.0, -5.0, -4.0, -3.0, -2.5, -2.0, -1.5,
                                       -1.2, -0.88, -0.6, -0.3, 0.0, 0.5, 1.0, 2.0};
  double tracking_gain = 1.0;  // 1/s
  // Searched plans never exceed v_ref * speed_cap_ratio at a knot; the
  // reference speed acts as the speed limit. Mandatory candidates are exempt.
  double speed_cap_ratio = 1.0;
  // Below this bound on the total risk term the pedestrian is ignored by the search.
  double negligible_risk = 1e-9;

  ActuatorLimits limits() const { return {a_min, a_max, j_max}; }

  void validate() const {
    if (!(w_risk >= 0.0 && w_speed >= 0.0 && w_acc >= 0.0 && w_jerk >= 0.0)) {
      throw ConfigError("planner: weights must be >= 0");
    }
    if (!(sigma_risk > 0.0)) throw ConfigError("planner.sigma_risk: must be positive");
    if (!(dt_plan > 0.0)) throw ConfigError("planner.dt_plan: must be positive");
    limits().validate();
    if (!(lattice_step > 0.0)) throw ConfigError("planner.lattice_step: must be positive");
    if (!(tracking_gain > 0.0)) throw ConfigError("planner.tracking_gain: must be positive");
    if (!(speed_cap_ratio >= 1.0)) throw ConfigError("planner.speed_cap_ratio: must be >= 1");
  }

  std::vector<double> lattice() const {
    if (!accel_levels.empty()) {
      std::vector<double> l = accel_levels;
      std::sort(l.begin(), l.end());
      return l;
    }
    std::vector<double> l;
    const int n = static_cast<int>(std::floor((a_max - a_min) / lattice_step + 1e-9));
    for (int i = 0; i <= n; ++i) l.push_back(a_min + i * lattice_step);
    if (a_max - l.back() > 1e-9) l.push_back(a_max);
    return l;
  }
};

struct PlanKnot {
  double x = 0.0;
  double v = 0.0;
};

struct Plan {
  std::vector<double> accel_sequence;
  std::vector<PlanKnot> states;  // state after each accel_sequence entry
  double total_cost = 0.0;

  bool empty() const { return accel_sequence.empty(); }
};

/// Knots planned for a horizon; horizons shorter than one plan step yield none.
inline int plan_length(double horizon, double dt_plan) {
  if (horizon < dt_plan - 1e-9) return 0;
  return static_cast<int>(std::ceil(horizon / dt_plan - 1e-9));
}

/// exp(-d^2 / (2 sigma^2)) with d the clearance between the ego footprint
/// and the pedestrian disc, floored at zero.
inline double risk_potential(double ego_x, double ped_x, double ped_y, double sigma_risk,
                             const Footprint& f) {
  if (!(sigma_risk > 0.0)) throw DomainError("risk_potential: sigma_risk must be positive");
  const double d =
      std::max(0.0, closest_point_on_ego(ego_x, ped_x, ped_y, f).distance - f.ped_radius);
  return std::exp(-d * d / (2.0 * sigma_risk * sigma_risk));
}

/// Forward integration of an acceleration sequence from `ego`.
inline std::vector<PlanKnot> rollout(const AgentState& ego, std::span<const double> accels,
                                     double dt_plan) {
  std::vector<PlanKnot> out;
  out.reserve(accels.size());
  double x = ego.x;
  double v = ego.v;
  for (double a : accels) {
    const double v_end = v + a * dt_plan;
    if (v_end >= 0.0) {
      x += v * dt_plan + 0.5 * a * dt_plan * dt_plan;
      v = v_end;
    } else {
      x += 0.5 * v * v / -a;
      v = 0.0;
    }
    out.push_back({x, v});
  }
  return out;
}

namespace detail {

/// Predicted pedestrian position per plan knot, if the prediction covers it.
struct KnotObstacle {
  bool present = false;
  double x = 0.0;
  double y = 0.0;
};

inline std::vector<KnotObstacle> align_prediction(const PredictedTrajectory& prediction, int knots,
                                                  double dt_plan) {
  std::vector<KnotObstacle> out(static_cast<std::size_t>(knots));
  std::size_t j = 0;
  for (int k = 1; k <= knots; ++k) {
    const double t = k * dt_plan;
    while (j < prediction.samples.size() && prediction.samples[j].t_offset < t - 1e-9) ++j;
    if (j < prediction.samples.size() && std::abs(prediction.samples[j].t_offset - t) <= 1e-9) {
      out[static_cast<std::size_t>(k - 1)] = {true, prediction.samples[j].x,
                                              prediction.samples[j].y};
    }
  }
  return out;
}

/// Incremental cost evaluator shared by plan_cost and the search.
class CostModel {
 public:
  CostModel(const AgentState& ego, const PredictedTrajectory& prediction, const PlannerConfig& cfg,
            double v_ref, const Footprint& footprint, int knots)
      : ego_(ego),
        cfg_(cfg),
        v_ref_(v_ref),
        footprint_(footprint),
        obstacles_(align_prediction(prediction, knots, cfg.dt_plan)),
        inv_two_sigma_sq_(1.0 / (2.0 * cfg.sigma_risk * cfg.sigma_risk)),
        jerk_scale_(1.0 / (cfg.j_max * cfg.dt_plan)),
        acc_scale_(1.0 / cfg.a_min) {}

  struct Cursor {
    double x = 0.0;
    double v = 0.0;
    double a_prev = 0.0;
    double cost = 0.0;
  };

  Cursor start() const { return {ego_.x, ego_.v, ego_.a, 0.0}; }

  /// Advances one knot (index k, zero based) applying acceleration a.
  Cursor step(const Cursor& c, int k, double a) const {
    const double dt = cfg_.dt_plan;
    Cursor n;
    const double v_end = c.v + a * dt;
    if (v_end >= 0.0) {
      n.x = c.x + c.v * dt + 0.5 * a * dt * dt;
      n.v = v_end;
    } else {
      n.x = c.x + 0.5 * c.v * c.v / -a;
      n.v = 0.0;
    }
    n.a_prev = a;
    double cost = 0.0;
    const KnotObstacle& o = obstacles_[static_cast<std::size_t>(k)];
    if (o.present) {
      const double d = std::max(
          0.0, closest_point_on_ego(n.x, o.x, o.y, footprint_).distance - footprint_.ped_radius);
      cost += cfg_.w_risk * std::exp(-d * d * inv_two_sigma_sq_);
    }
    const double dv = (n.v - v_ref_) / v_ref_;
    const double acc = a * acc_scale_;
    const double jerk = (a - c.a_prev) * jerk_scale_;
    cost += cfg_.w_speed * dv * dv + cfg_.w_acc * acc * acc + cfg_.w_jerk * jerk * jerk;
    n.cost = c.cost + cost;
    return n;
  }

  /// Total cost, or +inf as soon as the running sum reaches `bound`.
  double evaluate(std::span<const double> accels, double bound) const {
    Cursor c = start();
    for (std::size_t k = 0; k < accels.size(); ++k) {
      c = step(c, static_cast<int>(k), accels[k]);
      if (c.cost >= bound) return std::numeric_limits<double>::infinity();
    }
    return c.cost;
  }

  double risk_at(int k, double ego_x) const {
    const KnotObstacle& o = obstacles_[static_cast<std::size_t>(k)];
    if (!o.present) return 0.0;
    const double d = std::max(
        0.0, closest_point_on_ego(ego_x, o.x, o.y, footprint_).distance - footprint_.ped_radius);
    return std::exp(-d * d * inv_two_sigma_sq_);
  }

  /// Upper bound on the summed risk term over every plan: each knot's
  /// pedestrian is measured against the whole stretch of road the ego could
  /// occupy by then (no reverse motion, at most a_max).
  double risk_upper_bound() const {
    double bound = 0.0;
    const double dt = cfg_.dt_plan;
    for (std::size_t k = 0; k < obstacles_.size(); ++k) {
      const KnotObstacle& o = obstacles_[k];
      if (!o.present) continue;
      const double t = static_cast<double>(k + 1) * dt;
      const double reach = ego_.x + ego_.v * t + 0.5 * cfg_.a_max * t * t;
      const double dx = std::max({0.0, ego_.x - o.x, o.x - (reach + footprint_.length)});
      const double dy = std::max(0.0, std::abs(o.y) - 0.5 * footprint_.width);
      const double d = std::max(0.0, std::hypot(dx, dy) - footprint_.ped_radius);
      bound += cfg_.w_risk * std::exp(-d * d * inv_two_sigma_sq_);
    }
    return bound;
  }

  const AgentState& ego() const { return ego_; }
  double v_ref() const { return v_ref_; }

 private:
  AgentState ego_;
  const PlannerConfig& cfg_;
  double v_ref_;
  Footprint footprint_;
  std::vector<KnotObstacle> obstacles_;
  double inv_two_sigma_sq_;
  double jerk_scale_;
  double acc_scale_;
};

}  // namespace detail

/// Cost of `plan` (its accel_sequence, integrated from `ego`) against a
/// prediction. Knots without a prediction sample carry no risk term.
inline double plan_cost(const AgentState& ego, const Plan& plan,
                        const PredictedTrajectory& prediction, const PlannerConfig& cfg,
                        double v_ref, const Footprint& footprint) {
  if (!(v_ref > 0.0)) throw DomainError("plan_cost: v_ref must be positive");
  const int n = static_cast<int>(plan.accel_sequence.size());
  const detail::CostModel model(ego, prediction, cfg, v_ref, footprint, n);
  return model.evaluate(plan.accel_sequence, std::numeric_limits<double>::infinity());
}

/// Peak risk term (w_risk * potential) over the plan's knots.
inline double peak_risk(const AgentState& ego, const Plan& plan,
                        const PredictedTrajectory& prediction, const PlannerConfig& cfg,
                        const Footprint& footprint) {
  const int n = static_cast<int>(plan.accel_sequence.size());
  const detail::CostModel model(ego, prediction, cfg, 1.0, footprint, n);
  const auto knots = rollout(ego, plan.accel_sequence, cfg.dt_plan);
  double peak = 0.0;
  for (int k = 0; k < n; ++k) peak = std::max(peak, cfg.w_risk * model.risk_at(k, knots[k].x));
  return peak;
}

/// Jerk-limited pursuit of a constant target acceleration.
inline std::vector<double> constant_target_profile(double target, const AgentState& ego, int knots,
                                                   const PlannerConfig& cfg) {
  std::vector<double> a(static_cast<std::size_t>(knots));
  double prev = ego.a;
  for (auto& ak : a) {
    ak = clamp_command(target, prev, cfg.dt_plan, cfg.limits());
    prev = ak;
  }
  return a;
}

/// Hold zero, comfortable braking, maximum braking. Any plan returned by
/// optimize_plan costs no more than each of these.
inline std::vector<std::vector<double>> mandatory_candidates(const AgentState& ego, int knots,
                                                             const PlannerConfig& cfg) {
  return {constant_target_profile(0.0, ego, knots, cfg),
          constant_target_profile(-0.89, ego, knots, cfg),
          constant_target_profile(cfg.a_min, ego, knots, cfg)};
}

inline bool is_feasible(const AgentState& ego, std::span<const double> accels,
                        const PlannerConfig& cfg, double tol = 1e-9) {
  double prev = ego.a;
  const double band = cfg.j_max * cfg.dt_plan;
  for (double a : accels) {
    if (a < cfg.a_min - tol || a > cfg.a_max + tol) return false;
    if (std::abs(a - prev) > band + tol) return false;
    prev = a;
  }
  return true;
}

namespace detail {

class PlanSearch {
 public:
  PlanSearch(const CostModel& model, const PlannerConfig& cfg, int knots)
      : model_(model),
        cfg_(cfg),
        knots_(knots),
        v_cap_(model.v_ref() * cfg.speed_cap_ratio + 1e-9) {}

  void offer_unconstrained(const std::vector<double>& accels) {
    const double c = model_.evaluate(accels, best_cost_);
    if (c < best_cost_) {
      best_cost_ = c;
      best_ = accels;
    }
  }

  void offer(const std::vector<double>& accels) {
    const double c = evaluate_capped(accels);
    if (c < best_cost_) {
      best_cost_ = c;
      best_ = accels;
    }
  }

  /// Branch and bound over the lattice; exact for lattice-valued plans.
  void exhaustive(const std::vector<double>& levels) {
    std::vector<double> current(static_cast<std::size_t>(knots_));
    descend(model_.start(), 0, levels, current);
  }

  /// Reference-speed tracking from the current state.
  void tracking() {
    std::vector<double> accels(static_cast<std::size_t>(knots_));
    offer(tracking_profile(model_.start(), 0, accels));
  }

  /// Two-phase profiles: pursue target1 for `switch_at` knots, then hold
  /// zero or track the reference speed.
  void parametric() {
    std::vector<int> switches;
    for (int s = 1; s < knots_; s = std::max(s + 1, static_cast<int>(std::lround(s * 1.3)))) {
      switches.push_back(s);
    }
    switches.push_back(knots_);
    std::vector<double> accels(static_cast<std::size_t>(knots_));
    offer(tracking_profile(model_.start(), 0, accels));
    for (double target : cfg_.phase_targets) {
      for (int sw : switches) {
        for (int mode = 0; mode < 2; ++mode) {
          if (sw == knots_ && mode == 1) continue;
          build_two_phase(target, sw, mode == 1, accels);
          offer(accels);
        }
      }
    }
  }

  /// Coordinate descent: nudges single knots by the given steps, keeping
  /// the sequence inside the actuator and jerk bounds.
  void refine(std::span<const double> steps, int passes) {
    if (best_.empty()) return;
    const double band = cfg_.j_max * cfg_.dt_plan + 1e-12;
    std::vector<double> trial = best_;
    for (int pass = 0; pass < passes; ++pass) {
      bool improved = false;
      for (int k = 0; k < knots_; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double prev = k == 0 ? model_.ego().a : best_[ku - 1];
        for (double step : steps) {
          for (double sign : {-1.0, 1.0}) {
            const double l = best_[ku] + sign * step;
            if (l < cfg_.a_min || l > cfg_.a_max) continue;
            if (std::abs(l - prev) > band) continue;
            if (k + 1 < knots_ && std::abs(best_[ku + 1] - l) > band) continue;
            trial = best_;
            trial[ku] = l;
            const double c = evaluate_capped(trial);
            if (c < best_cost_) {
              best_cost_ = c;
              best_ = trial;
              improved = true;
            }
          }
        }
      }
      if (!improved) break;
    }
  }

  const std::vector<double>& best() const { return best_; }
  double best_cost() const { return best_cost_; }

 private:
  double evaluate_capped(std::span<const double> accels) const {
    CostModel::Cursor c = model_.start();
    for (std::size_t k = 0; k < accels.size(); ++k) {
      c = model_.step(c, static_cast<int>(k), accels[k]);
      if (c.cost >= best_cost_ || c.v > v_cap_) return std::numeric_limits<double>::infinity();
    }
    return c.cost;
  }

  void descend(const CostModel::Cursor& c, int k, const std::vector<double>& levels,
               std::vector<double>& current) {
    if (k == knots_) {
      if (c.cost < best_cost_) {
        best_cost_ = c.cost;
        best_ = current;
      }
      return;
    }
    const double band = cfg_.j_max * cfg_.dt_plan + 1e-12;
    for (double l : levels) {
      if (std::abs(l - c.a_prev) > band) continue;
      const CostModel::Cursor n = model_.step(c, k, l);
      if (n.cost >= best_cost_ || n.v > v_cap_) continue;
      current[static_cast<std::size_t>(k)] = l;
      descend(n, k + 1, levels, current);
    }
  }

  double tracking_target(double v) const {
    return std::min(cfg_.tracking_gain * (model_.v_ref() - v), (v_cap_ - v) / cfg_.dt_plan);
  }

  const std::vector<double>& tracking_profile(CostModel::Cursor c, int from,
                                              std::vector<double>& accels) const {
    for (int k = from; k < knots_; ++k) {
      const double a = clamp_command(tracking_target(c.v), c.a_prev, cfg_.dt_plan, cfg_.limits());
      accels[static_cast<std::size_t>(k)] = a;
      c = model_.step(c, k, a);
    }
    return accels;
  }

  void build_two_phase(double target, int switch_at, bool track_after,
                       std::vector<double>& accels) const {
    CostModel::Cursor c = model_.start();
    for (int k = 0; k < knots_; ++k) {
      double goal = target;
      if (k >= switch_at) goal = track_after ? tracking_target(c.v) : 0.0;
      const double a = clamp_command(goal, c.a_prev, cfg_.dt_plan, cfg_.limits());
      accels[static_cast<std::size_t>(k)] = a;
      c = model_.step(c, k, a);
    }
  }

  const CostModel& model_;
  const PlannerConfig& cfg_;
  int knots_;
  double v_cap_;
  std::vector<double> best_;
  double best_cost_ = std::numeric_limits<double>::infinity();
};

inline double lattice_leaves(std::size_t levels, const PlannerConfig& cfg, int knots) {
  const double branching = std::min(
      static_cast<double>(levels),
      2.0 * cfg.j_max * cfg.dt_plan / std::max(cfg.lattice_step, 1e-9) + 1.0);
  return std::pow(std::max(branching, 1.0), knots);
}

}  // namespace detail

/// Minimizes plan_cost over jerk-feasible acceleration sequences of
/// plan_length(horizon) knots, where the horizon is the prediction's.
/// Exact over the lattice for short plans; for longer plans a parametric
/// search followed by coordinate descent, or plain reference tracking when
/// no reachable position can pick up a meaningful risk term. The result never costs
/// more than any mandatory candidate.
inline Plan optimize_plan(const AgentState& ego, const PredictedTrajectory& prediction,
                          const PlannerConfig& cfg, double v_ref, const Footprint& footprint) {
  if (!(v_ref > 0.0)) throw DomainError("optimize_plan: v_ref must be positive");
  const int knots = plan_length(prediction.horizon, cfg.dt_plan);
  Plan plan;
  if (knots == 0) return plan;

  const detail::CostModel model(ego, prediction, cfg, v_ref, footprint, knots);
  detail::PlanSearch search(model, cfg, knots);
  for (const auto& c : mandatory_candidates(ego, knots, cfg)) search.offer_unconstrained(c);

  const std::vector<double> levels = cfg.lattice();
  if (detail::lattice_leaves(levels.size(), cfg, knots) <= cfg.exhaustive_budget) {
    search.exhaustive(levels);
  } else if (model.risk_upper_bound() <= cfg.negligible_risk) {
    // risk cannot influence the choice: the tracking profile and a local polish suffice
    search.tracking();
    static constexpr double kPolishSteps[] = {0.1};
    search.refine(kPolishSteps, 1);
  } else {
    search.parametric();
    static constexpr double kRefineSteps[] = {0.25, 0.1};
    search.refine(kRefineSteps, 2);
  }

  plan.accel_sequence = search.best();
  plan.states = rollout(ego, plan.accel_sequence, cfg.dt_plan);
  plan.total_cost = model.evaluate(plan.accel_sequence, std::numeric_limits<double>::infinity());
  return plan;
}

}  // namespace pedhorizon
