#pragma once

// Episode runner: integrates ego and pedestrian at dt_sim, replans on a
// fixed (or horizon-dependent) schedule and records what the metrics need.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/kinematics.hpp"
#include "pedhorizon/planner.hpp"
#include "pedhorizon/predictor.hpp"
#include "pedhorizon/scenario.hpp"

namespace pedhorizon {

/// Piecewise-constant map from horizon to achievable replan frequency: the
/// entry with the largest horizon <= h applies. Horizons below the first
/// entry run at the configured rate.
struct LatencyModel {
  std::vector<std::pair<double, double>> table;  // (horizon s, frequency Hz)

  bool enabled() const { return !table.empty(); }

  std::optional<double> frequency(double horizon) const {
    std::optional<double> f;
    for (const auto& [h, hz] : table) {
      if (h <= horizon + 1e-9) f = hz;
    }
    return f;
  }

  void validate() const {
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (!(table[i].second > 0.0)) {
        throw ConfigError("simulation.latency_model: frequencies must be positive");
      }
      if (i > 0 && !(table[i].first > table[i - 1].first)) {
        throw ConfigError("simulation.latency_model: horizons must be strictly ascending");
      }
    }
  }
};

struct SimConfig {
  double dt_sim = 0.05;
  double replan_period = 0.05;
  double max_episode_time = 120.0;
  ActuatorLimits limits;
  LatencyModel latency_model;
  // Re-checks candidate dominance after every replan; throws on violation.
  bool verify_dominance = false;

  void validate() const {
    if (!(dt_sim > 0.0)) throw ConfigError("simulation.dt_sim: must be positive");
    if (!(replan_period >= dt_sim - 1e-12)) {
      throw ConfigError("simulation.replan_period: must be >= dt_sim");
    }
    if (!(max_episode_time > 0.0)) throw ConfigError("simulation.max_episode_time: must be positive");
    limits.validate();
    latency_model.validate();
  }

  /// Replan period in whole integration steps for the given horizon. A
  /// throttled planner also delivers each plan one period after the state it
  /// was computed from.
  int replan_steps(double horizon) const {
    double period = replan_period;
    if (auto f = latency_model.frequency(horizon)) period = std::max(period, 1.0 / *f);
    return std::max(1, static_cast<int>(std::lround(period / dt_sim)));
  }

  bool throttled(double horizon) const { return latency_model.frequency(horizon).has_value(); }
};

struct TraceSample {
  double t = 0.0;
  double a = 0.0;          // effective acceleration over the step
  double a_applied = 0.0;  // actuator command after limits
  double v = 0.0;
};

struct RunResult {
  std::string scenario;
  double horizon = 0.0;
  int sample_index = -1;  // -1 for pedestrian-free runs
  bool collided = false;
  std::optional<double> collision_speed;
  std::optional<double> travel_time;
  bool valid = true;  // false when max_episode_time was hit
  std::vector<TraceSample> accel_trace;
  double min_planner_frequency = 0.0;
  double collision_contact_y = 0.0;  // lateral contact coordinate on the ego, if collided
  double collision_contact_x = 0.0;  // ... and longitudinal, relative to the rear axle
  int replans = 0;
};

/// Per-episode planner hook; the default uses optimize_plan.
struct EpisodeInputs {
  const ScenarioCategory& sc;
  const ScenarioGeometry& geom;
  std::optional<PedestrianSample> pedestrian;
  double horizon = 0.0;
  const PlannerConfig& planner;
  const SimConfig& sim;
};

namespace detail {

inline double plan_command(const Plan& plan, double since_snapshot, double dt_plan) {
  if (plan.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::floor(since_snapshot / dt_plan + 1e-9));
  if (idx >= plan.accel_sequence.size()) return 0.0;
  return plan.accel_sequence[idx];
}

inline void check_dominance(const AgentState& ego, const Plan& plan,
                            const PredictedTrajectory& prediction, const PlannerConfig& cfg,
                            double v_ref, const Footprint& fp) {
  const int knots = static_cast<int>(plan.accel_sequence.size());
  if (!is_feasible(ego, plan.accel_sequence, cfg)) {
    throw Error("planner returned an infeasible plan");
  }
  for (const auto& c : mandatory_candidates(ego, knots, cfg)) {
    Plan cand;
    cand.accel_sequence = c;
    const double cc = plan_cost(ego, cand, prediction, cfg, v_ref, fp);
    if (plan.total_cost > cc * (1.0 + 1e-12) + 1e-12) {
      throw Error("planner result is dominated by a mandatory candidate");
    }
  }
}

}  // namespace detail

/// Runs one episode. With no pedestrian the result is the baseline run.
inline RunResult run_episode(const EpisodeInputs& in) {
  if (!(in.horizon >= 0.0)) throw DomainError("run_episode: horizon must be >= 0");
  const SimConfig& sim = in.sim;
  const double dt = sim.dt_sim;
  const Footprint fp = Footprint::from(in.geom);
  const double v_ref = in.sc.ego_ref_speed;

  RunResult r;
  r.scenario = in.sc.id;
  r.horizon = in.horizon;
  r.sample_index = in.pedestrian ? in.pedestrian->sample_index : -1;

  AgentState ego{in.geom.ego_start_x, 0.0, v_ref, 0.0, 0.0};
  AgentState ped0{in.geom.crossing_x, -in.geom.lateral_offset,
                  in.pedestrian ? in.pedestrian->speed : 0.0, 0.0, 0.0};
  if (in.pedestrian && !(ped0.v > 0.0)) throw DomainError("run_episode: pedestrian speed must be positive");

  const int period_steps = sim.replan_steps(in.horizon);
  const bool delayed = sim.throttled(in.horizon);
  r.min_planner_frequency = 1.0 / (period_steps * dt);

  auto ped_at = [&](double t) {
    AgentState p = ped0;
    p.y = ped0.y + ped0.v * t;
    p.t = t;
    return p;
  };
  auto make_plan = [&](const AgentState& e, double t) {
    PredictedTrajectory pred;
    pred.horizon = in.horizon;
    pred.dt_pred = in.planner.dt_plan;
    if (in.pedestrian) pred = oracle_predict(ped_at(t), in.horizon, in.planner.dt_plan);
    Plan p = optimize_plan(e, pred, in.planner, v_ref, fp);
    if (sim.verify_dominance) detail::check_dominance(e, p, pred, in.planner, v_ref, fp);
    ++r.replans;
    return p;
  };

  Plan active;
  double active_snapshot = 0.0;
  // throttled planner: plan computed from the snapshot at step i goes live at step i + period
  Plan pending;
  double pending_snapshot = 0.0;
  bool has_pending = false;

  auto record_collision = [&](const AgentState& e, const AgentState& p) {
    r.collided = true;
    r.collision_speed = e.v;
    const ClosestPoint c = closest_point_on_ego(e.x, p.x, p.y, fp);
    r.collision_contact_x = c.x - e.x;
    r.collision_contact_y = c.y;
  };

  if (in.pedestrian && check_collision(ego, ped_at(0.0), in.geom)) {
    record_collision(ego, ped_at(0.0));
    return r;
  }

  const long max_steps = static_cast<long>(std::ceil(sim.max_episode_time / dt - 1e-9));
  r.accel_trace.reserve(static_cast<std::size_t>(std::min(max_steps, 4000L)));
  for (long step = 0; step < max_steps; ++step) {
    const double t = step * dt;
    if (step % period_steps == 0) {
      if (delayed) {
        if (has_pending) {
          active = std::move(pending);
          active_snapshot = pending_snapshot;
        }
        pending = make_plan(ego, t);
        pending_snapshot = t;
        has_pending = true;
      } else {
        active = make_plan(ego, t);
        active_snapshot = t;
      }
    }
    const double cmd = detail::plan_command(active, t - active_snapshot, in.planner.dt_plan);
    const EgoStep s = step_ego_detailed(ego, cmd, dt, sim.limits);
    const AgentState prev = ego;
    ego = s.state;
    ego.t = (step + 1) * dt;
    r.accel_trace.push_back({ego.t, s.effective_accel, ego.a, ego.v});

    if (in.pedestrian) {
      const AgentState p = ped_at(ego.t);
      if (check_collision(ego, p, in.geom)) {
        record_collision(ego, p);
        return r;
      }
    }
    if (ego.x >= in.geom.route_length) {
      // interpolate the crossing instant inside the step
      const double dx = ego.x - prev.x;
      const double frac = dx > 0.0 ? (in.geom.route_length - prev.x) / dx : 1.0;
      r.travel_time = t + std::clamp(frac, 0.0, 1.0) * dt;
      return r;
    }
  }
  r.valid = false;
  return r;
}

inline RunResult run_episode(const ScenarioCategory& sc, const ScenarioGeometry& geom,
                             const std::optional<PedestrianSample>& ped, double horizon,
                             const PlannerConfig& planner, const SimConfig& sim) {
  return run_episode(EpisodeInputs{sc, geom, ped, horizon, planner, sim});
}

/// Pedestrian-free travel time over the route.
inline double baseline_travel_time(const ScenarioCategory& sc, const ScenarioGeometry& geom,
                                   const PlannerConfig& planner, const SimConfig& sim) {
  const RunResult r = run_episode(sc, geom, std::nullopt, 0.0, planner, sim);
  if (!r.valid || !r.travel_time) throw Error("baseline run for " + sc.id + " did not finish");
  return *r.travel_time;
}

}  // namespace pedhorizon
