#pragma once

// Plain re-statement of the plan cost, kept independent of the incremental
// evaluator in the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include "pedhorizon/planner.hpp"

namespace plan_oracle {

using namespace pedhorizon;

struct NaiveTerms {
  double risk = 0.0;  // unweighted sum of potentials
  double total = 0.0;
};

inline NaiveTerms naive_cost(const AgentState& ego, const std::vector<double>& accels,
                             const PredictedTrajectory& pred, const PlannerConfig& cfg, double v_ref,
                             const Footprint& fp) {
  NaiveTerms out;
  double x = ego.x, v = ego.v, a_prev = ego.a;
  const double dt = cfg.dt_plan;
  for (std::size_t k = 0; k < accels.size(); ++k) {
    const double a = accels[k];
    double v_next = v + a * dt;
    double x_next = x + v * dt + 0.5 * a * dt * dt;
    if (v_next < 0.0) {
      const double t_stop = v / -a;
      x_next = x + v * t_stop + 0.5 * a * t_stop * t_stop;
      v_next = 0.0;
    }
    x = x_next;
    v = v_next;
    const double t = (k + 1) * dt;
    for (const auto& s : pred.samples) {
      if (std::abs(s.t_offset - t) > 1e-9) continue;
      const double dx = std::max({0.0, x - s.x, s.x - (x + fp.length)});
      const double dy = std::max(0.0, std::abs(s.y) - fp.width / 2);
      const double d = std::max(0.0, std::sqrt(dx * dx + dy * dy) - fp.ped_radius);
      const double r = std::exp(-d * d / (2 * cfg.sigma_risk * cfg.sigma_risk));
      out.risk += r;
      out.total += cfg.w_risk * r;
    }
    const double e_v = (v - v_ref) / v_ref;
    const double e_a = a / cfg.a_min;
    const double e_j = (a - a_prev) / (cfg.j_max * dt);
    out.total += cfg.w_speed * e_v * e_v + cfg.w_acc * e_a * e_a + cfg.w_jerk * e_j * e_j;
    a_prev = a;
  }
  return out;
}

/// 5-level lattice loose enough that all 125 three-knot plans are feasible.
inline PlannerConfig micro_config() {
  PlannerConfig cfg;
  cfg.accel_levels = {-8.0, -4.0, -0.89, 0.0, 2.0};
  cfg.j_max = 1000.0;
  cfg.speed_cap_ratio = 10.0;
  return cfg;
}

/// Cheapest of all 125 three-knot plans over the micro lattice.
inline double brute_force_min(const AgentState& ego, const PredictedTrajectory& pred, const PlannerConfig& cfg,
                              double v_ref, const Footprint& fp) {
  const auto& L = cfg.accel_levels;
  double best = 1e300;
  for (double a0 : L)
    for (double a1 : L)
      for (double a2 : L) best = std::min(best, naive_cost(ego, {a0, a1, a2}, pred, cfg, v_ref, fp).total);
  return best;
}

}  // namespace plan_oracle
