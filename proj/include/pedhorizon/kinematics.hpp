#pragma once

#include <algorithm>
#include <cmath>

#include "pedhorizon/error.hpp"
#include "pedhorizon/scenario.hpp"

namespace pedhorizon {

/// Longitudinal ego or crossing-pedestrian state. For the ego, `a` is the
/// actuator acceleration applied over the last step; jerk is limited
/// relative to it.
struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double a = 0.0;
  double t = 0.0;
};

struct ActuatorLimits {
  double a_min = -8.0;  // m/s^2
  double a_max = 2.0;   // m/s^2
  double j_max = 10.0;  // m/s^3

  void validate() const {
    if (!(a_min < 0.0 && a_max > 0.0)) throw ConfigError("simulation: need a_min < 0 < a_max");
    if (!(j_max > 0.0)) throw ConfigError("simulation.j_max: must be positive");
  }
};

struct EgoStep {
  AgentState state;
  double effective_accel = 0.0;  // (v' - v) / dt as felt by an occupant
};

/// Clamps a command to the actuator box and the jerk band around `previous`.
inline double clamp_command(double a_cmd, double previous, double dt, const ActuatorLimits& lim) {
  const double a = std::clamp(a_cmd, lim.a_min, lim.a_max);
  const double band = lim.j_max * dt;
  return std::clamp(a, std::max(lim.a_min, previous - band), std::min(lim.a_max, previous + band));
}

/// Exact constant-acceleration update with no reverse motion. A vehicle at
/// rest under a braking command stays put.
inline EgoStep step_ego_detailed(const AgentState& s, double a_cmd, double dt,
                                 const ActuatorLimits& lim) {
  if (!(dt > 0.0)) throw DomainError("step_ego: dt must be positive");
  const double a = clamp_command(a_cmd, s.a, dt, lim);
  EgoStep out;
  out.state = s;
  out.state.a = a;
  out.state.t = s.t + dt;
  const double v_end = s.v + a * dt;
  if (v_end >= 0.0) {
    out.state.v = v_end;
    out.state.x = s.x + s.v * dt + 0.5 * a * dt * dt;
    out.effective_accel = a;
  } else {
    // stops inside the step after v / |a| seconds
    out.state.v = 0.0;
    out.state.x = s.x + 0.5 * s.v * s.v / -a;
    out.effective_accel = -s.v / dt;
  }
  return out;
}

inline AgentState step_ego(const AgentState& s, double a_cmd, double dt, const ActuatorLimits& lim) {
  return step_ego_detailed(s, a_cmd, dt, lim).state;
}

/// Constant-speed crossing in +y; the pedestrian never reacts.
inline AgentState step_pedestrian(const AgentState& p, double dt) {
  if (!(dt > 0.0)) throw DomainError("step_pedestrian: dt must be positive");
  if (!(p.v > 0.0)) throw DomainError("step_pedestrian: pedestrian speed must be positive");
  AgentState out = p;
  out.y = p.y + p.v * dt;
  out.t = p.t + dt;
  return out;
}

struct Footprint {
  double length = 4.5;
  double width = 1.8;
  double ped_radius = 0.3;

  static Footprint from(const ScenarioGeometry& g) {
    return {g.ego_length, g.ego_width, g.pedestrian_radius};
  }
};

/// Closest point of the axis-aligned ego rectangle [x, x+length] x
/// [-width/2, width/2] to the point (px, py).
struct ClosestPoint {
  double x = 0.0;
  double y = 0.0;
  double distance = 0.0;
};

inline ClosestPoint closest_point_on_ego(double ego_x, double px, double py, const Footprint& f) {
  ClosestPoint c;
  c.x = std::clamp(px, ego_x, ego_x + f.length);
  c.y = std::clamp(py, -0.5 * f.width, 0.5 * f.width);
  c.distance = std::hypot(px - c.x, py - c.y);
  return c;
}

/// Circle-rectangle overlap (touching counts).
inline bool check_collision(const AgentState& ego, const AgentState& ped, const ScenarioGeometry& g) {
  const Footprint f = Footprint::from(g);
  return closest_point_on_ego(ego.x, ped.x, ped.y, f).distance <= f.ped_radius;
}

}  // namespace pedhorizon
