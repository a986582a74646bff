#pragma once

#include <cmath>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/kinematics.hpp"

namespace pedhorizon {

struct PredictedPoint {
  double t_offset = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct PredictedTrajectory {
  std::vector<PredictedPoint> samples;
  double horizon = 0.0;
  double dt_pred = 0.2;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

/// Number of whole sampling steps that fit in [0, horizon].
inline int steps_within(double horizon, double dt) {
  return static_cast<int>(std::floor(horizon / dt + 1e-9));
}

/// Ground-truth future of a constant-speed crossing pedestrian at
/// dt_pred, 2 dt_pred, ... up to the horizon.
inline PredictedTrajectory oracle_predict(const AgentState& ped, double horizon, double dt_pred) {
  if (!(horizon >= 0.0)) throw DomainError("oracle_predict: horizon must be >= 0");
  if (!(dt_pred > 0.0)) throw DomainError("oracle_predict: dt_pred must be positive");
  PredictedTrajectory p;
  p.horizon = horizon;
  p.dt_pred = dt_pred;
  const int n = steps_within(horizon, dt_pred);
  p.samples.reserve(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double t = k * dt_pred;
    p.samples.push_back({t, ped.x, ped.y + ped.v * t});
  }
  return p;
}

}  // namespace pedhorizon
