#pragma once

// Crossing-pedestrian scenario construction: ego speed categories, sampled
// walking speeds, a layout that forces a mid-front collision at the nominal
// pedestrian speed, and the P1/P2/P3 speed grouping.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pedhorizon/error.hpp"
#include "pedhorizon/random.hpp"

namespace pedhorizon {

inline constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }

struct ScenarioCategory {
  std::string id;
  double ego_ref_speed = 0.0;  // m/s
};

/// Default categories: 30, 40 and 50 km/h.
inline std::vector<ScenarioCategory> default_categories() {
  return {{"SC1", kmh_to_mps(30.0)},
          {"SC2", kmh_to_mps(40.0)},
          {"SC3", kmh_to_mps(50.0)}};
}

/// Dimensions and layout. The ego drives along y = 0 in +x; the pedestrian
/// starts at (crossing_x, -lateral_offset) and walks in +y. Ego positions
/// refer to the rear axle, the front bumper sits ego_length ahead of it.
struct ScenarioGeometry {
  double lateral_offset = 4.0;
  double crossing_x = 0.0;
  double ego_start_x = 0.0;
  double route_length = 150.0;
  double ego_length = 4.5;
  double ego_width = 1.8;
  double pedestrian_radius = 0.3;

  /// Half-width of the band swept by the ego, inflated by the pedestrian disc.
  double corridor_half_width() const { return 0.5 * ego_width + pedestrian_radius; }

  void validate() const {
    if (!(ego_length > 0.0 && ego_width > 0.0 && pedestrian_radius > 0.0 &&
          route_length > 0.0 && lateral_offset > 0.0)) {
      throw ConfigError("geometry: all dimensions must be positive");
    }
    if (!(lateral_offset > corridor_half_width())) {
      throw ConfigError(
          "geometry.lateral_offset: pedestrian must start outside the ego corridor");
    }
    if (!(ego_start_x < crossing_x && crossing_x < route_length)) {
      throw ConfigError("geometry: require ego_start_x < crossing_x < route_length");
    }
  }
};

enum class SpeedGroup { P1, P2, P3 };

inline const char* to_string(SpeedGroup g) {
  switch (g) {
    case SpeedGroup::P1: return "P1";
    case SpeedGroup::P2: return "P2";
    case SpeedGroup::P3: return "P3";
  }
  return "?";
}

inline SpeedGroup parse_speed_group(const std::string& s) {
  if (s == "P1") return SpeedGroup::P1;
  if (s == "P2") return SpeedGroup::P2;
  if (s == "P3") return SpeedGroup::P3;
  throw FormatError("unknown pedestrian group '" + s + "'");
}

struct PedestrianSample {
  double speed = 0.0;  // m/s
  int sample_index = 0;
  std::uint64_t seed = 0;
};

struct PedestrianSpeedModel {
  double mean = 1.34;
  double std = 0.37;
  double min_speed = 0.2;  // draws at or below are redrawn
  int max_consecutive_rejections = 1000;
};

/// Draws n walking speeds from Normal(mean, std), redrawing anything at or
/// below min_speed. The list depends only on (n, model, seed).
inline std::vector<PedestrianSample> sample_pedestrian_speeds(
    int n, const PedestrianSpeedModel& model, std::uint64_t seed) {
  if (n <= 0) throw ConfigError("pedestrians.count: must be positive");
  if (!(model.std >= 0.0)) throw ConfigError("pedestrians.std: must be non-negative");

  NormalSampler normal(seed);
  std::vector<PedestrianSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int rejections = 0;
    double v = 0.0;
    while (true) {
      v = model.mean + model.std * normal();
      if (v > model.min_speed) break;
      if (++rejections >= model.max_consecutive_rejections) {
        throw ConfigError(
            "pedestrians: speed distribution yields no admissible speed (mean/std invalid)");
      }
    }
    out.push_back({v, i, seed});
  }
  return out;
}

inline std::vector<PedestrianSample> sample_pedestrian_speeds(int n, double mean, double std,
                                                              std::uint64_t seed) {
  PedestrianSpeedModel model;
  model.mean = mean;
  model.std = std;
  return sample_pedestrian_speeds(n, model, seed);
}

/// Places the crossing so that a non-reacting ego's front bumper reaches
/// crossing_x exactly when a pedestrian walking at nominal_ped_speed reaches
/// the ego centerline.
inline ScenarioGeometry build_geometry(const ScenarioCategory& sc, double nominal_ped_speed,
                                       ScenarioGeometry base = {}) {
  if (!(nominal_ped_speed > 0.0)) throw ConfigError("nominal pedestrian speed must be positive");
  if (!(sc.ego_ref_speed > 0.0)) throw ConfigError("scenario " + sc.id + ": speed must be positive");
  const double time_to_centerline = base.lateral_offset / nominal_ped_speed;
  base.crossing_x = base.ego_start_x + base.ego_length + sc.ego_ref_speed * time_to_centerline;
  base.validate();
  return base;
}

/// Distance from the front bumper's start position to the crossing line.
inline double front_bumper_gap(const ScenarioGeometry& g) {
  return g.crossing_x - g.ego_start_x - g.ego_length;
}

struct OccupancyWindows {
  double ped_enter = 0.0;   // pedestrian disc enters the ego corridor
  double ped_exit = 0.0;    // ... and leaves it
  double ego_front = 0.0;   // inflated ego body reaches crossing_x
  double ego_rear = 0.0;    // ... and clears it
};

inline OccupancyWindows occupancy_windows(const ScenarioCategory& sc, const ScenarioGeometry& g,
                                          double ped_speed) {
  const double half = g.corridor_half_width();
  const double r = g.pedestrian_radius;
  OccupancyWindows w;
  w.ped_enter = (g.lateral_offset - half) / ped_speed;
  w.ped_exit = (g.lateral_offset + half) / ped_speed;
  w.ego_front = (g.crossing_x - r - g.ego_start_x - g.ego_length) / sc.ego_ref_speed;
  w.ego_rear = (g.crossing_x + r - g.ego_start_x) / sc.ego_ref_speed;
  return w;
}

/// P1: ego clears the crossing before the pedestrian enters its corridor.
/// P3: pedestrian leaves the corridor before the ego arrives. P2 otherwise.
inline SpeedGroup classify_speed_group(const ScenarioCategory& sc, const ScenarioGeometry& g,
                                       double ped_speed) {
  if (!(ped_speed > 0.0)) throw ConfigError("pedestrian speed must be positive");
  const OccupancyWindows w = occupancy_windows(sc, g, ped_speed);
  if (w.ped_enter > w.ego_rear) return SpeedGroup::P1;
  if (w.ped_exit < w.ego_front) return SpeedGroup::P3;
  return SpeedGroup::P2;
}

/// {0, 0.2, ..., 2, 3, ..., 10, 12, 15, 20} seconds.
inline std::vector<double> default_horizons() {
  std::vector<double> h;
  for (int i = 0; i <= 10; ++i) h.push_back(i / 5.0);
  for (int i = 3; i <= 10; ++i) h.push_back(static_cast<double>(i));
  h.insert(h.end(), {12.0, 15.0, 20.0});
  return h;
}

inline void validate_horizons(const std::vector<double>& horizons) {
  if (horizons.empty()) throw ConfigError("horizons: must not be empty");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] >= 0.0) || !std::isfinite(horizons[i])) {
      throw ConfigError("horizons: values must be finite and >= 0");
    }
    if (i > 0 && !(horizons[i] > horizons[i - 1])) {
      throw ConfigError("horizons: must be strictly ascending");
    }
  }
}

struct SweepPlan {
  std::vector<double> horizons = default_horizons();
  std::vector<ScenarioCategory> scenario_categories = default_categories();
  std::vector<PedestrianSample> pedestrian_samples;
  std::uint64_t master_seed = 0;
};

}  // namespace pedhorizon
