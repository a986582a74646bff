#pragma once

// JSON experiment configuration. One file fixes everything a sweep, the
// metric stage and the requirements stage depend on.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedhorizon/error.hpp"
#include "pedhorizon/planner.hpp"
#include "pedhorizon/requirements.hpp"
#include "pedhorizon/scenario.hpp"
#include "pedhorizon/simulation.hpp"

namespace pedhorizon {

struct ExperimentConfig {
  std::uint64_t master_seed = 7;
  std::vector<ScenarioCategory> scenarios = default_categories();
  PedestrianSpeedModel pedestrians;
  int pedestrian_count = 100;
  double nominal_pedestrian_speed = 1.34;
  ScenarioGeometry geometry;  // crossing_x is derived per scenario
  PlannerConfig planner;
  SimConfig simulation;
  std::vector<double> horizons = default_horizons();
  std::vector<WeightScheme> weight_schemes;
  RequirementsOptions requirements;

  void validate() const {
    if (scenarios.empty()) throw ConfigError("scenarios: at least one scenario is required");
    std::set<std::string> ids;
    for (const auto& sc : scenarios) {
      if (sc.id.empty()) throw ConfigError("scenarios: id must not be empty");
      if (!ids.insert(sc.id).second) throw ConfigError("scenarios: duplicate id '" + sc.id + "'");
      if (!(sc.ego_ref_speed > 0.0)) throw ConfigError("scenarios." + sc.id + ": speed must be positive");
      build_geometry(sc, nominal_pedestrian_speed, geometry);
    }
    if (pedestrian_count <= 0) throw ConfigError("pedestrians.count: must be positive");
    if (!(pedestrians.std >= 0.0)) throw ConfigError("pedestrians.std: must be >= 0");
    if (!(nominal_pedestrian_speed > 0.0)) throw ConfigError("pedestrians.nominal_speed: must be positive");
    planner.validate();
    simulation.validate();
    validate_horizons(horizons);
    requirements.validate();
    std::set<std::string> names;
    for (const auto& ws : weight_schemes) {
      if (!names.insert(ws.name).second) throw ConfigError("weight_schemes: duplicate name '" + ws.name + "'");
      ws.validate();
      for (const auto& [sc, w] : ws.scenario_weights) {
        if (!ids.count(sc)) {
          throw ConfigError("weight_schemes." + ws.name + ": unknown scenario '" + sc + "'");
        }
      }
    }
  }

  std::vector<PedestrianSample> pedestrian_samples() const {
    return sample_pedestrian_speeds(pedestrian_count, pedestrians, master_seed);
  }
};

/// The four example applications: general urban driving, food delivery,
/// unhurried taxi, hurried taxi.
inline std::vector<WeightScheme> default_weight_schemes() {
  auto scheme = [](std::string name, double comfort, double eff, double w1, double w2, double w3) {
    return WeightScheme{std::move(name),
                        {{"SC1", w1}, {"SC2", w2}, {"SC3", w3}},
                        {{metric::comfort, comfort}, {metric::efficiency, eff}}};
  };
  return {scheme("a", 1, 1, 1, 1, 1), scheme("b", 0, 1, 0.2, 0.1, 0.7),
          scheme("c", 1, 0, 1, 1, 1), scheme("d", 0.1, 2, 0, 0, 1)};
}

namespace detail {

using nlohmann::json;

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  /// Typos must not silently fall back to defaults.
  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::vector<WeightScheme> parse_weight_schemes(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path + ": must be an array");
  std::vector<WeightScheme> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Section s(arr[i], p);
    WeightScheme ws;
    s.read("name", ws.name);
    if (ws.name.empty()) throw ConfigError(p + ".name: required");
    double comfort = 0.0, efficiency = 0.0;
    s.read("comfort", comfort);
    s.read("efficiency", efficiency);
    ws.metric_weights = {{metric::comfort, comfort}, {metric::efficiency, efficiency}};
    if (const json* scs = s.child("scenarios")) {
      if (!scs->is_object()) throw ConfigError(p + ".scenarios: must be an object");
      for (const auto& [id, w] : scs->items()) {
        if (!w.is_number()) throw ConfigError(p + ".scenarios." + id + ": must be a number");
        ws.scenario_weights[id] = w.get<double>();
      }
    }
    s.reject_unknown();
    out.push_back(std::move(ws));
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  using detail::Section;
  ExperimentConfig c;
  c.weight_schemes = default_weight_schemes();
  Section top(root, "config");
  top.read("master_seed", c.master_seed);

  if (const auto* scs = top.child("scenarios")) {
    if (!scs->is_array()) throw ConfigError("scenarios: must be an array");
    c.scenarios.clear();
    for (std::size_t i = 0; i < scs->size(); ++i) {
      Section s((*scs)[i], "scenarios[" + std::to_string(i) + "]");
      ScenarioCategory sc;
      double kmh = 0.0;
      s.read("id", sc.id);
      s.read("speed_kmh", kmh);
      sc.ego_ref_speed = kmh_to_mps(kmh);
      s.reject_unknown();
      c.scenarios.push_back(sc);
    }
  }
  if (const auto* j = top.child("pedestrians")) {
    Section s(*j, "pedestrians");
    s.read("count", c.pedestrian_count);
    s.read("mean", c.pedestrians.mean);
    s.read("std", c.pedestrians.std);
    s.read("min_speed", c.pedestrians.min_speed);
    s.read("nominal_speed", c.nominal_pedestrian_speed);
    s.reject_unknown();
  }
  if (const auto* j = top.child("geometry")) {
    Section s(*j, "geometry");
    s.read("lateral_offset", c.geometry.lateral_offset);
    s.read("ego_start_x", c.geometry.ego_start_x);
    s.read("route_length", c.geometry.route_length);
    s.read("ego_length", c.geometry.ego_length);
    s.read("ego_width", c.geometry.ego_width);
    s.read("pedestrian_radius", c.geometry.pedestrian_radius);
    s.reject_unknown();
  }
  if (const auto* j = top.child("planner")) {
    Section s(*j, "planner");
    PlannerConfig& p = c.planner;
    s.read("w_risk", p.w_risk);
    s.read("w_speed", p.w_speed);
    s.read("w_acc", p.w_acc);
    s.read("w_jerk", p.w_jerk);
    s.read("sigma_risk", p.sigma_risk);
    s.read("dt_plan", p.dt_plan);
    s.read("a_min", p.a_min);
    s.read("a_max", p.a_max);
    s.read("j_max", p.j_max);
    s.read("accel_levels", p.accel_levels);
    s.read("lattice_step", p.lattice_step);
    s.read("exhaustive_budget", p.exhaustive_budget);
    s.read("phase_targets", p.phase_targets);
    s.read("tracking_gain", p.tracking_gain);
    s.read("speed_cap_ratio", p.speed_cap_ratio);
    s.read("negligible_risk", p.negligible_risk);
    s.reject_unknown();
  }
  if (const auto* j = top.child("simulation")) {
    Section s(*j, "simulation");
    s.read("dt_sim", c.simulation.dt_sim);
    s.read("replan_period", c.simulation.replan_period);
    s.read("max_episode_time", c.simulation.max_episode_time);
    s.read("verify_dominance", c.simulation.verify_dominance);
    if (const auto* lm = s.child("latency_model"); lm && !lm->is_null()) {
      if (!lm->is_array()) throw ConfigError("simulation.latency_model: must be null or an array");
      for (std::size_t i = 0; i < lm->size(); ++i) {
        const std::string p = "simulation.latency_model[" + std::to_string(i) + "]";
        Section e((*lm)[i], p);
        double h = 0.0, hz = 0.0;
        e.read("horizon", h);
        e.read("frequency_hz", hz);
        e.reject_unknown();
        c.simulation.latency_model.table.emplace_back(h, hz);
      }
    }
    s.reject_unknown();
  }
  top.read("horizons", c.horizons);
  if (const auto* j = top.child("weight_schemes")) {
    c.weight_schemes = detail::parse_weight_schemes(*j, "weight_schemes");
  }
  if (const auto* j = top.child("requirements")) {
    Section s(*j, "requirements");
    std::string norm = "pooled", membership = "comfortable_share", domain = "all";
    s.read("normalization", norm);
    s.read("comfort_membership", membership);
    s.read("horizon_domain", domain);
    s.read("satisficing_fraction", c.requirements.satisficing_fraction);
    s.reject_unknown();
    if (norm == "pooled") {
      c.requirements.normalization = Normalization::Pooled;
    } else if (norm == "per_scenario") {
      c.requirements.normalization = Normalization::PerScenario;
    } else {
      throw ConfigError("requirements.normalization: expected 'pooled' or 'per_scenario'");
    }
    if (membership == "comfortable_share") {
      c.requirements.comfort_membership = ComfortMembership::ComfortableShare;
    } else if (membership == "highly_uncomfortable_share") {
      c.requirements.comfort_membership = ComfortMembership::HighlyUncomfortableShare;
    } else {
      throw ConfigError(
          "requirements.comfort_membership: expected 'comfortable_share' or 'highly_uncomfortable_share'");
    }
    if (domain == "all") {
      c.requirements.horizon_domain = HorizonDomain::All;
    } else if (domain == "safe") {
      c.requirements.horizon_domain = HorizonDomain::Safe;
    } else {
      throw ConfigError("requirements.horizon_domain: expected 'all' or 'safe'");
    }
  }
  top.reject_unknown();
  c.simulation.limits = c.planner.limits();
  c.validate();
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

inline std::vector<WeightScheme> load_weight_schemes(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("weights file is not valid JSON: " + std::string(e.what()));
  }
  // Either a bare array of schemes or an experiment config, whose schemes
  // default to the four example applications just as they do for a sweep.
  std::vector<WeightScheme> schemes;
  try {
    schemes = j.is_object() ? parse_config(j).weight_schemes : detail::parse_weight_schemes(j, "weight_schemes");
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (schemes.empty()) throw ConfigError(path + ": no weight schemes");
  for (const auto& s : schemes) s.validate();
  return schemes;
}

}  // namespace pedhorizon
