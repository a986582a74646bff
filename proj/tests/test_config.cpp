#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pedhorizon/config.hpp"

using namespace pedhorizon;

TEST(ParseConfig, EmptyObjectGivesDefaults) {
  const ExperimentConfig c = parse_config_text("{}");
  EXPECT_EQ(c.master_seed, 7u);
  EXPECT_EQ(c.scenarios.size(), 3u);
  EXPECT_EQ(c.pedestrian_count, 100);
  EXPECT_EQ(c.horizons.size(), 22u);
  EXPECT_EQ(c.weight_schemes.size(), 4u);
  EXPECT_EQ(c.scenarios.size() * c.horizons.size() * c.pedestrian_count, 6600u);
}

TEST(ParseConfig, ReadsEverySection) {
  const ExperimentConfig c = parse_config_text(R"({
    "master_seed": 11,
    "scenarios": [{"id": "A", "speed_kmh": 36}],
    "pedestrians": {"count": 5, "mean": 1.2, "std": 0.1, "min_speed": 0.3, "nominal_speed": 1.3},
    "geometry": {"lateral_offset": 5.0},
    "planner": {"w_risk": 20, "sigma_risk": 1.5, "j_max": 8},
    "simulation": {"dt_sim": 0.1, "replan_period": 0.1,
                   "latency_model": [{"horizon": 10.5, "frequency_hz": 5}]},
    "horizons": [0, 1, 2],
    "weight_schemes": [{"name": "x", "comfort": 1, "efficiency": 0, "scenarios": {"A": 1}}],
    "requirements": {"normalization": "per_scenario",
                     "comfort_membership": "highly_uncomfortable_share",
                     "satisficing_fraction": 0.9, "horizon_domain": "safe"}
  })");
  EXPECT_EQ(c.master_seed, 11u);
  ASSERT_EQ(c.scenarios.size(), 1u);
  EXPECT_DOUBLE_EQ(c.scenarios[0].ego_ref_speed, 10.0);
  EXPECT_EQ(c.pedestrian_count, 5);
  EXPECT_DOUBLE_EQ(c.pedestrians.min_speed, 0.3);
  EXPECT_DOUBLE_EQ(c.nominal_pedestrian_speed, 1.3);
  EXPECT_DOUBLE_EQ(c.geometry.lateral_offset, 5.0);
  EXPECT_DOUBLE_EQ(c.planner.w_risk, 20.0);
  EXPECT_DOUBLE_EQ(c.simulation.limits.j_max, 8.0);  // actuator limits follow the planner's
  EXPECT_EQ(c.simulation.latency_model.table.size(), 1u);
  EXPECT_EQ(c.horizons, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(c.weight_schemes.size(), 1u);
  EXPECT_EQ(c.requirements.normalization, Normalization::PerScenario);
  EXPECT_EQ(c.requirements.comfort_membership, ComfortMembership::HighlyUncomfortableShare);
  EXPECT_DOUBLE_EQ(c.requirements.satisficing_fraction, 0.9);
  EXPECT_EQ(c.requirements.horizon_domain, HorizonDomain::Safe);
  EXPECT_EQ(parse_config_text("{}").requirements.horizon_domain, HorizonDomain::All);
}

TEST(ParseConfig, DiagnosticsNameTheField) {
  auto message = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"planner": {"w_risc": 1}})").find("planner.w_risc"), std::string::npos);
  EXPECT_NE(message(R"({"planner": {"sigma_risk": -1}})").find("sigma_risk"), std::string::npos);
  EXPECT_NE(message(R"({"horizons": [1, 0]})").find("horizons"), std::string::npos);
  EXPECT_NE(message(R"({"pedestrians": {"count": 0}})").find("pedestrians.count"), std::string::npos);
  EXPECT_NE(message(R"({"planner": {"w_risk": "high"}})").find("planner.w_risk"), std::string::npos);
  EXPECT_NE(message(R"({"weight_schemes": [{"name": "z", "comfort": 0, "efficiency": 0, "scenarios": {"SC1": 1}}]})")
                .find("'z'"),
            std::string::npos);
  EXPECT_NE(message(R"({"weight_schemes": [{"name": "q", "comfort": 1, "scenarios": {"SC7": 1}}]})").find("SC7"),
            std::string::npos);
  EXPECT_NE(message("{not json").find("JSON"), std::string::npos);
  EXPECT_NE(message(R"({"scenarios": [{"id": "A", "speed_kmh": 30}, {"id": "A", "speed_kmh": 40}]})")
                .find("duplicate"),
            std::string::npos);
  EXPECT_NE(message(R"({"requirements": {"normalization": "global"}})").find("requirements.normalization"),
            std::string::npos);
  EXPECT_NE(message(R"({"requirements": {"horizon_domain": "unsafe"}})").find("requirements.horizon_domain"),
            std::string::npos);
}

TEST(ParseConfig, PedestrianSamplesFollowSeed) {
  const auto a = parse_config_text(R"({"master_seed": 3})").pedestrian_samples();
  const auto b = parse_config_text(R"({"master_seed": 3})").pedestrian_samples();
  const auto c = parse_config_text(R"({"master_seed": 4})").pedestrian_samples();
  ASSERT_EQ(a.size(), 100u);
  EXPECT_EQ(a[17].speed, b[17].speed);
  EXPECT_NE(a[17].speed, c[17].speed);
}

TEST(LoadWeightSchemes, ArrayOrConfig) {
  const auto path = (std::filesystem::temp_directory_path() / "pedhorizon_weights.json").string();
  auto load = [&](const std::string& text) {
    std::ofstream(path) << text;
    return load_weight_schemes(path);
  };
  EXPECT_EQ(load("{}").size(), 4u);
  EXPECT_EQ(load(R"([{"name": "x", "comfort": 1, "scenarios": {"SC1": 1}}])").size(), 1u);
  const auto from_config =
      load(R"({"weight_schemes": [{"name": "y", "efficiency": 2, "scenarios": {"SC3": 1}}], "master_seed": 3})");
  ASSERT_EQ(from_config.size(), 1u);
  EXPECT_EQ(from_config[0].metric_weight(metric::efficiency), 2.0);
  try {
    load(R"({"weight_scheme": []})");
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("weight_scheme"), std::string::npos);
  }
  EXPECT_THROW(load("[]"), ConfigError);
}
