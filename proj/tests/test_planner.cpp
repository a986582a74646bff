#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pedhorizon/planner.hpp"
#include "support/plan_oracle.hpp"

using namespace pedhorizon;

namespace {

using plan_oracle::micro_config;
using plan_oracle::naive_cost;

struct Case {
  AgentState ego;
  AgentState ped;
  double v_ref;
};

std::vector<Case> random_cases(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(0.0, 14.0), gap(-2.0, 25.0), y(-4.0, 1.5),
      vp(0.3, 2.5), vr(5.0, 14.0);
  std::vector<Case> out;
  for (int i = 0; i < n; ++i) {
    Case c;
    c.ego = {0.0, 0.0, v(rng), 0.0, 0.0};
    c.ped = {4.5 + gap(rng), y(rng), vp(rng), 0.0, 0.0};
    c.v_ref = vr(rng);
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST(PlanLength, KnotCounts) {
  EXPECT_EQ(plan_length(0.0, 0.2), 0);
  EXPECT_EQ(plan_length(0.1, 0.2), 0);
  EXPECT_EQ(plan_length(0.2, 0.2), 1);
  EXPECT_EQ(plan_length(0.6, 0.2), 3);
  EXPECT_EQ(plan_length(0.7, 0.2), 4);
  EXPECT_EQ(plan_length(20.0, 0.2), 100);
}

TEST(RiskPotential, PeaksAtContactAndDecays) {
  const Footprint fp;
  EXPECT_DOUBLE_EQ(risk_potential(0.0, 4.8, 0.0, 2.0, fp), 1.0);
  EXPECT_DOUBLE_EQ(risk_potential(0.0, 2.0, 0.0, 2.0, fp), 1.0);  // inside the footprint
  double prev = 1.0;
  for (double gap = 0.5; gap < 20.0; gap += 0.5) {
    const double r = risk_potential(0.0, 4.8 + gap, 0.0, 2.0, fp);
    EXPECT_LT(r, prev);
    EXPECT_NEAR(r, std::exp(-gap * gap / 8.0), 1e-12);
    prev = r;
  }
  EXPECT_THROW(risk_potential(0.0, 10.0, 0.0, 0.0, fp), DomainError);
}

TEST(Rollout, StopsWithoutReversing) {
  const AgentState ego{0.0, 0.0, 1.0, 0.0, 0.0};
  const std::vector<double> a = {-8.0, -8.0, 2.0};
  const auto k = rollout(ego, a, 0.2);
  ASSERT_EQ(k.size(), 3u);
  EXPECT_EQ(k[0].v, 0.0);
  EXPECT_NEAR(k[0].x, 1.0 / 16.0, 1e-12);
  EXPECT_EQ(k[1].x, k[0].x);
  EXPECT_NEAR(k[2].v, 0.4, 1e-12);
}

TEST(PlanCost, MatchesNaiveEvaluation) {
  const PlannerConfig cfg;
  const Footprint fp;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> acc(-8.0, 2.0);
  for (const Case& c : random_cases(50, 11)) {
    const auto pred = oracle_predict(c.ped, 2.0, cfg.dt_plan);
    Plan p;
    for (int k = 0; k < 10; ++k) p.accel_sequence.push_back(acc(rng));
    const double lib = plan_cost(c.ego, p, pred, cfg, c.v_ref, fp);
    const double ref = naive_cost(c.ego, p.accel_sequence, pred, cfg, c.v_ref, fp).total;
    EXPECT_NEAR(lib, ref, 1e-9 * std::max(1.0, ref));
  }
}

// Every one of the 5^3 lattice plans is scored independently; the
// optimizer must find the cheapest.
TEST(OptimizePlan, MatchesBruteForceOnSmallLattice) {
  const PlannerConfig cfg = micro_config();
  const Footprint fp;
  for (const Case& c : random_cases(200, 21)) {
    const auto pred = oracle_predict(c.ped, 0.6, cfg.dt_plan);
    const double best = plan_oracle::brute_force_min(c.ego, pred, cfg, c.v_ref, fp);
    const Plan p = optimize_plan(c.ego, pred, cfg, c.v_ref, fp);
    ASSERT_EQ(p.accel_sequence.size(), 3u);
    EXPECT_NEAR(p.total_cost, best, 1e-9 * std::max(1.0, best));
    EXPECT_NEAR(naive_cost(c.ego, p.accel_sequence, pred, cfg, c.v_ref, fp).total, p.total_cost,
                1e-9 * std::max(1.0, best));
  }
}

TEST(OptimizePlan, NeverWorseThanMandatoryCandidates) {
  const PlannerConfig cfg;
  const Footprint fp;
  for (double horizon : {0.6, 2.0, 5.0, 10.0, 20.0}) {
    for (const Case& c : random_cases(20, 31)) {
      const auto pred = oracle_predict(c.ped, horizon, cfg.dt_plan);
      const Plan p = optimize_plan(c.ego, pred, cfg, c.v_ref, fp);
      ASSERT_EQ(static_cast<int>(p.accel_sequence.size()), plan_length(horizon, cfg.dt_plan));
      EXPECT_TRUE(is_feasible(c.ego, p.accel_sequence, cfg));
      for (const auto& m : mandatory_candidates(c.ego, plan_length(horizon, cfg.dt_plan), cfg)) {
        Plan mp;
        mp.accel_sequence = m;
        EXPECT_LE(p.total_cost, plan_cost(c.ego, mp, pred, cfg, c.v_ref, fp) * (1 + 1e-12) + 1e-12)
            << "h=" << horizon;
      }
    }
  }
}

TEST(OptimizePlan, EmptyRoadHoldsReferenceSpeed) {
  const PlannerConfig cfg;
  const Footprint fp;
  PredictedTrajectory none;
  none.horizon = 5.0;
  const AgentState ego{0.0, 0.0, 10.0, 0.0, 0.0};
  const Plan p = optimize_plan(ego, none, cfg, 10.0, fp);
  ASSERT_EQ(p.accel_sequence.size(), 25u);
  for (double a : p.accel_sequence) EXPECT_EQ(a, 0.0);
  EXPECT_EQ(p.total_cost, 0.0);
}

TEST(OptimizePlan, ShortHorizonYieldsNoPlan) {
  const PlannerConfig cfg;
  const AgentState ego{0.0, 0.0, 10.0, 0.0, 0.0};
  const auto pred = oracle_predict({30.0, -4.0, 1.34, 0.0, 0.0}, 0.1, cfg.dt_plan);
  EXPECT_TRUE(optimize_plan(ego, pred, cfg, 10.0, Footprint{}).empty());
}

TEST(OptimizePlan, BrakesForPedestrianInPath) {
  const PlannerConfig cfg;
  const Footprint fp;
  const AgentState ego{0.0, 0.0, 8.33, 0.0, 0.0};
  // pedestrian reaches the ego lane right when the ego would get there
  const AgentState ped{4.5 + 25.0, -4.0, 1.34, 0.0, 0.0};
  const Plan p = optimize_plan(ego, oracle_predict(ped, 5.0, cfg.dt_plan), cfg, 8.33, fp);
  ASSERT_FALSE(p.empty());
  EXPECT_LT(p.accel_sequence.front(), 0.0);
}

// Raising the risk weight never increases the summed risk of the optimal
// plan: if it did, the cheaper plan at the lower weight would also win at
// the higher one.
TEST(OptimizePlan, RiskWeightTradesRiskAgainstProgress) {
  PlannerConfig lo = micro_config();
  PlannerConfig hi = lo;
  const Footprint fp;
  for (const Case& c : random_cases(100, 41)) {
    lo.w_risk = 5.0;
    hi.w_risk = 50.0;
    const auto pred = oracle_predict(c.ped, 0.6, lo.dt_plan);
    const Plan pl = optimize_plan(c.ego, pred, lo, c.v_ref, fp);
    const Plan ph = optimize_plan(c.ego, pred, hi, c.v_ref, fp);
    const double rl = naive_cost(c.ego, pl.accel_sequence, pred, lo, c.v_ref, fp).risk;
    const double rh = naive_cost(c.ego, ph.accel_sequence, pred, hi, c.v_ref, fp).risk;
    EXPECT_LE(rh, rl + 1e-9);
  }
}

TEST(OptimizePlan, SearchedPlansRespectSpeedCap) {
  const PlannerConfig cfg;
  const Footprint fp;
  const AgentState ego{0.0, 0.0, 8.0, 0.0, 0.0};
  const auto pred = oracle_predict({40.0, -4.0, 1.0, 0.0, 0.0}, 10.0, cfg.dt_plan);
  const Plan p = optimize_plan(ego, pred, cfg, 8.0, fp);
  for (const auto& k : p.states) EXPECT_LE(k.v, 8.0 + 1e-6);
}

TEST(PlannerConfig, RejectsInvalidSettings) {
  PlannerConfig c;
  c.sigma_risk = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.w_acc = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.a_max = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.speed_cap_ratio = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PlannerConfig, DefaultLattice) {
  const PlannerConfig c;
  const auto l = c.lattice();
  EXPECT_EQ(l.front(), -8.0);
  EXPECT_EQ(l.back(), 2.0);
  EXPECT_EQ(l.size(), 21u);
}
