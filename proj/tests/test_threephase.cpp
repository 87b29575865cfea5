#include <cmath>

#include <gtest/gtest.h>

#include "ddcqa/error.hpp"
#include "ddcqa/opf.hpp"
#include "support.hpp"

using namespace ddcqa;
using testing_support::load;
using testing_support::load_fixture;

namespace {

Dataset sample(const NetworkCase& net, int count, std::uint64_t seed) {
  SamplingOptions so;
  so.count = count;
  so.seed = seed;
  return generate_dataset(net, sample_load_scenarios(net, so), so);
}

}  // namespace

TEST(Balanced, SurrogatesAndOpfMatchSinglePhase) {
  const auto single = load("case9");
  const auto three = balanced_three_phase(single);
  const auto y1 = build_admittance(single);
  const auto y3 = build_admittance(three);
  const Dataset d1 = sample(single, 60, 5);
  const Dataset d3 = sample(three, 60, 5);
  ASSERT_EQ(d1.size(), d3.size());

  BoostOptions bo;
  bo.learners = 20;
  ModelSet m1, m3;
  for (const auto& id : opf_targets(single)) {
    const auto g1 = gb_fit(d1, id, y1, bo).collapsed;
    for (int ph = 0; ph < 3; ++ph) {
      const QuantityId id3{id.kind, id.element, ph};
      const auto g3 = gb_fit(d3, id3, y3, bo).collapsed;
      for (int r = 0; r < d1.size(); ++r) {
        const double a = g1.eval(d1.x.row(r).transpose());
        const double b = g3.eval(d3.x.row(r).transpose());
        EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a))) << id3.name(3);
      }
      m3.emplace(id3, g3);
    }
    m1.emplace(id, g1);
  }

  const auto s1 = solve_ddcqa_opf(build_ddcqa_opf(single, m1), single, y1);
  const auto s3 = solve_ddcqa_opf(build_ddcqa_opf(three, m3), three, y3);
  ASSERT_EQ(s1.status, SolveStatus::Optimal);
  ASSERT_EQ(s3.status, SolveStatus::Optimal);
  // Two separate interior-point solves agree to their own accuracy, not to
  // round-off.
  EXPECT_NEAR(s3.objective / 3.0, s1.objective, 1e-9 * s1.objective);
}

TEST(Balanced, RejectsMultiphaseInput) {
  const auto feeder = load_fixture("feeder4.json");
  EXPECT_THROW(balanced_three_phase(feeder), ValidationError);
}

TEST(Feeder, QuadraticFormsMatchDirectEvaluation) {
  const auto net = load_fixture("feeder4.json");
  const auto y = build_admittance(net);
  const auto ds = sample(net, 30, 9);
  for (const auto& id : ds.targets) {
    const auto m = injection_matrix(id, y);
    for (int r = 0; r < 10; ++r) {
      const Eigen::VectorXd x = ds.x.row(r).transpose();
      Eigen::VectorXd xl(static_cast<Eigen::Index>(m.vars.size()));
      for (size_t k = 0; k < m.vars.size(); ++k) xl[static_cast<Eigen::Index>(k)] = x[m.vars[k]];
      const VoltageState st{net.bus_count(), 3, x};
      EXPECT_NEAR(xl.dot(m.m * xl), eval_quantity(st, y, id), 1e-12) << id.name(3);
    }
  }
}

TEST(Feeder, SampledPowerFlowsConverge) {
  const auto net = load_fixture("feeder4.json");
  SamplingOptions so;
  so.count = 200;
  so.seed = 2;
  const Dataset ds = generate_dataset(net, sample_load_scenarios(net, so), so);
  EXPECT_GE(ds.size(), 190);
  EXPECT_LE(ds.max_residual, 1e-8);
}

TEST(Feeder, EnsemblesStayConvexAndBoostingIsMonotone) {
  const auto net = load_fixture("feeder4.json");
  const auto y = build_admittance(net);
  const int n = minimum_samples(net.bus_count(), net.phase_count);
  ASSERT_EQ(n, 24);
  const Dataset train = sample(net, n, 11);
  const Dataset test = sample(net, n, 12);

  BoostOptions bo;
  bo.learners = 30;
  BagOptions bag;
  bag.bootstraps = 10;
  for (const auto& id : opf_targets(net)) {
    for (const auto& m : {pr_fit(train, id, y), gb_fit(train, id, y, bo), bagging_fit(train, id, y, bag)}) {
      EXPECT_GE(m.collapsed.min_eigenvalue(), -1e-9) << id.name(3);
      for (const auto& member : m.members) EXPECT_GE(member.min_eigenvalue(), -1e-9) << id.name(3);
    }
  }
  for (auto fam : {Family::P, Family::Q, Family::Pij, Family::Qij}) {
    const auto pts = tune_sweep(train, test, fam, train.targets, y, Method::GB, bo, bag);
    for (size_t i = 1; i < pts.size(); ++i) EXPECT_LE(pts[i].train, pts[i - 1].train + 1e-15) << family_name(fam);
  }
}

TEST(Feeder, DistributionOpfServesTheLoad) {
  const auto net = load_fixture("feeder4.json");
  const auto y = build_admittance(net);
  const Dataset train = sample(net, 48, 13);
  ModelSet models;
  for (const auto& id : opf_targets(net)) models.emplace(id, pr_fit(train, id, y).collapsed);
  OpfOptions o;
  o.mode = OpfMode::Distribution;
  std::tie(o.x_lower, o.x_upper) = component_bounds(train, 0.1);
  const auto prob = build_ddcqa_opf(net, models, o);
  EXPECT_EQ(census(prob).power_factor, 1);
  const auto sol = solve_ddcqa_opf(prob, net, y);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  // The audit compares every surrogate row with the exact network.
  EXPECT_EQ(sol.audit.p_mismatch.size(), 12);
  EXPECT_TRUE(std::isfinite(sol.audit.max_abs_balance));
  EXPECT_NEAR(sol.objective, dispatch_cost(net, sol.pg, true), 1e-6 * std::abs(sol.objective));
}
