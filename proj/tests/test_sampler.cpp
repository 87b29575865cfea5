#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ddcqa/error.hpp"
#include "ddcqa/sampler.hpp"
#include "support.hpp"

using namespace ddcqa;
using testing_support::load;
using testing_support::load_fixture;

namespace {

Dataset make(const NetworkCase& net, int count, std::uint64_t seed, int workers = 1) {
  SamplingOptions so;
  so.count = count;
  so.seed = seed;
  GenerateOptions gen;
  gen.workers = workers;
  return generate_dataset(net, sample_load_scenarios(net, so), so, gen);
}

}  // namespace

TEST(Scenarios, DeterministicAndInRange) {
  const NetworkCase net = load("case9");
  SamplingOptions so;
  so.count = 50;
  so.seed = 7;
  const auto a = sample_load_scenarios(net, so);
  const auto b = sample_load_scenarios(net, so);
  ASSERT_EQ(a.size(), 50u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].load_mult, b[i].load_mult);
    EXPECT_EQ(a[i].load_mult.size(), 9u);
    for (double m : a[i].load_mult) {
      EXPECT_GE(m, 0.6);
      EXPECT_LT(m, 1.1);
    }
  }
  so.seed = 8;
  EXPECT_NE(sample_load_scenarios(net, so)[0].load_mult, a[0].load_mult);
}

TEST(Scenarios, PrefixIsStableUnderCount) {
  const NetworkCase net = load("case5");
  SamplingOptions so;
  so.count = 10;
  const auto small = sample_load_scenarios(net, so);
  so.count = 30;
  const auto large = sample_load_scenarios(net, so);
  for (size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i].load_mult, large[i].load_mult);
}

TEST(Scenarios, GlobalModeDrawsOneMultiplier) {
  const NetworkCase net = load("case9");
  SamplingOptions so;
  so.count = 5;
  so.mode = MultiplierMode::Global;
  for (const auto& sc : sample_load_scenarios(net, so)) {
    ASSERT_EQ(sc.load_mult.size(), 9u);
    for (double m : sc.load_mult) EXPECT_EQ(m, sc.load_mult[0]);
    const LoadProfile loads = scenario_loads(net, sc);
    const LoadProfile base = LoadProfile::base(net);
    EXPECT_NEAR(loads.p[4], base.p[4] * sc.load_mult[0], 1e-15);
  }
}

TEST(Scenarios, InvalidOptionsRejected) {
  const NetworkCase net = load("case5");
  SamplingOptions so;
  so.count = 0;
  EXPECT_THROW(sample_load_scenarios(net, so), ValidationError);
  so.count = 5;
  so.lo = 1.2;
  so.hi = 1.1;
  EXPECT_THROW(sample_load_scenarios(net, so), ValidationError);
}

TEST(Scenarios, DispatchRandomizationStaysWithinLimits) {
  const NetworkCase net = load("case9");
  SamplingOptions so;
  so.count = 20;
  so.gen_lo = 0.2;
  so.gen_hi = 3.0;
  for (const auto& sc : sample_load_scenarios(net, so)) {
    const NetworkCase c = scenario_case(net, sc);
    for (const auto& src : c.sources) {
      EXPECT_GE(src.p_set[0], src.p_min[0]);
      EXPECT_LE(src.p_set[0], src.p_max[0]);
    }
  }
}

TEST(Dataset, SamplesAreSelfConsistent) {
  const NetworkCase net = load("case9");
  const AdmittanceMatrix y = build_admittance(net);
  const Dataset ds = make(net, 40, 3);
  EXPECT_EQ(ds.size(), 40);
  EXPECT_LE(ds.max_residual, ds.pf_tol);
  for (int r = 0; r < ds.size(); ++r) {
    const VoltageState s{net.bus_count(), 1, ds.x.row(r).transpose()};
    for (size_t t = 0; t < ds.targets.size(); ++t) {
      EXPECT_NEAR(ds.y(r, static_cast<Eigen::Index>(t)), eval_quantity(s, y, ds.targets[t]), 1e-10);
    }
  }
}

TEST(Dataset, BaseLoadScenarioReproducesBasePowerFlow) {
  const NetworkCase net = load("case5");
  SamplingOptions so;
  so.count = 1;
  so.lo = 1.0;
  so.hi = 1.0;
  const Dataset ds = generate_dataset(net, sample_load_scenarios(net, so), so);
  const AdmittanceMatrix y = build_admittance(net);
  const auto pf = newton_raphson_pf(net, y, LoadProfile::base(net));
  EXPECT_LT((ds.x.row(0).transpose() - pf.state.x).cwiseAbs().maxCoeff(), 1e-10);
  // slack output covers its load plus network losses
  const int slack = net.slack_bus();
  const Injections inj = eval_injections(pf.state, y);
  const double losses = inj.p.sum();
  EXPECT_GT(losses, 0.0);
  EXPECT_NEAR(ds.y(0, ds.target_column({QuantityKind::P, slack, 0})), inj.p[slack], 1e-12);
}

TEST(Dataset, IndependentOfWorkerCount) {
  const NetworkCase net = load("case9");
  EXPECT_EQ(render_dataset(make(net, 30, 5, 1)), render_dataset(make(net, 30, 5, 4)));
}

TEST(Dataset, CsvRoundTripIsExact) {
  const NetworkCase net = load("case5");
  const Dataset ds = make(net, 12, 9);
  const std::string text = render_dataset(ds);
  const Dataset back = parse_dataset(text, &net);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(render_dataset(back), text);
}

TEST(Dataset, FingerprintMismatchWarns) {
  const NetworkCase net = load("case5");
  const std::string text = render_dataset(make(net, 10, 9));
  NetworkCase other = net;
  other.buses[1].p_load[0] *= 2.0;
  std::vector<std::string> warnings;
  parse_dataset(text, &other, &warnings);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Dataset, TruncatedCsvIsParseError) {
  const NetworkCase net = load("case5");
  std::string text = render_dataset(make(net, 4, 9));
  text.resize(text.size() - 40);
  EXPECT_THROW(parse_dataset(text), ParseError);
}

TEST(Split, DisjointCoverAndSizes) {
  const NetworkCase net = load("case9");
  const Dataset ds = make(net, 100, 2);
  const auto [train, test] = split_train_test(ds, 0.5, 4);
  EXPECT_EQ(train.size(), 50);
  EXPECT_EQ(test.size(), 50);
  std::set<int> a(train.ids.begin(), train.ids.end());
  std::set<int> b(test.ids.begin(), test.ids.end());
  for (int id : a) EXPECT_EQ(b.count(id), 0u);
  std::set<int> all = a;
  all.insert(b.begin(), b.end());
  EXPECT_EQ(all, std::set<int>(ds.ids.begin(), ds.ids.end()));
  EXPECT_TRUE(std::is_sorted(train.ids.begin(), train.ids.end()));
  const auto again = split_train_test(ds, 0.5, 4);
  EXPECT_EQ(again.first.ids, train.ids);
}

TEST(Split, MinimumSampleGuidance) {
  EXPECT_EQ(minimum_samples(9, 1), 18);
  EXPECT_EQ(minimum_samples(4, 3), 24);
}

TEST(Dataset, ThreePhaseFeeder) {
  const NetworkCase net = load_fixture("feeder4.json");
  const Dataset ds = make(net, 48, 1);
  EXPECT_EQ(ds.size(), 48);
  EXPECT_EQ(ds.x.cols(), 24);
  EXPECT_EQ(ds.phase_count, 3);
}
