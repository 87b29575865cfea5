#include <gtest/gtest.h>

#include "ddcqa/acpf.hpp"
#include "ddcqa/error.hpp"
#include "ddcqa/rng.hpp"
#include "support.hpp"

using namespace ddcqa;
using testing_support::load;
using testing_support::load_fixture;

namespace {

VoltageState random_state(const NetworkCase& net, KeyedStream& rng) {
  VoltageState s = VoltageState::flat(net);
  for (Eigen::Index k = 0; k < s.x.size(); ++k) s.x[k] += rng.uniform(-0.2, 0.2);
  return s;
}

// Injections written out term by term from G and B, independent of the
// complex-arithmetic evaluator.
Injections direct_injections(const VoltageState& s, const AdmittanceMatrix& y) {
  const Eigen::MatrixXd g = y.g();
  const Eigen::MatrixXd b = y.b();
  const int n = y.node_count();
  Injections out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (int i = 0; i < n; ++i) {
    const double ei = s.x[2 * i];
    const double fi = s.x[2 * i + 1];
    for (int j = 0; j < n; ++j) {
      const double ej = s.x[2 * j];
      const double fj = s.x[2 * j + 1];
      out.p[i] += ei * (g(i, j) * ej - b(i, j) * fj) + fi * (g(i, j) * fj + b(i, j) * ej);
      out.q[i] += fi * (g(i, j) * ej - b(i, j) * fj) - ei * (g(i, j) * fj + b(i, j) * ej);
    }
  }
  return out;
}

}  // namespace

TEST(Quantities, InjectionsMatchTermByTermForm) {
  KeyedStream rng{11};
  for (const auto& net : {load("case5"), load("case9"), load_fixture("feeder4.json")}) {
    const AdmittanceMatrix y = build_admittance(net);
    for (int t = 0; t < 20; ++t) {
      const VoltageState s = random_state(net, rng);
      const Injections a = eval_injections(s, y);
      const Injections b = direct_injections(s, y);
      EXPECT_LT((a.p - b.p).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((a.q - b.q).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Quantities, QuadraticFormsReproduceEveryQuantity) {
  KeyedStream rng{12};
  for (const auto& net : {load("case9"), load_fixture("feeder4.json")}) {
    const AdmittanceMatrix y = build_admittance(net);
    std::vector<QuantityId> ids;
    for (int ph = 0; ph < net.phase_count; ++ph) {
      for (int i = 0; i < net.bus_count(); ++i) {
        ids.push_back({QuantityKind::P, i, ph});
        ids.push_back({QuantityKind::Q, i, ph});
      }
      for (int b = 0; b < net.branch_count(); ++b) {
        for (auto k : {QuantityKind::Pij, QuantityKind::Qij, QuantityKind::Pji, QuantityKind::Qji}) ids.push_back({k, b, ph});
      }
    }
    for (int t = 0; t < 10; ++t) {
      const VoltageState s = random_state(net, rng);
      for (const auto& id : ids) {
        const LocalQuadratic m = injection_matrix(id, y);
        EXPECT_NEAR(m.eval(s.x), eval_quantity(s, y, id), 1e-12) << id.name(net.phase_count);
        EXPECT_NEAR(s.x.dot(m.dense(s.dim()) * s.x), eval_quantity(s, y, id), 1e-12);
        EXPECT_LT((m.m - m.m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      }
    }
  }
}

TEST(Quantities, FlowsSumToInjections) {
  const NetworkCase net = load("case9");
  const AdmittanceMatrix y = build_admittance(net);
  KeyedStream rng{13};
  const VoltageState s = random_state(net, rng);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(net.bus_count());
  for (int b = 0; b < net.branch_count(); ++b) {
    const BranchFlows f = eval_line_flows(s, y, b);
    p[net.branches[static_cast<size_t>(b)].from] += f.p_from[0];
    p[net.branches[static_cast<size_t>(b)].to] += f.p_to[0];
  }
  // case9 has no bus shunts, so branch flows account for every injection
  EXPECT_LT((p - eval_injections(s, y).p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(QuantityId, NamesRoundTrip) {
  const QuantityId a{QuantityKind::Qij, 6, 0};
  EXPECT_EQ(a.name(1), "qij_7");
  EXPECT_EQ(QuantityId::parse("qij_7"), a);
  const QuantityId b{QuantityKind::P, 2, 1};
  EXPECT_EQ(b.name(3), "p_3b");
  EXPECT_EQ(QuantityId::parse("p_3b"), b);
  EXPECT_THROW(QuantityId::parse("x_1"), ValidationError);
}

TEST(PowerFlow, ConvergesOnAllCases) {
  for (const char* name : {"case5", "case9", "case57", "case118"}) {
    const NetworkCase net = load(name);
    const AdmittanceMatrix y = build_admittance(net);
    const LoadProfile loads = LoadProfile::base(net);
    const PowerFlowResult r = newton_raphson_pf(net, y, loads);
    EXPECT_LE(pf_mismatch(net, y, loads, r.state), 1e-8) << name;
    EXPECT_LE(r.iterations, 10) << name;
  }
}

TEST(PowerFlow, TwoBusSlackCoversLoadAndLosses) {
  const NetworkCase net = load_fixture("two_bus.json");
  const AdmittanceMatrix y = build_admittance(net);
  const PowerFlowResult r = newton_raphson_pf(net, y, LoadProfile::base(net));
  const Injections inj = eval_injections(r.state, y);
  EXPECT_NEAR(inj.p[1], -0.5, 1e-10);
  EXPECT_NEAR(inj.q[1], -0.2, 1e-10);
  const std::complex<double> i = (r.state.phasor(0, 0) - r.state.phasor(1, 0)) / std::complex<double>(0.01, 0.05);
  const double losses = 0.01 * std::norm(i);
  EXPECT_NEAR(inj.p[0], 0.5 + losses, 1e-10);
}

TEST(PowerFlow, UnbalancedFeederConverges) {
  const NetworkCase net = load_fixture("feeder4.json");
  const AdmittanceMatrix y = build_admittance(net);
  const LoadProfile loads = LoadProfile::base(net);
  const PowerFlowResult r = newton_raphson_pf(net, y, loads);
  EXPECT_LE(pf_mismatch(net, y, loads, r.state), 1e-8);
  // the slack keeps its nominal phasors
  for (int ph = 0; ph < 3; ++ph) {
    EXPECT_NEAR(std::arg(r.state.phasor(0, ph)), phase_angle(ph), 1e-12);
  }
}

TEST(PowerFlow, BalancedThreePhaseMatchesSinglePhase) {
  const NetworkCase one = load("case9");
  const NetworkCase three = balanced_three_phase(one);
  const auto r1 = newton_raphson_pf(one, build_admittance(one), LoadProfile::base(one));
  const auto r3 = newton_raphson_pf(three, build_admittance(three), LoadProfile::base(three));
  for (int ph = 0; ph < 3; ++ph) {
    for (int b = 0; b < one.bus_count(); ++b) {
      const auto v = r3.state.phasor(b, ph) * std::polar(1.0, -phase_angle(ph));
      EXPECT_LT(std::abs(v - r1.state.phasor(b, 0)), 1e-10);
    }
  }
}

TEST(PowerFlow, ImpossibleLoadFailsToConverge) {
  const NetworkCase net = load_fixture("two_bus.json");
  const AdmittanceMatrix y = build_admittance(net);
  LoadProfile loads = LoadProfile::base(net);
  loads.p[1] = 50.0;
  EXPECT_THROW(newton_raphson_pf(net, y, loads), ConvergenceError);
}

TEST(PowerFlow, WarmStartGivesSameSolution) {
  const NetworkCase net = load("case57");
  const AdmittanceMatrix y = build_admittance(net);
  const LoadProfile loads = LoadProfile::base(net);
  const auto cold = newton_raphson_pf(net, y, loads);
  PowerFlowOptions warm;
  warm.initial = cold.state;
  const auto again = newton_raphson_pf(net, y, loads, warm);
  EXPECT_LT((again.state.x - cold.state.x).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(again.iterations, 1);
}
