#include <gtest/gtest.h>

#include "ddcqa/conic.hpp"
#include "ddcqa/error.hpp"
#include "ddcqa/rng.hpp"
#include "socp_oracle.hpp"

using namespace ddcqa;

namespace {

ConicProblem one_var(double lower, double upper, double cost) {
  ConicProblem p;
  const int x = p.add_var("x");
  p.objective = LinearExpr().add(x, cost);
  p.cones.push_back({ConeType::NonNeg, {LinearExpr(-lower).add(x, 1.0), LinearExpr(upper).add(x, -1.0)}, "box"});
  return p;
}

}  // namespace

TEST(LinearExpr, Evaluates) {
  const LinearExpr e = LinearExpr(1.5).add(0, 2.0).add(2, -1.0);
  EXPECT_DOUBLE_EQ(e.eval(Eigen::Vector3d(1.0, 5.0, 3.0)), 0.5);
}

TEST(QuadToSoc, MembershipMatchesQuadraticInequality) {
  KeyedStream rng{41};
  int checked = 0;
  for (int t = 0; t < 10; ++t) {
    const int d = 1 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd f(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) f(i, j) = rng.uniform(-1.0, 1.0);
    }
    if (t % 3 == 0) f.col(0).setZero();  // rank-deficient Hessians too
    ConvexQuadratic q;
    q.a = f * f.transpose();
    q.b = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) {
      q.vars.push_back(i);
      q.b[i] = rng.uniform(-1.0, 1.0);
    }
    q.c = rng.uniform(-1.0, 1.0);
    // bound depends on an extra variable, like a generator output
    const LinearExpr bound = LinearExpr(0.5).add(d, 2.0);
    const ConeBlock block = quad_to_soc(q, bound, q.vars, "q");
    EXPECT_EQ(block.type, q.a.isZero() ? ConeType::NonNeg : ConeType::RotatedSOC);
    for (int s = 0; s < 100; ++s) {
      Eigen::VectorXd x(d + 1);
      for (int i = 0; i <= d; ++i) x[i] = rng.uniform(-1.5, 1.5);
      const double slack = bound.eval(x) - q.eval(x.head(d));
      if (std::abs(slack) < 1e-9) continue;
      EXPECT_EQ(cone_contains(block, x, 1e-12), slack > 0.0);
      ++checked;
    }
  }
  EXPECT_GE(checked, 990);
}

TEST(QuadToSoc, ZeroHessianGivesLinearRow) {
  ConvexQuadratic q;
  q.vars = {0};
  q.a = Eigen::MatrixXd::Zero(1, 1);
  q.b = Eigen::VectorXd::Constant(1, 2.0);
  q.c = 1.0;
  const ConeBlock block = quad_to_soc(q, LinearExpr(3.0), {0}, "lin");
  EXPECT_EQ(block.type, ConeType::NonNeg);
  ASSERT_EQ(block.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(block.rows[0].eval(Eigen::VectorXd::Constant(1, 1.0)), 0.0);
}

TEST(QuadToSoc, RejectsIndefiniteHessian) {
  ConvexQuadratic q;
  q.vars = {0, 1};
  q.a = Eigen::Matrix2d{{1.0, 0.0}, {0.0, -1.0}};
  q.b = Eigen::Vector2d::Zero();
  EXPECT_THROW(quad_to_soc(q, LinearExpr(1.0), {0, 1}, "bad"), NumericError);
}

TEST(Validate, Errors) {
  ConicProblem p = one_var(0.0, 1.0, 1.0);
  EXPECT_NO_THROW(p.validate());
  ConicProblem bad = p;
  bad.objective.add(3, 1.0);
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.cones.push_back({ConeType::RotatedSOC, {LinearExpr(1.0), LinearExpr(1.0)}, "short"});
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.cones.push_back({ConeType::NonNeg, {}, "empty"});
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = p;
  bad.cones[0].tag.clear();
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Ipm, LinearProgram) {
  const ConicSolution s = solve_ipm(one_var(-1.0, 2.0, -3.0));
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-7);
  EXPECT_NEAR(s.objective, -6.0, 1e-7);
}

TEST(Ipm, DiskMinimum) {
  // min x + y over ||(x, y) - (1, 2)|| <= 3
  ConicProblem p;
  const int x = p.add_var("x");
  const int y = p.add_var("y");
  p.objective = LinearExpr().add(x, 1.0).add(y, 1.0);
  p.cones.push_back({ConeType::SOC, {LinearExpr(3.0), LinearExpr(-1.0).add(x, 1.0), LinearExpr(-2.0).add(y, 1.0)}, "disk"});
  const ConicSolution s = solve_ipm(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective, 3.0 - 3.0 * std::sqrt(2.0), 1e-7);
}

TEST(Ipm, EqualityAndRotatedCone) {
  // min t subject to t >= x^2 (rotated cone with a constant 1/2 row) and x = 2
  ConicProblem p;
  const int t = p.add_var("t");
  const int x = p.add_var("x");
  p.objective = LinearExpr().add(t, 1.0);
  p.equalities.push_back(LinearExpr(-2.0).add(x, 1.0));
  p.cones.push_back({ConeType::RotatedSOC, {LinearExpr().add(t, 1.0), LinearExpr(0.5), LinearExpr().add(x, 1.0)}, "epi"});
  const ConicSolution s = solve_ipm(p);
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective, 4.0, 1e-7);
  EXPECT_EQ(s.y.size(), 1);
}

TEST(Ipm, DetectsInfeasibility) {
  EXPECT_EQ(solve_ipm(one_var(1.0, 0.0, 1.0)).status, SolveStatus::Infeasible);
}

TEST(Ipm, DetectsUnboundedness) {
  ConicProblem p;
  const int x = p.add_var("x");
  p.objective = LinearExpr().add(x, -1.0);
  p.cones.push_back({ConeType::NonNeg, {LinearExpr().add(x, 1.0)}, "lower"});
  EXPECT_EQ(solve_ipm(p).status, SolveStatus::Unbounded);
}

TEST(Ipm, RandomSocpsAgreeWithBruteForce) {
  KeyedStream rng{42};
  for (int t = 0; t < 25; ++t) {
    const auto s = testing_support::random_socp(rng);
    const ConicSolution sol = solve_ipm(s.problem);
    ASSERT_EQ(sol.status, SolveStatus::Optimal) << "problem " << t;
    // The brute-force value is attained by a feasible point, so it bounds from above.
    const double brute = testing_support::brute_force_minimum(s);
    EXPECT_LE(sol.objective, brute + 1e-7) << "problem " << t;
    EXPECT_NEAR(sol.objective, brute, 1e-4) << "problem " << t;
    EXPECT_LE(sol.residuals.max(), 1e-8);
  }
}

TEST(Kkt, RecomputedResidualsMatchReported) {
  KeyedStream rng{43};
  for (int t = 0; t < 10; ++t) {
    const auto s = testing_support::random_socp(rng);
    const ConicSolution sol = solve_ipm(s.problem);
    const KktResiduals r = kkt_residuals(s.problem, sol);
    EXPECT_DOUBLE_EQ(r.primal, sol.residuals.primal);
    EXPECT_DOUBLE_EQ(r.dual, sol.residuals.dual);
    EXPECT_DOUBLE_EQ(r.gap, sol.residuals.gap);
    // perturbing the point shows up in the residuals
    Eigen::VectorXd x = sol.x;
    x[0] += 10.0;
    EXPECT_GT(kkt_residuals(s.problem, x, sol.y, sol.z).max(), 1e-3);
  }
}

TEST(TextFormat, RoundTrip) {
  KeyedStream rng{44};
  const auto s = testing_support::random_socp(rng);
  const std::string text = write_conic_text(s.problem);
  const ConicProblem back = parse_conic_text(text);
  EXPECT_EQ(back, s.problem);
  EXPECT_EQ(write_conic_text(back), text);
}

TEST(TextFormat, ErrorsCarryLineNumbers) {
  const std::string text = write_conic_text(one_var(0.0, 1.0, 1.0));
  std::string broken = text;
  const auto pos = broken.find("cone nonneg");
  ASSERT_NE(pos, std::string::npos);
  broken.replace(pos, 11, "cone square");
  try {
    parse_conic_text(broken);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 1);
  }
}
