#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.h"
#include "otter/core.h"
#include "otter/error.h"
#include "otter/ot_solver.h"

namespace otter {
namespace {

TransportProblem ToyProblem() {
  const ScoreMatrix s = validate_scores(Matrix::FromRows({{0.4, 0.6}, {0.1, 0.9}}));
  return TransportProblem::Uniform(scores_to_cost(s), LabelDistribution::Create({0.5, 0.5}));
}

struct Certificate {
  double residual = 0.0;
  double gap = 0.0;
  double slackness = 0.0;
  double dual_violation = 0.0;
  std::size_t support = 0;
};

// Recomputes every optimality condition from the raw plan and duals.
Certificate Check(const TransportProblem& p, const TransportPlan& plan) {
  Certificate c;
  c.residual = marginal_residual(plan, p);
  double primal = 0.0, dual = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) dual += p.row_masses()[i] * plan.row_duals[i];
  for (std::size_t j = 0; j < p.k(); ++j) dual += p.col_masses()[j] * plan.col_duals[j];
  for (std::size_t i = 0; i < p.n(); ++i) {
    for (std::size_t j = 0; j < p.k(); ++j) {
      const double pi = plan.coupling(i, j);
      primal += pi * p.cost()(i, j);
      const double reduced = p.cost()(i, j) - plan.row_duals[i] - plan.col_duals[j];
      if (pi > 0.0) {
        c.slackness = std::max(c.slackness, std::abs(reduced));
        ++c.support;
      }
      c.dual_violation = std::max(c.dual_violation, -reduced);
    }
  }
  c.gap = std::abs(primal - dual);
  return c;
}

TEST(SolveExact, ToyExample) {
  const ExactSolution sol = solve_exact(ToyProblem());
  EXPECT_EQ(sol.plan.coupling, Matrix::FromRows({{0.5, 0.0}, {0.0, 0.5}}));
  const Predictions p = plan_to_predictions(sol.plan);
  EXPECT_EQ(p.labels, (std::vector<int>{0, 1}));
}

TEST(SolveExact, SingleColumnCopiesRowMasses) {
  const TransportProblem p(Matrix::FromRows({{3.0}, {1.0}, {2.0}}), {0.2, 0.3, 0.5}, {1.0});
  const ExactSolution sol = solve_exact(p);
  EXPECT_NEAR(sol.plan.coupling(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(sol.plan.coupling(1, 0), 0.3, 1e-15);
  EXPECT_NEAR(sol.plan.coupling(2, 0), 0.5, 1e-15);
  EXPECT_NEAR(sol.plan.objective, 0.6 + 0.3 + 1.0, 1e-12);
}

TEST(SolveExact, RejectsUnbalancedAndMismatched) {
  try {
    TransportProblem(Matrix(2, 2, 1.0), {0.5, 0.5}, {0.5, 0.6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnbalancedProblem);
  }
  try {
    TransportProblem(Matrix(2, 2, 1.0), {0.5, 0.5}, {1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(SolveExact, FourByThreeMatchesVertexEnumeration) {
  oracle::Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix c(4, 3);
    for (double& v : c.data()) v = oracle::Uniform(rng, 0.0, 5.0);
    const std::vector<double> nu = oracle::RationalSimplex(rng, 3, 12);
    const TransportProblem p(c, {0.25, 0.25, 0.25, 0.25}, nu);
    const ExactSolution sol = solve_exact(p);
    oracle::VertexEnumeration ve(c, p.row_masses(), nu);
    EXPECT_NEAR(sol.plan.objective, ve.Minimum(), 1e-9);
  }
}

// Certificates and the vertex oracle on random instances, including
// degenerate rational marginals and zero-mass columns.
TEST(SolveExact, RandomInstancesAreCertifiedOptimal) {
  oracle::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const bool small = trial % 3 == 0;
    const std::size_t n = small ? oracle::Int(rng, 1, 6) : oracle::Int(rng, 1, 80);
    const std::size_t k = small ? oracle::Int(rng, 1, 4) : oracle::Int(rng, 1, 12);
    Matrix c(n, k);
    for (double& v : c.data()) v = oracle::Uniform(rng, 0.0, 10.0);
    std::vector<double> mu(n, 1.0 / static_cast<double>(n));
    if (trial % 2) mu = oracle::Simplex(rng, n);
    const std::vector<double> nu =
        trial % 4 < 2 ? oracle::RationalSimplex(rng, k, n) : oracle::Simplex(rng, k);
    const TransportProblem p(c, mu, nu);
    const ExactSolution sol = solve_exact(p);
    const Certificate cert = Check(p, sol.plan);
    EXPECT_LE(cert.residual, 1e-8);
    EXPECT_LE(cert.gap, 1e-8);
    EXPECT_LE(sol.diagnostics.duality_gap, 1e-8);
    EXPECT_GE(sol.diagnostics.duality_gap, -1e-9);
    EXPECT_LE(cert.slackness, 1e-7);
    EXPECT_LE(cert.dual_violation, 1e-8);
    EXPECT_LE(cert.support, n + k - 1);
    EXPECT_NEAR(sol.plan.objective, oracle::Objective(c, sol.plan.coupling), 1e-12);
    EXPECT_EQ(sol.plan.col_duals[0], 0.0);
    if (small) {
      oracle::VertexEnumeration ve(c, mu, nu);
      EXPECT_NEAR(sol.plan.objective, ve.Minimum(), 1e-9) << "n=" << n << " k=" << k;
    }
  }
}

TEST(SolveExact, Deterministic) {
  oracle::Rng rng(5);
  Matrix c(30, 5);
  for (double& v : c.data()) v = oracle::Uniform(rng);
  const TransportProblem p(c, std::vector<double>(30, 1.0 / 30), oracle::Simplex(rng, 5));
  const ExactSolution a = solve_exact(p), b = solve_exact(p);
  EXPECT_EQ(a.plan.coupling, b.plan.coupling);
  EXPECT_EQ(a.plan.row_duals, b.plan.row_duals);
  EXPECT_EQ(a.plan.col_duals, b.plan.col_duals);
}

TEST(SolveExact, ColumnAndRowShiftInvariance) {
  oracle::Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = oracle::Int(rng, 2, 40), k = oracle::Int(rng, 2, 8);
    Matrix c(n, k);
    for (double& v : c.data()) v = oracle::Uniform(rng, 0.0, 5.0);
    const std::vector<double> mu = oracle::Simplex(rng, n), nu = oracle::Simplex(rng, k);
    std::vector<double> eps(k), eta(n);
    for (double& e : eps) e = oracle::Uniform(rng, -2.0, 2.0);
    for (double& e : eta) e = oracle::Uniform(rng, -2.0, 2.0);
    Matrix shifted = c;
    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) shifted(i, j) += eps[j] + eta[i];
    }
    for (std::size_t j = 0; j < k; ++j) expected += nu[j] * eps[j];
    for (std::size_t i = 0; i < n; ++i) expected += mu[i] * eta[i];

    const ExactSolution base = solve_exact(TransportProblem(c, mu, nu));
    const ExactSolution moved = solve_exact(TransportProblem(shifted, mu, nu));
    EXPECT_NEAR(moved.plan.objective - base.plan.objective, expected, 1e-9);
    // The shifted optimum is optimal for the original cost.
    EXPECT_NEAR(oracle::Objective(c, moved.plan.coupling), base.plan.objective, 1e-8);
  }
}

TEST(SolveExact, ScalingEquivariance) {
  oracle::Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = oracle::Int(rng, 2, 40), k = oracle::Int(rng, 2, 6);
    const ScoreMatrix s = validate_scores(oracle::ScoreRows(rng, n, k));
    const CostMatrix c = scores_to_cost(s);
    const LabelDistribution nu = LabelDistribution::Create(oracle::Simplex(rng, k));
    const double lambda = oracle::Uniform(rng, 0.1, 10.0);
    Matrix scaled = c.values();
    for (double& v : scaled.data()) v *= lambda;
    const ExactSolution a = solve_exact(TransportProblem::Uniform(c, nu));
    const ExactSolution b = solve_exact(TransportProblem::Uniform(scaled, nu));
    EXPECT_NEAR(b.plan.objective, lambda * a.plan.objective, 1e-9 * std::max(1.0, lambda));
    EXPECT_EQ(plan_to_predictions(a.plan).labels, plan_to_predictions(b.plan).labels);
  }
}

TEST(SolveExact, ZeroMassColumnsStayInPlace) {
  const TransportProblem p(Matrix::FromRows({{1.0, 0.0, 2.0}, {0.5, 0.1, 0.0}}), {0.5, 0.5},
                           {0.5, 0.0, 0.5});
  const ExactSolution sol = solve_exact(p);
  EXPECT_EQ(sol.plan.k(), 3u);
  EXPECT_EQ(sol.plan.coupling(0, 1), 0.0);
  EXPECT_EQ(sol.plan.coupling(1, 1), 0.0);
  EXPECT_NEAR(sol.plan.objective, 0.5, 1e-12);
}

TEST(PlanToPredictions, Examples) {
  TransportPlan plan;
  plan.coupling = Matrix::FromRows({{0.25, 0.25}});
  EXPECT_EQ(plan_to_predictions(plan).labels, std::vector<int>{0});
  plan.coupling = Matrix::FromRows({{1.0 / 3, 0, 0}, {0, 1.0 / 3, 0}, {0, 0, 1.0 / 3}});
  EXPECT_EQ(plan_to_predictions(plan).labels, (std::vector<int>{0, 1, 2}));
}

TEST(SolveEntropic, ToyMatchesExact) {
  const EntropicResult r = solve_entropic(ToyProblem(), {.reg = 0.01});
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.log_domain);
  EXPECT_EQ(plan_to_predictions(r.plan).labels, (std::vector<int>{0, 1}));
}

TEST(SolveEntropic, ConstantCostGivesProductPlan) {
  const std::vector<double> mu{0.2, 0.3, 0.5}, nu{0.1, 0.6, 0.3};
  const EntropicResult r = solve_entropic(TransportProblem(Matrix(3, 3, 2.0), mu, nu), {.reg = 0.5});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.plan.coupling(i, j), mu[i] * nu[j], 1e-12);
  }
}

TEST(SolveEntropic, ResidualWithinToleranceOnRandomInstances) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const ScoreMatrix s = validate_scores(oracle::ScoreRows(rng, 50, 10));
    const LabelDistribution nu = LabelDistribution::Create(oracle::Simplex(rng, 10));
    const TransportProblem p = TransportProblem::Uniform(scores_to_cost(s), nu);
    for (EntropicDomain d : {EntropicDomain::kStandard, EntropicDomain::kLog}) {
      const EntropicResult r = solve_entropic(p, {.reg = 0.1, .tol = 1e-9, .domain = d});
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.marginal_residual, 1e-9);
      EXPECT_LE(marginal_residual(r.plan, p), 1e-9);
    }
  }
}

TEST(SolveEntropic, ObjectiveApproachesExactAsRegShrinks) {
  oracle::Rng rng(21);
  const ScoreMatrix s = validate_scores(oracle::ScoreRows(rng, 40, 4));
  const TransportProblem p =
      TransportProblem::Uniform(scores_to_cost(s), LabelDistribution::Create(oracle::Simplex(rng, 4)));
  const double exact = solve_exact(p).plan.objective;
  double previous = INFINITY;
  for (double reg : {1.0, 0.1, 0.01, 0.001}) {
    const double gap = solve_entropic(p, {.reg = reg}).plan.objective - exact;
    EXPECT_GE(gap, -1e-8);
    EXPECT_LE(gap, previous + 1e-9);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-2);
}

TEST(SolveEntropic, StandardDomainReportsUnderflow) {
  const TransportProblem p(Matrix::FromRows({{0.0, 27.6}, {27.6, 0.0}}), {0.5, 0.5}, {0.1, 0.9});
  try {
    solve_entropic(p, {.reg = 0.01, .domain = EntropicDomain::kStandard});
    FAIL() << "expected underflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalUnderflow);
  }
  const EntropicResult r = solve_entropic(p, {.reg = 0.01});
  EXPECT_TRUE(r.log_domain);
  EXPECT_TRUE(r.converged);
}

TEST(SolveEntropic, RejectsNonPositiveReg) {
  EXPECT_THROW(solve_entropic(ToyProblem(), {.reg = 0.0}), Error);
}

}  // namespace
}  // namespace otter
