#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.h"
#include "otter/core.h"
#include "otter/diagnostics.h"
#include "otter/error.h"
#include "otter/ot_solver.h"

namespace otter {
namespace {

Predictions P(std::vector<int> labels, std::size_t k) { return Predictions{std::move(labels), k}; }

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(P({0, 1, 1}, 2), P({0, 1, 1}, 2)), 1.0);
  EXPECT_EQ(accuracy(P({1, 0}, 2), P({0, 1}, 2)), 0.0);
  EXPECT_EQ(accuracy(P({0, 1}, 2), P({0, 0}, 2)), 0.5);
  EXPECT_THROW(accuracy(P({0}, 2), P({0, 1}, 2)), Error);
}

TEST(RecallStd, Examples) {
  EXPECT_EQ(recall_std(P({0, 1, 2}, 3), P({0, 1, 2}, 3), 3), 0.0);
  EXPECT_DOUBLE_EQ(recall_std(P({0, 0}, 2), P({0, 1}, 2), 2), 50.0);
  // Every class recalled half the time.
  EXPECT_NEAR(recall_std(P({0, 1, 1, 2, 2, 0}, 3), P({0, 0, 1, 1, 2, 2}, 3), 3), 0.0, 1e-12);
}

TEST(RecallStd, MissingClassThrows) {
  try {
    recall_std(P({0, 1}, 3), P({0, 1}, 3), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingClass);
  }
}

TEST(RecallStd, PopulationNotSampleStd) {
  // Recalls 1, 0.5, 0: population std of {100, 50, 0} is sqrt(5000/3).
  const Predictions truth = P({0, 0, 1, 1, 2, 2}, 3);
  const Predictions pred = P({0, 0, 1, 0, 0, 1}, 3);
  EXPECT_NEAR(recall_std(pred, truth, 3), std::sqrt(5000.0 / 3.0), 1e-12);
}

TEST(RecallStd, InvariantToClassRelabeling) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = oracle::Int(rng, 2, 6);
    const std::size_t n = oracle::Int(rng, 3 * k, 60);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = i < k ? static_cast<int>(i) : static_cast<int>(oracle::Int(rng, 0, k - 1));
      pred[i] = static_cast<int>(oracle::Int(rng, 0, k - 1));
    }
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> truth2(n), pred2(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth2[i] = perm[truth[i]];
      pred2[i] = perm[pred[i]];
    }
    EXPECT_NEAR(recall_std(P(pred, k), P(truth, k), k), recall_std(P(pred2, k), P(truth2, k), k),
                1e-9);
  }
}

struct Solved {
  TransportProblem problem;
  TransportPlan plan;
};

Solved Solve(Matrix cost, std::vector<double> mu, std::vector<double> nu) {
  TransportProblem problem(std::move(cost), std::move(mu), std::move(nu));
  TransportPlan plan = solve_exact(problem).plan;
  return {std::move(problem), std::move(plan)};
}

Matrix RandomCost(oracle::Rng& rng, std::size_t n, std::size_t k) {
  Matrix c(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) c(i, j) = oracle::Uniform(rng, 0.0, 5.0);
  }
  return c;
}

TEST(PerturbationReport, IdenticalInputsGiveZeros) {
  oracle::Rng rng(2);
  const Solved a = Solve(RandomCost(rng, 8, 3), std::vector<double>(8, 1.0 / 8),
                         oracle::Simplex(rng, 3));
  const PerturbationReport r = perturbation_report(a.problem, a.plan, a.problem, a.plan);
  EXPECT_EQ(r.delta_nu_sq, 0.0);
  EXPECT_EQ(r.delta_c_pos_sq, 0.0);
  EXPECT_EQ(r.plan_distance_sq, 0.0);
  EXPECT_EQ(r.dual_distance_sq, 0.0);
  EXPECT_NEAR(r.suboptimality, 0.0, 1e-9);
  EXPECT_FALSE(empirical_kappa(PerturbationReport{}).has_value());
}

TEST(PerturbationReport, MarginalChange) {
  Matrix c = Matrix::FromRows({{1.0, 2.0}, {2.0, 1.0}, {0.5, 0.5}, {3.0, 0.0}});
  const std::vector<double> mu(4, 0.25);
  const Solved a = Solve(c, mu, {0.5, 0.5});
  const Solved b = Solve(c, mu, {0.6, 0.4});
  const PerturbationReport r = perturbation_report(a.problem, a.plan, b.problem, b.plan);
  EXPECT_NEAR(r.delta_nu_sq, 0.02, 1e-15);
  EXPECT_EQ(r.delta_c_pos_sq, 0.0);
  EXPECT_GT(r.plan_distance_sq, 0.0);
  const auto kappa = empirical_kappa(r);
  ASSERT_TRUE(kappa.has_value());
  EXPECT_TRUE(std::isfinite(*kappa));
  EXPECT_GE(*kappa, 0.0);
}

TEST(PerturbationReport, ColumnShiftKeepsPlan) {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = oracle::Int(rng, 2, 30), k = oracle::Int(rng, 2, 6);
    const Matrix c = RandomCost(rng, n, k);
    const std::vector<double> nu = oracle::Simplex(rng, k);
    const std::vector<double> mu(n, 1.0 / n);
    Matrix shifted = c;
    std::vector<double> eps(k);
    double expected = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      eps[j] = oracle::Uniform(rng, -1.0, 1.0);
      expected -= nu[j] * eps[j];
      for (std::size_t i = 0; i < n; ++i) shifted(i, j) += eps[j];
    }
    const Solved a = Solve(c, mu, nu), b = Solve(shifted, mu, nu);
    const PerturbationReport r = perturbation_report(a.problem, a.plan, b.problem, b.plan);
    EXPECT_NEAR(r.plan_distance_sq, 0.0, 1e-18);
    EXPECT_EQ(r.delta_nu_sq, 0.0);
    EXPECT_NEAR(r.suboptimality, expected, 1e-9);
  }
}

TEST(PerturbationReport, ImprovingCostsHaveNoPositivePart) {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = oracle::Int(rng, 2, 20), k = oracle::Int(rng, 2, 5);
    const Matrix c = RandomCost(rng, n, k);
    Matrix lower = c;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) lower(i, j) -= oracle::Uniform(rng, 0.0, 0.5);
    }
    const std::vector<double> mu(n, 1.0 / n), nu = oracle::Simplex(rng, k);
    const Solved a = Solve(c, mu, nu), b = Solve(lower, mu, nu);
    const PerturbationReport r = perturbation_report(a.problem, a.plan, b.problem, b.plan);
    EXPECT_EQ(r.delta_c_pos_sq, 0.0);
    EXPECT_GE(r.plan_distance_sq, 0.0);
    EXPECT_GE(r.dual_distance_sq, 0.0);
  }
}

TEST(PerturbationReport, PositivePartOfCostChange) {
  const Matrix c = Matrix::FromRows({{1.0, 2.0}, {2.0, 1.0}});
  const Matrix d = Matrix::FromRows({{1.5, 1.0}, {2.0, 1.25}});
  const Solved a = Solve(c, {0.5, 0.5}, {0.5, 0.5}), b = Solve(d, {0.5, 0.5}, {0.5, 0.5});
  const PerturbationReport r = perturbation_report(a.problem, a.plan, b.problem, b.plan);
  EXPECT_NEAR(r.delta_c_pos_sq, 0.25 + 0.0625, 1e-15);
}

TEST(PerturbationReport, DimensionMismatchThrows) {
  const Solved a = Solve(Matrix(2, 2, 1.0), {0.5, 0.5}, {0.5, 0.5});
  const Solved b = Solve(Matrix(3, 2, 1.0), {0.4, 0.3, 0.3}, {0.5, 0.5});
  try {
    perturbation_report(a.problem, a.plan, b.problem, b.plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(EmpiricalKappa, FiniteAcrossRepeatedPerturbations) {
  oracle::Rng rng(8);
  const std::size_t n = 20, k = 4;
  const Matrix c = RandomCost(rng, n, k);
  const std::vector<double> mu(n, 1.0 / n), nu = oracle::Simplex(rng, k);
  const Solved base = Solve(c, mu, nu);
  double worst = 0.0;
  int defined = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix noisy = c;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        noisy(i, j) = std::max(0.0, noisy(i, j) + oracle::Uniform(rng, -0.3, 0.3));
      }
    }
    std::vector<double> nu2 = nu;
    for (double& v : nu2) v += oracle::Uniform(rng, 0.0, 0.05);
    const double sum = std::accumulate(nu2.begin(), nu2.end(), 0.0);
    for (double& v : nu2) v /= sum;
    const Solved pert = Solve(noisy, mu, nu2);
    const auto kappa = empirical_kappa(perturbation_report(base.problem, base.plan,
                                                           pert.problem, pert.plan));
    if (!kappa) continue;
    ++defined;
    ASSERT_TRUE(std::isfinite(*kappa));
    worst = std::max(worst, *kappa);
  }
  EXPECT_GT(defined, 90);
  EXPECT_TRUE(std::isfinite(worst));
}

}  // namespace
}  // namespace otter
