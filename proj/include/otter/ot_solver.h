#ifndef OTTER_OT_SOLVER_H_
#define OTTER_OT_SOLVER_H_

#include <cstddef>
#include <vector>

#include "otter/core.h"
#include "otter/matrix.h"

namespace otter {

inline constexpr double kMassBalanceTolerance = 1e-9;

// min <pi, C> over couplings with row sums `row_masses` and column sums
// `col_masses`. The cost may be any finite real matrix so that shifted or
// perturbed problems can be posed directly; scores_to_cost output is the
// usual source.
class TransportProblem {
 public:
  // Throws Error{kDimensionMismatch | kUnbalancedProblem | kNonFiniteEntry |
  // kInvalidArgument}.
  TransportProblem(Matrix cost, std::vector<double> row_masses,
                   std::vector<double> col_masses);

  // Uniform 1/n row masses, the setting used for classification.
  static TransportProblem Uniform(const CostMatrix& cost, const LabelDistribution& nu);
  static TransportProblem Uniform(Matrix cost, const LabelDistribution& nu);

  std::size_t n() const { return cost_.rows(); }
  std::size_t k() const { return cost_.cols(); }
  const Matrix& cost() const { return cost_; }
  const std::vector<double>& row_masses() const { return row_masses_; }
  const std::vector<double>& col_masses() const { return col_masses_; }

 private:
  Matrix cost_;
  std::vector<double> row_masses_;
  std::vector<double> col_masses_;
};

struct LpDiagnostics {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  std::size_t iterations = 0;  // simplex pivots
};

struct ExactSolution {
  TransportPlan plan;
  LpDiagnostics diagnostics;
};

// Network simplex on the bipartite transportation graph with Bland's rule for
// both entering and leaving arcs. The returned plan is a basic solution, so at
// most n + K - 1 entries are positive. Dual potentials are normalized so the
// first column potential is zero. Deterministic.
ExactSolution solve_exact(const TransportProblem& problem);

enum class EntropicDomain {
  kAuto,      // log domain iff max cost / reg > kLogDomainThreshold
  kStandard,  // scaling vectors; throws kNumericalUnderflow if the kernel dies
  kLog,       // stabilized log-sum-exp updates
};

inline constexpr double kLogDomainThreshold = 30.0;

struct EntropicOptions {
  double reg = 0.01;
  std::size_t max_iter = 100000;
  double tol = 1e-9;  // max absolute marginal residual
  EntropicDomain domain = EntropicDomain::kAuto;
};

struct EntropicResult {
  TransportPlan plan;  // duals are the scaled log potentials
  std::size_t iterations = 0;
  double marginal_residual = 0.0;
  bool converged = false;
  bool log_domain = false;
};

// Sinkhorn scaling for the entropy-regularized problem.
EntropicResult solve_entropic(const TransportProblem& problem,
                              const EntropicOptions& options = {});

// Row-wise argmax of the coupling, ties to the lowest class.
Predictions plan_to_predictions(const TransportPlan& plan);

// max over all rows and columns of |marginal - target|.
double marginal_residual(const TransportPlan& plan, const TransportProblem& problem);

}  // namespace otter

#endif  // OTTER_OT_SOLVER_H_
