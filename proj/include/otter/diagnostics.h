#ifndef OTTER_DIAGNOSTICS_H_
#define OTTER_DIAGNOSTICS_H_

#include <cstddef>
#include <optional>

#include "otter/core.h"
#include "otter/ot_solver.h"

namespace otter {

// Fraction of matching labels. Throws Error{kDimensionMismatch} on differing
// lengths and Error{kInvalidArgument} on empty input.
double accuracy(const Predictions& pred, const Predictions& truth);

// Population standard deviation of per-class recalls, in percentage points.
// Throws Error{kMissingClass} if a class in [0, k) never occurs in `truth`.
double recall_std(const Predictions& pred, const Predictions& truth, std::size_t k);

// Terms of the LP perturbation bound comparing an exactly solved base problem
// (C, g) with a perturbed one. Duals enter in split form
// w = (u+, v+, u-, v-) so that g^T w = mu.u + nu.v.
struct PerturbationReport {
  double delta_nu_sq = 0.0;       // squared change of both marginals
  double delta_c_pos_sq = 0.0;    // || [C' - C]_+ ||^2
  double suboptimality = 0.0;     // <C, pi'> - g^T w'; signed
  double plan_distance_sq = 0.0;  // || pi - pi' ||_F^2
  double dual_distance_sq = 0.0;  // || w - w' ||^2

  double bracket() const { return delta_nu_sq + delta_c_pos_sq + suboptimality * suboptimality; }
};

// Throws Error{kDimensionMismatch} unless all shapes agree.
PerturbationReport perturbation_report(const TransportProblem& base,
                                       const TransportPlan& base_plan,
                                       const TransportProblem& pert,
                                       const TransportPlan& pert_plan);

// Smallest kappa for which the bound holds on this pair; empty when the
// bracket is zero.
std::optional<double> empirical_kappa(const PerturbationReport& report);

}  // namespace otter

#endif  // OTTER_DIAGNOSTICS_H_
