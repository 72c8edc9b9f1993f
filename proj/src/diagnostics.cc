#include "otter/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "otter/error.h"

namespace otter {
namespace {

double SplitDistanceSq(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dp = std::max(a[i], 0.0) - std::max(b[i], 0.0);
    const double dm = std::max(-a[i], 0.0) - std::max(-b[i], 0.0);
    d += dp * dp + dm * dm;
  }
  return d;
}

double DiffSq(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

double accuracy(const Predictions& pred, const Predictions& truth) {
  if (pred.n() != truth.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "predictions have " + std::to_string(pred.n()) + " entries, truth has " +
                    std::to_string(truth.n()));
  }
  if (pred.n() == 0) throw Error(ErrorCode::kInvalidArgument, "no predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.n(); ++i) hits += pred.labels[i] == truth.labels[i];
  return static_cast<double>(hits) / static_cast<double>(pred.n());
}

double recall_std(const Predictions& pred, const Predictions& truth, std::size_t k) {
  if (pred.n() != truth.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "predictions and truth differ in length");
  }
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  Predictions t{truth.labels, k, truth.method};
  t.Validate();
  std::vector<double> hits(k, 0.0), total(k, 0.0);
  for (std::size_t i = 0; i < truth.n(); ++i) {
    total[truth.labels[i]] += 1.0;
    hits[truth.labels[i]] += pred.labels[i] == truth.labels[i];
  }
  std::vector<double> recall(k);
  double mean = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (total[j] == 0.0) {
      throw Error(ErrorCode::kMissingClass,
                  "class " + std::to_string(j + 1) + " never occurs in the truth labels");
    }
    recall[j] = 100.0 * hits[j] / total[j];
    mean += recall[j];
  }
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double r : recall) var += (r - mean) * (r - mean);
  return std::sqrt(var / static_cast<double>(k));
}

PerturbationReport perturbation_report(const TransportProblem& base,
                                       const TransportPlan& base_plan,
                                       const TransportProblem& pert,
                                       const TransportPlan& pert_plan) {
  const std::size_t n = base.n(), k = base.k();
  auto shaped = [&](const TransportPlan& p) {
    return p.n() == n && p.k() == k && p.row_duals.size() == n && p.col_duals.size() == k;
  };
  if (pert.n() != n || pert.k() != k || !shaped(base_plan) || !shaped(pert_plan)) {
    throw Error(ErrorCode::kDimensionMismatch, "base and perturbed problems differ in shape");
  }
  PerturbationReport r;
  r.delta_nu_sq = DiffSq(base.row_masses(), pert.row_masses()) +
                  DiffSq(base.col_masses(), pert.col_masses());
  double primal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double dc = pert.cost()(i, j) - base.cost()(i, j);
      if (dc > 0.0) r.delta_c_pos_sq += dc * dc;
      const double dp = base_plan.coupling(i, j) - pert_plan.coupling(i, j);
      r.plan_distance_sq += dp * dp;
      primal += base.cost()(i, j) * pert_plan.coupling(i, j);
    }
  }
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) dual += base.row_masses()[i] * pert_plan.row_duals[i];
  for (std::size_t j = 0; j < k; ++j) dual += base.col_masses()[j] * pert_plan.col_duals[j];
  r.suboptimality = primal - dual;
  r.dual_distance_sq = SplitDistanceSq(base_plan.row_duals, pert_plan.row_duals) +
                       SplitDistanceSq(base_plan.col_duals, pert_plan.col_duals);
  return r;
}

std::optional<double> empirical_kappa(const PerturbationReport& report) {
  const double bracket = report.bracket();
  if (!(bracket > 0.0)) return std::nullopt;
  return std::sqrt(std::max(0.0, report.plan_distance_sq + report.dual_distance_sq) / bracket);
}

}  // namespace otter
