#include "otter/adapter.h"

#include <string>

#include "otter/error.h"

namespace otter {

Predictions zero_shot(const ScoreMatrix& s) {
  Predictions p;
  p.k = s.k();
  p.method = Method::kZeroShot;
  p.labels.resize(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) p.labels[i] = argmax(s.row(i));
  return p;
}

OtterResult otter_detailed(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                           const SolverConfig& solver) {
  if (s.k() != nu_hat.k()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "scores have " + std::to_string(s.k()) +
                    " classes but the label distribution has " +
                    std::to_string(nu_hat.k()));
  }
  const TransportProblem problem =
      TransportProblem::Uniform(scores_to_cost(s, solver.clamp_eps), nu_hat);
  OtterResult out;
  if (solver.kind == SolverKind::kExact) {
    out.plan = solve_exact(problem).plan;
  } else {
    out.plan = solve_entropic(problem, solver.entropic).plan;
  }
  out.predictions = plan_to_predictions(out.plan);
  out.predictions.method = Method::kOtter;
  return out;
}

Predictions otter(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                  const SolverConfig& solver) {
  return otter_detailed(s, nu_hat, solver).predictions;
}

Hierarchy Hierarchy::Create(std::vector<std::vector<int>> groups, std::size_t k) {
  if (groups.empty()) throw Error(ErrorCode::kInvalidArgument, "hierarchy has no groups");
  std::vector<int> group_of(k, -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "group " + std::to_string(g + 1) + " is empty");
    }
    for (int sub : groups[g]) {
      if (sub < 0 || static_cast<std::size_t>(sub) >= k) {
        throw Error(ErrorCode::kInvalidArgument,
                    "subclass " + std::to_string(sub + 1) + " is outside [1, " +
                        std::to_string(k) + "]");
      }
      if (group_of[sub] >= 0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "subclass " + std::to_string(sub + 1) + " appears in two groups");
      }
      group_of[sub] = static_cast<int>(g);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (group_of[j] < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subclass " + std::to_string(j + 1) + " belongs to no group");
    }
  }
  return Hierarchy(std::move(groups), std::move(group_of));
}

ScoreMatrix superclass_scores(const ScoreMatrix& s_sub, const Hierarchy& h) {
  if (s_sub.k() != h.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "hierarchy and scores disagree on K");
  }
  Matrix out(s_sub.n(), h.num_groups());
  for (std::size_t i = 0; i < s_sub.n(); ++i) {
    for (std::size_t j = 0; j < s_sub.k(); ++j) out(i, h.group_of(static_cast<int>(j))) += s_sub(i, j);
  }
  return validate_scores(std::move(out));
}

HierarchicalDistribution split_distribution(const LabelDistribution& nu_sub,
                                            const Hierarchy& h) {
  if (nu_sub.k() != h.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "hierarchy and distribution disagree on K");
  }
  std::vector<double> super(h.num_groups(), 0.0);
  std::vector<LabelDistribution> conditionals;
  for (std::size_t g = 0; g < h.num_groups(); ++g) {
    std::vector<double> cond;
    for (int sub : h.group(g)) {
      cond.push_back(nu_sub[sub]);
      super[g] += nu_sub[sub];
    }
    if (super[g] > 0.0) {
      for (double& c : cond) c /= super[g];
      conditionals.push_back(LabelDistribution::Create(std::move(cond)));
    } else {
      conditionals.push_back(LabelDistribution::Uniform(cond.size()));
    }
  }
  return {LabelDistribution::Create(std::move(super)), std::move(conditionals)};
}

Predictions h_otter(const std::optional<ScoreMatrix>& s_super, const ScoreMatrix& s_sub,
                    const Hierarchy& h, const LabelDistribution& nu_super,
                    const std::vector<LabelDistribution>& nu_sub_given_super,
                    const SolverConfig& solver) {
  if (s_sub.k() != h.num_classes()) {
    throw Error(ErrorCode::kDimensionMismatch, "hierarchy and subclass scores disagree on K");
  }
  if (nu_super.k() != h.num_groups() || nu_sub_given_super.size() != h.num_groups()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need one superclass mass and one conditional per group");
  }
  for (std::size_t g = 0; g < h.num_groups(); ++g) {
    if (nu_sub_given_super[g].k() != h.group(g).size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "conditional for group " + std::to_string(g + 1) + " has the wrong size");
    }
  }
  const ScoreMatrix super_scores = s_super ? *s_super : superclass_scores(s_sub, h);
  if (super_scores.n() != s_sub.n() || super_scores.k() != h.num_groups()) {
    throw Error(ErrorCode::kDimensionMismatch, "superclass scores have the wrong shape");
  }

  const Predictions stage1 = otter(super_scores, nu_super, solver);
  std::vector<std::vector<std::size_t>> members(h.num_groups());
  for (std::size_t i = 0; i < stage1.n(); ++i) members[stage1.labels[i]].push_back(i);

  Predictions out;
  out.k = s_sub.k();
  out.method = Method::kHOtter;
  out.labels.assign(s_sub.n(), -1);
  for (std::size_t g = 0; g < h.num_groups(); ++g) {
    const auto& rows = members[g];
    const auto& subs = h.group(g);
    if (rows.empty()) {
      if (nu_super[g] > 0.0) {
        throw Error(ErrorCode::kEmptyPartition,
                    "superclass " + std::to_string(g + 1) +
                        " received no points but its distribution has mass");
      }
      continue;
    }
    Matrix local(rows.size(), subs.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < subs.size(); ++c) {
        local(r, c) = s_sub(rows[r], subs[c]);
        sum += local(r, c);
      }
      for (std::size_t c = 0; c < subs.size(); ++c) {
        local(r, c) = sum > 0.0 ? local(r, c) / sum : 1.0 / static_cast<double>(subs.size());
      }
    }
    const Predictions within = otter(validate_scores(std::move(local)), nu_sub_given_super[g], solver);
    for (std::size_t r = 0; r < rows.size(); ++r) out.labels[rows[r]] = subs[within.labels[r]];
  }
  return out;
}

}  // namespace otter
