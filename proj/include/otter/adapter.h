#ifndef OTTER_ADAPTER_H_
#define OTTER_ADAPTER_H_

#include <cstddef>
#include <optional>
#include <vector>

#include "otter/core.h"
#include "otter/ot_solver.h"

namespace otter {

enum class SolverKind { kExact, kEntropic };

struct SolverConfig {
  SolverKind kind = SolverKind::kExact;
  EntropicOptions entropic;
  double clamp_eps = kDefaultClampEps;
};

// Row-wise argmax of the scores.
Predictions zero_shot(const ScoreMatrix& s);

struct OtterResult {
  Predictions predictions;
  TransportPlan plan;
};

// Rebalances predictions so their label distribution follows `nu_hat`:
// cost = -log(score), uniform row masses, transport, then row-wise argmax.
// Throws Error{kDimensionMismatch} when the class counts differ, plus
// anything the chosen solver throws.
OtterResult otter_detailed(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                           const SolverConfig& solver = {});
Predictions otter(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                  const SolverConfig& solver = {});

// A two-level label hierarchy: superclass g owns subclasses groups()[g].
class Hierarchy {
 public:
  // `groups` uses 0-based subclass indices and must partition [0, k).
  // Throws Error{kInvalidArgument}.
  static Hierarchy Create(std::vector<std::vector<int>> groups, std::size_t k);

  std::size_t num_groups() const { return groups_.size(); }
  std::size_t num_classes() const { return group_of_.size(); }
  const std::vector<std::vector<int>>& groups() const { return groups_; }
  const std::vector<int>& group(std::size_t g) const { return groups_[g]; }
  int group_of(int subclass) const { return group_of_[subclass]; }

 private:
  Hierarchy(std::vector<std::vector<int>> groups, std::vector<int> group_of)
      : groups_(std::move(groups)), group_of_(std::move(group_of)) {}

  std::vector<std::vector<int>> groups_;
  std::vector<int> group_of_;
};

// Sums subclass score columns within each group.
ScoreMatrix superclass_scores(const ScoreMatrix& s_sub, const Hierarchy& h);

// Splits a distribution over all subclasses into superclass masses and
// per-group conditionals. A group with zero total mass gets a uniform
// conditional (it never receives points).
struct HierarchicalDistribution {
  LabelDistribution super;
  std::vector<LabelDistribution> conditionals;
};
HierarchicalDistribution split_distribution(const LabelDistribution& nu_sub,
                                            const Hierarchy& h);

// Two-stage OTTER. Stage 1 assigns superclass pseudo-labels with `nu_super`.
// Stage 2 solves one OTTER problem per superclass over the points it
// received, using that group's subclass scores renormalized per row and the
// group's conditional distribution. When `s_super` is empty the superclass
// scores come from superclass_scores(). Throws Error{kEmptyPartition} when a
// superclass with positive mass receives no points.
Predictions h_otter(const std::optional<ScoreMatrix>& s_super, const ScoreMatrix& s_sub,
                    const Hierarchy& h, const LabelDistribution& nu_super,
                    const std::vector<LabelDistribution>& nu_sub_given_super,
                    const SolverConfig& solver = {});

}  // namespace otter

#endif  // OTTER_ADAPTER_H_
