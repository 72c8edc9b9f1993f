#ifndef OTTER_SHIFT_EST_H_
#define OTTER_SHIFT_EST_H_

#include <cstddef>
#include <vector>

#include "otter/core.h"

namespace otter {

// Soft confusion: row j is the mean score vector over source samples whose
// true label is j.
struct ConfusionMatrix {
  Matrix a;
  std::vector<std::size_t> counts;

  std::size_t k() const { return a.rows(); }
};

// Throws Error{kMissingClass} when some class has no labeled sample.
ConfusionMatrix soft_confusion(const ScoreMatrix& s_src, const Predictions& y_src);

enum class BbseVariant {
  kInverse,   // solve A^T q = mean target score, clip, renormalize
  kMultiply,  // A * mean target score, renormalized
};

struct BbseResult {
  LabelDistribution estimate;
  LabelDistribution naive;      // mean target score
  std::vector<double> weights;  // estimate / nu_src, 0 where nu_src is 0
  double condition_number = 1.0;
};

// Black-box shift estimation. The inverse variant throws
// Error{kSingularConfusion} when the confusion's 2-norm condition number
// exceeds kMaxConfusionCondition.
inline constexpr double kMaxConfusionCondition = 1e12;

BbseResult bbse_detailed(const ConfusionMatrix& cm, const ScoreMatrix& s_tgt,
                         const LabelDistribution& nu_src,
                         BbseVariant variant = BbseVariant::kInverse);
LabelDistribution bbse_estimate(const ConfusionMatrix& cm, const ScoreMatrix& s_tgt,
                                const LabelDistribution& nu_src,
                                BbseVariant variant = BbseVariant::kInverse);

// Total variation distance, half the L1 distance.
double estimation_error(const LabelDistribution& nu_true, const LabelDistribution& nu_hat);

}  // namespace otter

#endif  // OTTER_SHIFT_EST_H_
