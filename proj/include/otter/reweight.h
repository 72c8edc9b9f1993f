#ifndef OTTER_REWEIGHT_H_
#define OTTER_REWEIGHT_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "otter/core.h"

namespace otter {

// Per-class multiplicative score weights. Scale-free at the prediction level.
class ReweightVector {
 public:
  // Throws Error{kInvalidArgument} unless every entry is finite and > 0.
  static ReweightVector Create(std::vector<double> r);
  static ReweightVector Ones(std::size_t k) { return ReweightVector(std::vector<double>(k, 1.0)); }

  std::size_t k() const { return r_.size(); }
  double operator[](std::size_t j) const { return r_[j]; }
  const std::vector<double>& values() const { return r_; }

 private:
  explicit ReweightVector(std::vector<double> r) : r_(std::move(r)) {}

  std::vector<double> r_;
};

// P_r(j|x) = r_j s_j(x) / sum_j' r_j' s_j'(x). Rows whose reweighted mass is
// zero keep their original scores.
ScoreMatrix apply_reweight(const ScoreMatrix& s, const ReweightVector& r);

// softmax(log(s) / temperature) per row; zero scores stay zero.
ScoreMatrix temper_scores(const ScoreMatrix& s, double temperature);

struct AdamOptions {
  double lr = 1e-2;
  std::size_t steps = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW)
};

struct RotterOptions {
  AdamOptions adam;
  double clamp_eps = kDefaultClampEps;
  std::uint64_t seed = 0;  // full-batch fit; kept so configs round-trip
};

struct RotterFit {
  ReweightVector r = ReweightVector::Ones(1);
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss after each step, first entry at init
  bool degenerate_labels = false;    // some class never appears in the pseudo-labels
  std::vector<int> absent_classes;
};

// Fits r = exp(rho) by minimizing the mean cross-entropy of
// apply_reweight(s_val, r) against `pseudo`. Steps that would raise the loss
// are retried at half the step size and skipped if that never helps, so the
// loss history is non-increasing.
RotterFit fit_rotter(const ScoreMatrix& s_val, const Predictions& pseudo,
                     const RotterOptions& options = {});

// Mean cross-entropy of reweighted scores against labels.
double reweight_cross_entropy(const ScoreMatrix& s, const Predictions& labels,
                              const ReweightVector& r, double clamp_eps = kDefaultClampEps);

struct PriorMatchingOptions {
  double temperature = 1.0;
  AdamOptions adam{.lr = 1e-3, .steps = 1000, .weight_decay = 1e-2};
  std::uint64_t seed = 0;
};

struct PriorMatchingFit {
  ReweightVector r = ReweightVector::Ones(1);
  double temperature = 1.0;
  double lr = 0.0;
  double mismatch = 0.0;  // sum_j |mean_i P_r(j|x_i) - nu_j| at the returned r
};

// Prior matching: finds r so that the mean reweighted (tempered) scores match
// nu_hat in L1. Returns the best iterate seen; non-convergence shows up as a
// large mismatch rather than an error.
PriorMatchingFit fit_prior_matching(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                                    const PriorMatchingOptions& options = {});

// argmax of apply_reweight(temper_scores(s, T), r).
Predictions predict_reweighted(const ScoreMatrix& s, const ReweightVector& r,
                               double temperature = 1.0);

struct PmGrid {
  std::vector<double> temperatures{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  std::vector<double> lrs{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
};

struct PmGridPoint {
  double temperature = 0.0;
  double lr = 0.0;
  double val_accuracy = 0.0;
  double mismatch = 0.0;
};

struct PmGridResult {
  PriorMatchingFit best;
  double val_accuracy = 0.0;
  std::vector<PmGridPoint> points;  // in grid order
};

// Fits prior matching on `fit_scores` at every grid point and keeps the one
// with the best accuracy on the labeled validation split. Ties go to the
// smaller mismatch, then the smaller (temperature, lr).
PmGridResult grid_search_pm(const ScoreMatrix& fit_scores, const ScoreMatrix& val_scores,
                            const Predictions& val_truth, const LabelDistribution& nu_hat,
                            const PmGrid& grid = {}, const PriorMatchingOptions& base = {});

}  // namespace otter

#endif  // OTTER_REWEIGHT_H_
