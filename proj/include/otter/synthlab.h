#ifndef OTTER_SYNTHLAB_H_
#define OTTER_SYNTHLAB_H_

// Two-Gaussian label-shift laboratory. Class 1 is N(-1, 1), class 2 is
// N(+1, 1); the mixture weight of class 2 is nu[1].

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "otter/adapter.h"
#include "otter/core.h"

namespace otter {

// Independent stream seed from (base seed, stream name, index). Adding or
// reordering streams never changes the draws of another stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0);

struct GaussianMixtureSpec {
  std::vector<double> means{-1.0, 1.0};
  std::vector<double> stds{1.0, 1.0};
  LabelDistribution nu = LabelDistribution::Uniform(2);
  std::uint64_t seed = 0;

  // Throws Error{kInvalidArgument} on non-positive stds or size mismatch.
  void Validate() const;
};

struct MixtureSample {
  std::vector<double> x;
  Predictions y;  // method kTruth
};

// Labels drawn i.i.d. from spec.nu, features from the class Gaussians.
MixtureSample sample_mixture(const GaussianMixtureSpec& spec, std::size_t n);

// Exactly `per_class` draws of every class, grouped by class.
MixtureSample sample_per_class(const GaussianMixtureSpec& spec, std::size_t per_class);

struct LogisticModel {
  double weight = 0.0;
  double bias = 0.0;

  // P(class 2 | x).
  double Probability(double x) const;
};

struct LogisticOptions {
  double grad_tol = 1e-6;
  std::size_t max_iter = 1000000;
  double separable_cap = 50.0;  // |weight| when the classes separate
};

struct LogisticFit {
  LogisticModel model;
  bool separable = false;
  bool converged = false;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
};

// Maximum-likelihood fit by gradient descent with step 1/L, L the smoothness
// constant of the mean log-loss. Throws Error{kMissingClass} unless both
// classes appear. Separable data returns a capped model with `separable` set.
LogisticFit fit_logistic(const std::vector<double>& x, const Predictions& y,
                         const LogisticOptions& options = {});

// Exact posterior scores for the mixture with class weights `nu`.
ScoreMatrix calibrated_scores(const std::vector<double>& x, const LabelDistribution& nu,
                              const GaussianMixtureSpec& shape = {});

ScoreMatrix model_scores(const std::vector<double>& x, const LogisticModel& model);

enum class BayesForm {
  kPosterior,  // 1/2 ln(nu_1 / nu_2), the argmax of the target posterior
  kLiteral,    // 1/2 (ln(nu_1 / nu_2) + 1), the closed form as usually printed
};

// Decision threshold on x for the default N(-1,1) / N(+1,1) pair: predict
// class 2 iff x >= threshold. A zero class mass gives +-infinity.
double bayes_threshold(const LabelDistribution& nu_t, BayesForm form = BayesForm::kPosterior);

Predictions bayes_predict(const std::vector<double>& x, const LabelDistribution& nu_t,
                          BayesForm form = BayesForm::kPosterior);

inline constexpr double kScoreNoiseClip = 1e-6;

// Adds N(0, sigma^2) to the class-2 score of each row, clips to
// [kScoreNoiseClip, 1 - kScoreNoiseClip] and rebuilds the row. Binary only.
ScoreMatrix perturb_scores(const ScoreMatrix& s, double sigma, std::uint64_t seed);

// nu + (epsilon, -epsilon). Throws Error{kOffSimplex} if the result leaves
// the simplex.
LabelDistribution perturb_distribution(const LabelDistribution& nu, double epsilon);

// Moves `alpha` of total variation from nu_true toward the point mass on its
// smallest class (lowest index on ties). Throws Error{kAlphaTooLarge} when
// alpha exceeds the distance to that point mass.
LabelDistribution adversarial_interpolation(const LabelDistribution& nu_true, double alpha);

enum class ScoreMode { kCalibrated, kFitted };

struct SweepConfig {
  LabelDistribution nu_source = LabelDistribution::Create({0.1, 0.9});
  std::vector<double> target_class2{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t n_train = 10000;
  std::size_t n_test = 10000;
  std::size_t n_val = 2000;  // R-OTTER validation split
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  std::vector<ScoreMode> score_modes{ScoreMode::kCalibrated};
  bool include_rotter = true;
  std::vector<double> score_sigmas;
  std::vector<double> dist_epsilons;
  std::vector<double> adversarial_alphas;
  BayesForm bayes_form = BayesForm::kPosterior;
  SolverConfig solver;
};

struct SweepRow {
  double tv_distance = 0.0;
  std::string method;      // naive, otter, bayes, rotter; "_fitted" for model scores
  std::string noise_kind;  // none, score, dist, adversarial
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
};

// Runs every (target, seed) cell. The test sample and noise draws depend only
// on (seed, target index), so methods are compared on common data. Distribution
// noise that would leave the simplex is skipped.
std::vector<SweepRow> run_shift_sweep(const SweepConfig& config);

}  // namespace otter

#endif  // OTTER_SYNTHLAB_H_
