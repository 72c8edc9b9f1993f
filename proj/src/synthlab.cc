#include "otter/synthlab.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "otter/diagnostics.h"
#include "otter/error.h"
#include "otter/reweight.h"
#include "otter/shift_est.h"

namespace otter {
namespace {

std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log-loss gradient and mean curvature bound for the pair (weight, bias).
struct Grad {
  double dw = 0.0, db = 0.0;
  double Norm() const { return std::hypot(dw, db); }
};

Grad LogLossGrad(const std::vector<double>& x, const std::vector<int>& y, double w, double b) {
  Grad g;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = Sigmoid(w * x[i] + b) - (y[i] == 1 ? 1.0 : 0.0);
    g.dw += r * x[i];
    g.db += r;
  }
  g.dw /= static_cast<double>(x.size());
  g.db /= static_cast<double>(x.size());
  return g;
}

ScoreMatrix BinaryScores(const std::vector<double>& logits) {
  Matrix m(logits.size(), 2);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    m(i, 0) = Sigmoid(-logits[i]);
    m(i, 1) = Sigmoid(logits[i]);
  }
  return validate_scores(std::move(m));
}

void RequireBinary(std::size_t k, const char* what) {
  if (k != 2) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " needs exactly two classes");
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(SplitMix64(SplitMix64(base) ^ h) ^ index);
}

void GaussianMixtureSpec::Validate() const {
  if (means.size() != nu.k() || stds.size() != nu.k()) {
    throw Error(ErrorCode::kInvalidArgument, "mixture means, stds and weights differ in size");
  }
  for (std::size_t j = 0; j < stds.size(); ++j) {
    if (!(stds[j] > 0.0) || !std::isfinite(stds[j]) || !std::isfinite(means[j])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class " + std::to_string(j + 1) + " needs a finite mean and positive std");
    }
  }
}

MixtureSample sample_mixture(const GaussianMixtureSpec& spec, std::size_t n) {
  spec.Validate();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = spec.nu.k();

  MixtureSample out;
  out.x.resize(n);
  out.y.k = k;
  out.y.method = Method::kTruth;
  out.y.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    std::size_t c = 0;
    double acc = spec.nu[0];
    while (c + 1 < k && (u >= acc || spec.nu[c] == 0.0)) acc += spec.nu[++c];
    // Guard against rounding in the cumulative sum landing on a massless class.
    while (spec.nu[c] == 0.0) c = (c + k - 1) % k;
    out.y.labels[i] = static_cast<int>(c);
    out.x[i] = spec.means[c] + spec.stds[c] * normal(rng);
  }
  return out;
}

MixtureSample sample_per_class(const GaussianMixtureSpec& spec, std::size_t per_class) {
  spec.Validate();
  if (per_class == 0) throw Error(ErrorCode::kInvalidArgument, "sample size must be positive");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MixtureSample out;
  out.y.k = spec.nu.k();
  out.y.method = Method::kTruth;
  for (std::size_t c = 0; c < spec.nu.k(); ++c) {
    for (std::size_t t = 0; t < per_class; ++t) {
      out.x.push_back(spec.means[c] + spec.stds[c] * normal(rng));
      out.y.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

double LogisticModel::Probability(double x) const { return Sigmoid(weight * x + bias); }

LogisticFit fit_logistic(const std::vector<double>& x, const Predictions& y,
                         const LogisticOptions& options) {
  if (x.size() != y.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "features and labels differ in length");
  }
  Predictions labels{y.labels, 2, y.method};
  labels.Validate();
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[0]};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int c = y.labels[i];
    ++count[c];
    lo[c] = std::min(lo[c], x[i]);
    hi[c] = std::max(hi[c], x[i]);
  }
  if (count[0] == 0 || count[1] == 0) {
    throw Error(ErrorCode::kMissingClass, "logistic fit needs both classes");
  }

  LogisticFit fit;
  if (hi[0] < lo[1] || hi[1] < lo[0]) {
    const double sign = hi[0] < lo[1] ? 1.0 : -1.0;
    const double mid = sign > 0 ? 0.5 * (hi[0] + lo[1]) : 0.5 * (hi[1] + lo[0]);
    fit.separable = true;
    fit.model.weight = sign * options.separable_cap;
    fit.model.bias = -fit.model.weight * mid;
    fit.grad_norm = LogLossGrad(x, y.labels, fit.model.weight, fit.model.bias).Norm();
    return fit;
  }

  // Hessian of the mean log-loss is bounded by M / 4 with M the second-moment
  // matrix of (x, 1).
  double sxx = 0.0, sx = 0.0;
  for (double v : x) {
    sxx += v * v;
    sx += v;
  }
  const double n = static_cast<double>(x.size());
  sxx /= n;
  sx /= n;
  const double tr = sxx + 1.0, det = sxx - sx * sx;
  const double lmax = 0.5 * (tr + std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
  const double step = 4.0 / lmax;

  double w = 0.0, b = 0.0;
  Grad g = LogLossGrad(x, y.labels, w, b);
  for (; fit.iterations < options.max_iter && g.Norm() > options.grad_tol; ++fit.iterations) {
    w -= step * g.dw;
    b -= step * g.db;
    g = LogLossGrad(x, y.labels, w, b);
  }
  fit.model = {w, b};
  fit.grad_norm = g.Norm();
  fit.converged = fit.grad_norm <= options.grad_tol;
  return fit;
}

ScoreMatrix calibrated_scores(const std::vector<double>& x, const LabelDistribution& nu,
                              const GaussianMixtureSpec& shape) {
  RequireBinary(nu.k(), "calibrated_scores");
  if (shape.means.size() != 2 || shape.stds.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument, "calibrated_scores needs a two-class shape");
  }
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "no features");
  const double m0 = shape.means[0], m1 = shape.means[1];
  const double s0 = shape.stds[0], s1 = shape.stds[1];
  const double inf = std::numeric_limits<double>::infinity();
  const double prior = nu[0] == 0.0 ? inf : nu[1] == 0.0 ? -inf : std::log(nu[1] / nu[0]);
  std::vector<double> logits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z0 = (x[i] - m0) / s0, z1 = (x[i] - m1) / s1;
    logits[i] = 0.5 * (z0 * z0 - z1 * z1) + std::log(s0 / s1) + prior;
  }
  return BinaryScores(logits);
}

ScoreMatrix model_scores(const std::vector<double>& x, const LogisticModel& model) {
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "no features");
  std::vector<double> logits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) logits[i] = model.weight * x[i] + model.bias;
  return BinaryScores(logits);
}

double bayes_threshold(const LabelDistribution& nu_t, BayesForm form) {
  RequireBinary(nu_t.k(), "bayes_threshold");
  const double inf = std::numeric_limits<double>::infinity();
  if (nu_t[0] == 0.0) return -inf;
  if (nu_t[1] == 0.0) return inf;
  const double log_ratio = std::log(nu_t[0] / nu_t[1]);
  return form == BayesForm::kPosterior ? 0.5 * log_ratio : 0.5 * (log_ratio + 1.0);
}

Predictions bayes_predict(const std::vector<double>& x, const LabelDistribution& nu_t,
                          BayesForm form) {
  const double t = bayes_threshold(nu_t, form);
  Predictions p;
  p.k = 2;
  p.method = Method::kBayes;
  p.labels.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p.labels[i] = x[i] >= t ? 1 : 0;
  return p;
}

ScoreMatrix perturb_scores(const ScoreMatrix& s, double sigma, std::uint64_t seed) {
  RequireBinary(s.k(), "perturb_scores");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be finite and nonnegative");
  }
  if (sigma == 0.0) return s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix m(s.n(), 2);
  for (std::size_t i = 0; i < s.n(); ++i) {
    const double p = std::clamp(s(i, 1) + noise(rng), kScoreNoiseClip, 1.0 - kScoreNoiseClip);
    m(i, 0) = 1.0 - p;
    m(i, 1) = p;
  }
  return validate_scores(std::move(m));
}

LabelDistribution perturb_distribution(const LabelDistribution& nu, double epsilon) {
  RequireBinary(nu.k(), "perturb_distribution");
  if (!std::isfinite(epsilon)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be finite");
  std::vector<double> out{nu[0] + epsilon, nu[1] - epsilon};
  for (double& v : out) {
    if (v < -1e-12 || v > 1.0 + 1e-12) {
      throw Error(ErrorCode::kOffSimplex,
                  "perturbation by " + std::to_string(epsilon) + " leaves the simplex");
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  return LabelDistribution::Create(std::move(out));
}

LabelDistribution adversarial_interpolation(const LabelDistribution& nu_true, double alpha) {
  const std::size_t k = nu_true.k();
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "adversarial interpolation needs K >= 2");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be finite and nonnegative");
  }
  const int adv = static_cast<int>(
      std::min_element(nu_true.probs().begin(), nu_true.probs().end()) - nu_true.probs().begin());
  const double tv = 1.0 - nu_true[adv];
  if (alpha > tv + 1e-12) {
    throw Error(ErrorCode::kAlphaTooLarge,
                "alpha " + std::to_string(alpha) + " exceeds the adversarial distance " +
                    std::to_string(tv));
  }
  const double t = tv > 0.0 ? std::min(1.0, alpha / tv) : 0.0;
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = (1.0 - t) * nu_true[j] + (static_cast<int>(j) == adv ? t : 0.0);
  }
  return LabelDistribution::Create(std::move(out));
}

std::vector<SweepRow> run_shift_sweep(const SweepConfig& config) {
  RequireBinary(config.nu_source.k(), "run_shift_sweep");
  if (config.n_test == 0 || config.seeds == 0 || config.target_class2.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sweep needs targets, seeds and a test size");
  }
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < config.seeds; ++s) {
    const std::uint64_t seed = config.base_seed + s;
    LogisticModel model;
    const bool need_model = std::find(config.score_modes.begin(), config.score_modes.end(),
                                      ScoreMode::kFitted) != config.score_modes.end();
    if (need_model) {
      GaussianMixtureSpec train_spec;
      train_spec.nu = config.nu_source;
      train_spec.seed = derive_seed(seed, "train");
      const MixtureSample train = sample_mixture(train_spec, config.n_train);
      model = fit_logistic(train.x, train.y).model;
    }

    for (std::size_t t = 0; t < config.target_class2.size(); ++t) {
      const double q = config.target_class2[t];
      const LabelDistribution nu_t = LabelDistribution::Create({1.0 - q, q});
      // Rounded so grid points print as 0.1 rather than 0.09999999999999998.
      const double tv = std::round(estimation_error(config.nu_source, nu_t) * 1e12) / 1e12;
      auto emit = [&](std::string method, std::string kind, double level, double acc) {
        rows.push_back({tv, std::move(method), std::move(kind), level, seed, acc});
      };

      GaussianMixtureSpec test_spec;
      test_spec.nu = nu_t;
      test_spec.seed = derive_seed(seed, "test", t);
      const MixtureSample test = sample_mixture(test_spec, config.n_test);
      emit("bayes", "none", 0.0, accuracy(bayes_predict(test.x, nu_t, config.bayes_form), test.y));

      MixtureSample val;
      if (config.include_rotter) {
        GaussianMixtureSpec val_spec;
        val_spec.nu = nu_t;
        val_spec.seed = derive_seed(seed, "val", t);
        val = sample_mixture(val_spec, config.n_val);
      }

      for (ScoreMode mode : config.score_modes) {
        const std::string suffix = mode == ScoreMode::kFitted ? "_fitted" : "";
        auto score = [&](const std::vector<double>& x) {
          return mode == ScoreMode::kFitted ? model_scores(x, model)
                                            : calibrated_scores(x, config.nu_source);
        };
        const ScoreMatrix scores = score(test.x);
        emit("naive" + suffix, "none", 0.0, accuracy(zero_shot(scores), test.y));
        emit("otter" + suffix, "none", 0.0,
             accuracy(otter(scores, nu_t, config.solver), test.y));

        if (config.include_rotter) {
          const ScoreMatrix val_scores = score(val.x);
          const Predictions pseudo = otter(val_scores, nu_t, config.solver);
          const RotterFit fit = fit_rotter(val_scores, pseudo);
          emit("rotter" + suffix, "none", 0.0,
               accuracy(predict_reweighted(scores, fit.r), test.y));
        }

        const std::uint64_t noise_seed = derive_seed(seed, "score_noise", t);
        for (double sigma : config.score_sigmas) {
          const ScoreMatrix noisy = perturb_scores(scores, sigma, noise_seed);
          emit("naive" + suffix, "score", sigma, accuracy(zero_shot(noisy), test.y));
          emit("otter" + suffix, "score", sigma,
               accuracy(otter(noisy, nu_t, config.solver), test.y));
        }
        for (double eps : config.dist_epsilons) {
          LabelDistribution nu_hat = nu_t;
          try {
            nu_hat = perturb_distribution(nu_t, eps);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::kOffSimplex) continue;
            throw;
          }
          emit("otter" + suffix, "dist", eps,
               accuracy(otter(scores, nu_hat, config.solver), test.y));
        }
        for (double alpha : config.adversarial_alphas) {
          LabelDistribution nu_hat = nu_t;
          try {
            nu_hat = adversarial_interpolation(nu_t, alpha);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::kAlphaTooLarge) continue;
            throw;
          }
          emit("otter" + suffix, "adversarial", alpha,
               accuracy(otter(scores, nu_hat, config.solver), test.y));
        }
      }
    }
  }
  return rows;
}

}  // namespace otter
