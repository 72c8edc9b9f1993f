#include "otter/reweight.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "otter/error.h"

namespace otter {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Row-wise log-softmax pieces for logits L_ij + rho_j.
struct Softmax {
  std::size_t n, k;
  std::vector<double> p;    // n*k probabilities
  std::vector<double> lse;  // per-row log normalizer
};

Softmax RowSoftmax(const std::vector<double>& logits, std::size_t n, std::size_t k,
                   const std::vector<double>& rho) {
  Softmax out{n, k, std::vector<double>(n * k), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double m = kNegInf;
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, logits[i * k + j] + rho[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double z = logits[i * k + j] + rho[j];
      const double e = z == kNegInf ? 0.0 : std::exp(z - m);
      out.p[i * k + j] = e;
      s += e;
    }
    for (std::size_t j = 0; j < k; ++j) out.p[i * k + j] /= s;
    out.lse[i] = m + std::log(s);
  }
  return out;
}

// One Adam(W) update of `params` in place. Returns the applied step so the
// caller can shrink or undo it.
class Adam {
 public:
  Adam(std::size_t dim, const AdamOptions& opt) : opt_(opt), m_(dim, 0.0), v_(dim, 0.0) {}

  std::vector<double> Step(const std::vector<double>& params,
                           const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    std::vector<double> step(params.size());
    for (std::size_t d = 0; d < params.size(); ++d) {
      m_[d] = opt_.beta1 * m_[d] + (1.0 - opt_.beta1) * grad[d];
      v_[d] = opt_.beta2 * v_[d] + (1.0 - opt_.beta2) * grad[d] * grad[d];
      const double mhat = m_[d] / c1;
      const double vhat = v_[d] / c2;
      step[d] = opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * params[d]);
    }
    return step;
  }

 private:
  AdamOptions opt_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

std::vector<double> LogScores(const ScoreMatrix& s, double clamp_eps) {
  std::vector<double> out(s.n() * s.k());
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.k(); ++j) {
      out[i * s.k() + j] = std::log(std::max(s(i, j), clamp_eps));
    }
  }
  return out;
}

double CrossEntropy(const std::vector<double>& logits, const std::vector<int>& labels,
                    std::size_t k, const std::vector<double>& rho) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = kNegInf;
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, logits[i * k + j] + rho[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(logits[i * k + j] + rho[j] - m);
    total += m + std::log(s) - (logits[i * k + labels[i]] + rho[labels[i]]);
  }
  return total / static_cast<double>(n);
}

std::vector<double> Exp(const std::vector<double>& rho) {
  std::vector<double> r(rho.size());
  std::transform(rho.begin(), rho.end(), r.begin(), [](double x) { return std::exp(x); });
  return r;
}

void CheckAdam(const AdamOptions& a) {
  if (!(a.lr > 0.0) || !(a.beta1 >= 0.0 && a.beta1 < 1.0) ||
      !(a.beta2 >= 0.0 && a.beta2 < 1.0) || !(a.eps > 0.0) || a.weight_decay < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid optimizer settings");
  }
}

}  // namespace

ReweightVector ReweightVector::Create(std::vector<double> r) {
  if (r.empty()) throw Error(ErrorCode::kInvalidArgument, "reweight vector is empty");
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (!std::isfinite(r[j]) || !(r[j] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reweight entry " + std::to_string(j + 1) + " must be finite and positive");
    }
  }
  return ReweightVector(std::move(r));
}

ScoreMatrix apply_reweight(const ScoreMatrix& s, const ReweightVector& r) {
  if (s.k() != r.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "reweight vector and scores disagree on K");
  }
  const auto& v = r.values();
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return s;
  Matrix out(s.n(), s.k());
  for (std::size_t i = 0; i < s.n(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < s.k(); ++j) {
      out(i, j) = r[j] * s(i, j);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < s.k(); ++j) out(i, j) = sum > 0.0 ? out(i, j) / sum : s(i, j);
  }
  return validate_scores(std::move(out));
}

ScoreMatrix temper_scores(const ScoreMatrix& s, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  if (temperature == 1.0) return s;
  Matrix out(s.n(), s.k());
  for (std::size_t i = 0; i < s.n(); ++i) {
    double m = kNegInf;
    for (std::size_t j = 0; j < s.k(); ++j) {
      if (s(i, j) > 0.0) m = std::max(m, std::log(s(i, j)) / temperature);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < s.k(); ++j) {
      out(i, j) = s(i, j) > 0.0 ? std::exp(std::log(s(i, j)) / temperature - m) : 0.0;
      sum += out(i, j);
    }
    for (std::size_t j = 0; j < s.k(); ++j) out(i, j) /= sum;
  }
  return validate_scores(std::move(out));
}

double reweight_cross_entropy(const ScoreMatrix& s, const Predictions& labels,
                              const ReweightVector& r, double clamp_eps) {
  if (labels.n() != s.n() || r.k() != s.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "scores, labels and weights disagree");
  }
  std::vector<double> rho(r.k());
  for (std::size_t j = 0; j < r.k(); ++j) rho[j] = std::log(r[j]);
  return CrossEntropy(LogScores(s, clamp_eps), labels.labels, s.k(), rho);
}

RotterFit fit_rotter(const ScoreMatrix& s_val, const Predictions& pseudo,
                     const RotterOptions& options) {
  if (pseudo.n() != s_val.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "pseudo-labels and scores differ in length");
  }
  Predictions checked{pseudo.labels, s_val.k(), pseudo.method};
  checked.Validate();
  CheckAdam(options.adam);

  const std::size_t n = s_val.n(), k = s_val.k();
  RotterFit fit;
  std::vector<std::size_t> counts(k, 0);
  for (int y : pseudo.labels) ++counts[y];
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] == 0) fit.absent_classes.push_back(static_cast<int>(j));
  }
  fit.degenerate_labels = !fit.absent_classes.empty();

  const std::vector<double> logits = LogScores(s_val, options.clamp_eps);
  std::vector<double> rho(k, 0.0);
  double loss = CrossEntropy(logits, pseudo.labels, k, rho);
  fit.loss_history.push_back(loss);

  if (k > 1) {
    Adam adam(k, options.adam);
    for (std::size_t step = 0; step < options.adam.steps; ++step) {
      const Softmax sm = RowSoftmax(logits, n, k, rho);
      std::vector<double> grad(k, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) grad[j] += sm.p[i * k + j];
        grad[pseudo.labels[i]] -= 1.0;
      }
      for (double& g : grad) g /= static_cast<double>(n);

      std::vector<double> delta = adam.Step(rho, grad);
      for (int attempt = 0; attempt < 30; ++attempt) {
        std::vector<double> candidate(k);
        for (std::size_t j = 0; j < k; ++j) candidate[j] = rho[j] - delta[j];
        const double next = CrossEntropy(logits, pseudo.labels, k, candidate);
        if (next <= loss) {
          rho = std::move(candidate);
          loss = next;
          break;
        }
        for (double& d : delta) d *= 0.5;
      }
      fit.loss_history.push_back(loss);
    }
  }

  if (fit.degenerate_labels && fit.absent_classes.size() < k) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) lowest = std::min(lowest, rho[j]);
    }
    for (int j : fit.absent_classes) rho[j] = lowest;
  }
  fit.r = ReweightVector::Create(Exp(rho));
  fit.final_loss = CrossEntropy(logits, pseudo.labels, k, rho);
  return fit;
}

PriorMatchingFit fit_prior_matching(const ScoreMatrix& s, const LabelDistribution& nu_hat,
                                    const PriorMatchingOptions& options) {
  if (s.k() != nu_hat.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "scores and distribution disagree on K");
  }
  if (!(options.temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  CheckAdam(options.adam);
  const std::size_t n = s.n(), k = s.k();

  // Tempered, reweighted scores are softmax(log s / T + rho).
  std::vector<double> logits(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      logits[i * k + j] = s(i, j) > 0.0 ? std::log(s(i, j)) / options.temperature : kNegInf;
    }
  }

  std::vector<double> rho(k, 0.0);
  auto evaluate = [&](const std::vector<double>& params, std::vector<double>* grad) {
    const Softmax sm = RowSoftmax(logits, n, k, params);
    std::vector<double> mean(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) mean[j] += sm.p[i * k + j];
    }
    double mismatch = 0.0;
    std::vector<double> sign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      mean[j] /= static_cast<double>(n);
      const double d = mean[j] - nu_hat[j];
      mismatch += std::abs(d);
      if (std::abs(d) > 1e-12) sign[j] = d > 0.0 ? 1.0 : -1.0;
    }
    if (grad) {
      grad->assign(k, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < k; ++j) inner += sign[j] * sm.p[i * k + j];
        for (std::size_t l = 0; l < k; ++l) {
          (*grad)[l] += sm.p[i * k + l] * (sign[l] - inner);
        }
      }
      for (double& g : *grad) g /= static_cast<double>(n);
    }
    return mismatch;
  };

  std::vector<double> grad;
  double mismatch = evaluate(rho, &grad);
  std::vector<double> best_rho = rho;
  double best = mismatch;
  Adam adam(k, options.adam);
  for (std::size_t step = 0; step < options.adam.steps && best > 0.0; ++step) {
    const std::vector<double> delta = adam.Step(rho, grad);
    for (std::size_t j = 0; j < k; ++j) rho[j] -= delta[j];
    mismatch = evaluate(rho, &grad);
    if (mismatch < best) {
      best = mismatch;
      best_rho = rho;
    }
  }

  PriorMatchingFit fit;
  fit.r = ReweightVector::Create(Exp(best_rho));
  fit.temperature = options.temperature;
  fit.lr = options.adam.lr;
  fit.mismatch = best;
  return fit;
}

Predictions predict_reweighted(const ScoreMatrix& s, const ReweightVector& r,
                               double temperature) {
  if (s.k() != r.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "reweight vector and scores disagree on K");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be positive");
  }
  Predictions p;
  p.k = s.k();
  p.method = Method::kROtter;
  p.labels.resize(s.n());
  if (temperature == 1.0) {
    // Identical to the argmax of apply_reweight(s, r).
    return [&] {
      const ScoreMatrix w = apply_reweight(s, r);
      for (std::size_t i = 0; i < s.n(); ++i) p.labels[i] = argmax(w.row(i));
      return p;
    }();
  }
  // Log space: tempered scores underflow long before the argmax changes.
  std::vector<double> z(s.k());
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.k(); ++j) {
      z[j] = s(i, j) > 0.0 ? std::log(s(i, j)) / temperature + std::log(r[j]) : kNegInf;
    }
    p.labels[i] = argmax(z);
  }
  return p;
}

PmGridResult grid_search_pm(const ScoreMatrix& fit_scores, const ScoreMatrix& val_scores,
                            const Predictions& val_truth, const LabelDistribution& nu_hat,
                            const PmGrid& grid, const PriorMatchingOptions& base) {
  if (val_truth.n() == 0 || val_truth.n() != val_scores.n()) {
    throw Error(ErrorCode::kInvalidArgument, "validation labels must match validation scores");
  }
  if (grid.temperatures.empty() || grid.lrs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty hyperparameter grid");
  }
  PmGridResult result;
  bool have_best = false;
  for (double t : grid.temperatures) {
    for (double lr : grid.lrs) {
      PriorMatchingOptions opt = base;
      opt.temperature = t;
      opt.adam.lr = lr;
      PriorMatchingFit fit = fit_prior_matching(fit_scores, nu_hat, opt);
      const Predictions pred = predict_reweighted(val_scores, fit.r, t);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < pred.n(); ++i) hits += pred.labels[i] == val_truth.labels[i];
      const double acc = static_cast<double>(hits) / static_cast<double>(pred.n());
      result.points.push_back({t, lr, acc, fit.mismatch});

      bool better = !have_best || acc > result.val_accuracy ||
                    (acc == result.val_accuracy && fit.mismatch < result.best.mismatch) ||
                    (acc == result.val_accuracy && fit.mismatch == result.best.mismatch &&
                     std::pair(t, lr) < std::pair(result.best.temperature, result.best.lr));
      if (better) {
        result.best = std::move(fit);
        result.val_accuracy = acc;
        have_best = true;
      }
    }
  }
  return result;
}

}  // namespace otter
