#include "otter/shift_est.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "otter/error.h"

namespace otter {

ConfusionMatrix soft_confusion(const ScoreMatrix& s_src, const Predictions& y_src) {
  if (y_src.n() != s_src.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "source labels and scores differ in length");
  }
  Predictions labels{y_src.labels, s_src.k(), y_src.method};
  labels.Validate();
  const std::size_t k = s_src.k();
  ConfusionMatrix cm{Matrix(k, k), std::vector<std::size_t>(k, 0)};
  for (std::size_t i = 0; i < s_src.n(); ++i) {
    const int y = y_src.labels[i];
    ++cm.counts[y];
    for (std::size_t c = 0; c < k; ++c) cm.a(y, c) += s_src(i, c);
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (cm.counts[j] == 0) {
      throw Error(ErrorCode::kMissingClass,
                  "class " + std::to_string(j + 1) + " has no labeled source sample");
    }
    for (std::size_t c = 0; c < k; ++c) cm.a(j, c) /= static_cast<double>(cm.counts[j]);
  }
  return cm;
}

BbseResult bbse_detailed(const ConfusionMatrix& cm, const ScoreMatrix& s_tgt,
                         const LabelDistribution& nu_src, BbseVariant variant) {
  const std::size_t k = cm.k();
  if (cm.a.cols() != k || s_tgt.k() != k || nu_src.k() != k) {
    throw Error(ErrorCode::kDimensionMismatch,
                "confusion, target scores and source distribution disagree on K");
  }
  std::vector<double> naive(k, 0.0);
  for (std::size_t i = 0; i < s_tgt.n(); ++i) {
    for (std::size_t j = 0; j < k; ++j) naive[j] += s_tgt(i, j);
  }
  for (double& v : naive) v /= static_cast<double>(s_tgt.n());

  Eigen::MatrixXd a(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) a(r, c) = cm.a(r, c);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();

  const Eigen::Map<const Eigen::VectorXd> nt(naive.data(), static_cast<Eigen::Index>(k));
  Eigen::VectorXd q;
  if (variant == BbseVariant::kInverse) {
    if (!(cond <= kMaxConfusionCondition)) {
      throw Error(ErrorCode::kSingularConfusion,
                  "confusion matrix is ill-conditioned (condition number " +
                      std::to_string(cond) + ")");
    }
    // E_t[s] = A^T nu_t under label shift, so q estimates nu_t directly.
    q = a.transpose().partialPivLu().solve(nt);
  } else {
    q = a * nt;
  }

  std::vector<double> est(k);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    est[j] = std::max(0.0, q(static_cast<Eigen::Index>(j)));
    sum += est[j];
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::kSingularConfusion, "every estimated class mass is non-positive");
  }
  for (double& v : est) v /= sum;

  BbseResult out{LabelDistribution::Create(est), LabelDistribution::Create(naive), {}, cond};
  out.weights.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.weights[j] = nu_src[j] > 0.0 ? out.estimate[j] / nu_src[j] : 0.0;
  }
  return out;
}

LabelDistribution bbse_estimate(const ConfusionMatrix& cm, const ScoreMatrix& s_tgt,
                                const LabelDistribution& nu_src, BbseVariant variant) {
  return bbse_detailed(cm, s_tgt, nu_src, variant).estimate;
}

double estimation_error(const LabelDistribution& nu_true, const LabelDistribution& nu_hat) {
  if (nu_true.k() != nu_hat.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "distributions disagree on K");
  }
  double l1 = 0.0;
  for (std::size_t j = 0; j < nu_true.k(); ++j) l1 += std::abs(nu_true[j] - nu_hat[j]);
  return std::min(1.0, 0.5 * l1);
}

}  // namespace otter
