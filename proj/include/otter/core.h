#ifndef OTTER_CORE_H_
#define OTTER_CORE_H_

// Domain types shared by every module. Class indices are 0-based inside the
// library; file formats and the CLI shift them to 1-based.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "otter/matrix.h"

namespace otter {

inline constexpr double kRowSumTolerance = 1e-9;
// Deviations up to this size are renormalized away silently; larger ones are
// treated as a malformed input.
inline constexpr double kRowSumFixupTolerance = 1e-6;
inline constexpr double kDefaultClampEps = 1e-12;

// n x K row-stochastic matrix of predicted class probabilities.
class ScoreMatrix {
 public:
  std::size_t n() const { return values_.rows(); }
  std::size_t k() const { return values_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  const Matrix& values() const { return values_; }

 private:
  friend ScoreMatrix validate_scores(Matrix raw);
  explicit ScoreMatrix(Matrix values) : values_(std::move(values)) {}

  Matrix values_;
};

// Validates a raw score matrix: entries finite and nonnegative, rows summing
// to one. Rows off by at most kRowSumFixupTolerance are renormalized.
// Throws Error{kNonFiniteEntry | kNegativeEntry | kRowSumViolation}.
ScoreMatrix validate_scores(Matrix raw);

// A point on the K-simplex.
class LabelDistribution {
 public:
  // Same validation and fixup policy as validate_scores, applied to a single
  // row. Throws Error{kSimplexViolation} on negative, non-finite, or
  // badly-normalized input.
  static LabelDistribution Create(std::vector<double> probs);
  static LabelDistribution Uniform(std::size_t k);

  std::size_t k() const { return probs_.size(); }
  double operator[](std::size_t j) const { return probs_[j]; }
  const std::vector<double>& probs() const { return probs_; }

  bool operator==(const LabelDistribution&) const = default;

 private:
  explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

// n x K matrix of finite nonnegative costs, C_ij = -log(max(s_ij, eps)).
class CostMatrix {
 public:
  // Throws Error{kNonFiniteEntry | kNegativeEntry}.
  static CostMatrix Create(Matrix values);

  std::size_t n() const { return values_.rows(); }
  std::size_t k() const { return values_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  const Matrix& values() const { return values_; }

 private:
  explicit CostMatrix(Matrix values) : values_(std::move(values)) {}

  Matrix values_;
};

CostMatrix scores_to_cost(const ScoreMatrix& s, double clamp_eps = kDefaultClampEps);

// Coupling with prescribed marginals plus the dual potentials that certify it.
struct TransportPlan {
  Matrix coupling;
  std::vector<double> row_duals;
  std::vector<double> col_duals;
  double objective = 0.0;

  std::size_t n() const { return coupling.rows(); }
  std::size_t k() const { return coupling.cols(); }
};

enum class Method {
  kZeroShot,
  kOtter,
  kHOtter,
  kROtter,
  kPriorMatching,
  kBayes,
  kTruth,
};

std::string_view MethodName(Method method);

struct Predictions {
  std::vector<int> labels;  // 0-based class indices
  std::size_t k = 0;
  Method method = Method::kTruth;

  std::size_t n() const { return labels.size(); }

  // Throws Error{kInvalidArgument} if any label falls outside [0, k).
  void Validate() const;
};

LabelDistribution empirical_distribution(const Predictions& p, std::size_t k);

// Lowest index wins ties.
int argmax(std::span<const double> values);

}  // namespace otter

#endif  // OTTER_CORE_H_
