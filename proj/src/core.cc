#include "otter/core.h"

#include <cmath>
#include <string>

#include "otter/error.h"

namespace otter {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kRowSumViolation: return "RowSumViolation";
    case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::kSimplexViolation: return "SimplexViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnbalancedProblem: return "UnbalancedProblem";
    case ErrorCode::kNumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::kEmptyPartition: return "EmptyPartition";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kSingularConfusion: return "SingularConfusion";
    case ErrorCode::kOffSimplex: return "OffSimplex";
    case ErrorCode::kAlphaTooLarge: return "AlphaTooLarge";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Matrix Matrix::FromRows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " entries, expected " +
                      std::to_string(m.cols()));
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

namespace {

std::string Where(std::size_t i, std::size_t j) {
  return "row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1);
}

// Shared by scores and distributions. Returns false when the sum is outside
// the fixup window; renormalizes in place otherwise. Rows already within
// kRowSumTolerance / 1000 are left bit-identical so validation is idempotent.
bool NormalizeRow(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  const double deviation = std::abs(sum - 1.0);
  if (deviation > kRowSumFixupTolerance) return false;
  if (deviation > kRowSumTolerance * 1e-3) {
    for (double& v : row) v /= sum;
  }
  return true;
}

}  // namespace

ScoreMatrix validate_scores(Matrix raw) {
  if (raw.rows() == 0 || raw.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "score matrix needs at least one row and one column");
  }
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < raw.cols(); ++j) {
      const double v = raw(i, j);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteEntry, "non-finite score at " + Where(i, j));
      }
      if (v < 0.0) {
        throw Error(ErrorCode::kNegativeEntry, "negative score at " + Where(i, j));
      }
    }
    if (!NormalizeRow(raw.row(i))) {
      throw Error(ErrorCode::kRowSumViolation,
                  "row " + std::to_string(i + 1) + " does not sum to 1");
    }
  }
  return ScoreMatrix(std::move(raw));
}

LabelDistribution LabelDistribution::Create(std::vector<double> probs) {
  if (probs.empty()) {
    throw Error(ErrorCode::kSimplexViolation, "distribution has no classes");
  }
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!std::isfinite(probs[j]) || probs[j] < 0.0) {
      throw Error(ErrorCode::kSimplexViolation,
                  "entry " + std::to_string(j + 1) + " is not a nonnegative number");
    }
  }
  if (!NormalizeRow(probs)) {
    throw Error(ErrorCode::kSimplexViolation, "entries do not sum to 1");
  }
  return LabelDistribution(std::move(probs));
}

LabelDistribution LabelDistribution::Uniform(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  return LabelDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

CostMatrix CostMatrix::Create(Matrix values) {
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) {
      if (!std::isfinite(values(i, j))) {
        throw Error(ErrorCode::kNonFiniteEntry, "non-finite cost at " + Where(i, j));
      }
      if (values(i, j) < 0.0) {
        throw Error(ErrorCode::kNegativeEntry, "negative cost at " + Where(i, j));
      }
    }
  }
  return CostMatrix(std::move(values));
}

CostMatrix scores_to_cost(const ScoreMatrix& s, double clamp_eps) {
  if (!(clamp_eps > 0.0 && clamp_eps < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clamp_eps must lie in (0, 1)");
  }
  Matrix c(s.n(), s.k());
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.k(); ++j) {
      // max(.,.) keeps -log finite; scores <= 1 keep it nonnegative.
      c(i, j) = -std::log(std::min(1.0, std::max(s(i, j), clamp_eps)));
    }
  }
  return CostMatrix::Create(std::move(c));
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kZeroShot: return "zero-shot";
    case Method::kOtter: return "otter";
    case Method::kHOtter: return "h-otter";
    case Method::kROtter: return "r-otter";
    case Method::kPriorMatching: return "prior-matching";
    case Method::kBayes: return "bayes";
    case Method::kTruth: return "truth";
  }
  return "unknown";
}

void Predictions::Validate() const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(labels[i] + 1) + " at position " +
                      std::to_string(i + 1) + " is outside [1, " +
                      std::to_string(k) + "]");
    }
  }
}

LabelDistribution empirical_distribution(const Predictions& p, std::size_t k) {
  if (p.labels.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no predictions to summarize");
  }
  Predictions checked{p.labels, k, p.method};
  checked.Validate();
  std::vector<double> counts(k, 0.0);
  for (int label : p.labels) counts[label] += 1.0;
  const double n = static_cast<double>(p.labels.size());
  for (double& c : counts) c /= n;
  return LabelDistribution::Create(std::move(counts));
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace otter
