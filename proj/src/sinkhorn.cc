// Entropy-regularized transport via Sinkhorn scaling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "otter/error.h"
#include "otter/ot_solver.h"

namespace otter {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double MaxAbsCost(const Matrix& c) {
  double m = 0.0;
  for (double v : c.data()) m = std::max(m, std::abs(v));
  return m;
}

double Residual(const Matrix& plan, const std::vector<double>& mu,
                const std::vector<double>& nu) {
  double worst = 0.0;
  std::vector<double> col(plan.cols(), 0.0);
  for (std::size_t i = 0; i < plan.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < plan.cols(); ++j) {
      row += plan(i, j);
      col[j] += plan(i, j);
    }
    worst = std::max(worst, std::abs(row - mu[i]));
  }
  for (std::size_t j = 0; j < plan.cols(); ++j) {
    worst = std::max(worst, std::abs(col[j] - nu[j]));
  }
  return worst;
}

void FinishPlan(const Matrix& cost, EntropicResult& out) {
  double obj = 0.0;
  for (std::size_t idx = 0; idx < cost.data().size(); ++idx) {
    obj += out.plan.coupling.data()[idx] * cost.data()[idx];
  }
  out.plan.objective = obj;
}

EntropicResult SolveStandard(const TransportProblem& p, const EntropicOptions& opt) {
  const std::size_t n = p.n(), k = p.k();
  const auto& mu = p.row_masses();
  const auto& nu = p.col_masses();
  Matrix kernel(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) kernel(i, j) = std::exp(-p.cost()(i, j) / opt.reg);
  }
  std::vector<double> a(n, 1.0), b(k, 1.0);
  auto underflow = [](const std::string& where) {
    throw Error(ErrorCode::kNumericalUnderflow,
                "kernel underflow in " + where +
                    "; increase reg or use the log-domain solver");
  };

  EntropicResult out;
  out.plan.coupling = Matrix(n, k);
  for (out.iterations = 1; out.iterations <= opt.max_iter; ++out.iterations) {
    for (std::size_t j = 0; j < k; ++j) {
      if (nu[j] == 0.0) { b[j] = 0.0; continue; }
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += kernel(i, j) * a[i];
      if (!(s > 0.0) || !std::isfinite(s)) underflow("column " + std::to_string(j + 1));
      b[j] = nu[j] / s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (mu[i] == 0.0) { a[i] = 0.0; continue; }
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += kernel(i, j) * b[j];
      if (!(s > 0.0) || !std::isfinite(s)) underflow("row " + std::to_string(i + 1));
      a[i] = mu[i] / s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) out.plan.coupling(i, j) = a[i] * kernel(i, j) * b[j];
    }
    out.marginal_residual = Residual(out.plan.coupling, mu, nu);
    if (out.marginal_residual <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, opt.max_iter);
  out.plan.row_duals.resize(n);
  out.plan.col_duals.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    out.plan.row_duals[i] = a[i] > 0.0 ? opt.reg * std::log(a[i]) : kNegInf;
  }
  for (std::size_t j = 0; j < k; ++j) {
    out.plan.col_duals[j] = b[j] > 0.0 ? opt.reg * std::log(b[j]) : kNegInf;
  }
  return out;
}

EntropicResult SolveLog(const TransportProblem& p, const EntropicOptions& opt) {
  const std::size_t n = p.n(), k = p.k();
  const auto& mu = p.row_masses();
  const auto& nu = p.col_masses();
  const Matrix& c = p.cost();
  const double reg = opt.reg;
  // Zero-mass marginals carry -inf potentials and contribute nothing.
  std::vector<double> f(n, 0.0), g(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) if (mu[i] == 0.0) f[i] = kNegInf;
  for (std::size_t j = 0; j < k; ++j) if (nu[j] == 0.0) g[j] = kNegInf;

  std::vector<double> scratch(std::max(n, k));
  auto lse = [&](std::size_t len) {
    double m = kNegInf;
    for (std::size_t t = 0; t < len; ++t) m = std::max(m, scratch[t]);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += std::exp(scratch[t] - m);
    return m + std::log(s);
  };

  EntropicResult out;
  out.log_domain = true;
  out.plan.coupling = Matrix(n, k);
  for (out.iterations = 1; out.iterations <= opt.max_iter; ++out.iterations) {
    for (std::size_t j = 0; j < k; ++j) {
      if (nu[j] == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) scratch[i] = (f[i] - c(i, j)) / reg;
      g[j] = reg * (std::log(nu[j]) - lse(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (mu[i] == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) scratch[j] = (g[j] - c(i, j)) / reg;
      f[i] = reg * (std::log(mu[i]) - lse(k));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double e = (f[i] + g[j] - c(i, j)) / reg;
        out.plan.coupling(i, j) = e == kNegInf ? 0.0 : std::exp(e);
      }
    }
    out.marginal_residual = Residual(out.plan.coupling, mu, nu);
    if (out.marginal_residual <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, opt.max_iter);
  out.plan.row_duals = f;
  out.plan.col_duals = g;
  return out;
}

}  // namespace

EntropicResult solve_entropic(const TransportProblem& problem,
                              const EntropicOptions& options) {
  if (!(options.reg > 0.0) || !std::isfinite(options.reg)) {
    throw Error(ErrorCode::kInvalidArgument, "reg must be positive");
  }
  if (!(options.tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  }
  bool use_log = options.domain == EntropicDomain::kLog;
  if (options.domain == EntropicDomain::kAuto) {
    use_log = MaxAbsCost(problem.cost()) / options.reg > kLogDomainThreshold;
  }
  EntropicResult out = use_log ? SolveLog(problem, options) : SolveStandard(problem, options);
  FinishPlan(problem.cost(), out);
  return out;
}

}  // namespace otter
