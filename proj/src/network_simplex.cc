// Exact transportation solver: primal network simplex on the complete
// bipartite graph rows -> columns.
//
// Node ids: row i is node i, column j is node n + j. Arc (i, j) has id
// i * K + j; that id is the variable order used by Bland's rule. The basis is
// a spanning tree of n + K - 1 arcs rooted at column 0 whose potential is
// pinned to zero. Potentials satisfy u_i + v_j = C_ij on every tree arc.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "otter/error.h"
#include "otter/ot_solver.h"

namespace otter {

TransportProblem::TransportProblem(Matrix cost, std::vector<double> row_masses,
                                   std::vector<double> col_masses)
    : cost_(std::move(cost)),
      row_masses_(std::move(row_masses)),
      col_masses_(std::move(col_masses)) {
  if (cost_.rows() == 0 || cost_.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty cost matrix");
  }
  if (row_masses_.size() != cost_.rows() || col_masses_.size() != cost_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cost is " + std::to_string(cost_.rows()) + "x" +
                    std::to_string(cost_.cols()) + " but masses have lengths " +
                    std::to_string(row_masses_.size()) + " and " +
                    std::to_string(col_masses_.size()));
  }
  for (double c : cost_.data()) {
    if (!std::isfinite(c)) throw Error(ErrorCode::kNonFiniteEntry, "non-finite cost");
  }
  double row_sum = 0.0, col_sum = 0.0;
  for (double m : row_masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kUnbalancedProblem, "row masses must be nonnegative");
    }
    row_sum += m;
  }
  for (double m : col_masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kUnbalancedProblem, "column masses must be nonnegative");
    }
    col_sum += m;
  }
  if (std::abs(row_sum - 1.0) > kMassBalanceTolerance ||
      std::abs(col_sum - 1.0) > kMassBalanceTolerance) {
    throw Error(ErrorCode::kUnbalancedProblem,
                "row and column masses must each sum to 1 (got " +
                    std::to_string(row_sum) + " and " + std::to_string(col_sum) + ")");
  }
}

TransportProblem TransportProblem::Uniform(const CostMatrix& cost,
                                           const LabelDistribution& nu) {
  return Uniform(cost.values(), nu);
}

TransportProblem TransportProblem::Uniform(Matrix cost, const LabelDistribution& nu) {
  if (cost.cols() != nu.k()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cost has " + std::to_string(cost.cols()) +
                    " classes but the label distribution has " + std::to_string(nu.k()));
  }
  const std::size_t n = cost.rows();
  std::vector<double> mu(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  return TransportProblem(std::move(cost), std::move(mu), nu.probs());
}

namespace {

class NetworkSimplex {
 public:
  explicit NetworkSimplex(const TransportProblem& p)
      : cost_(p.cost()),
        n_(p.n()),
        k_(p.k()),
        supply_(p.row_masses()),
        demand_(p.col_masses()) {
    // Tiny imbalances (<= 1e-9) are absorbed by rescaling demand so the
    // greedy start saturates exactly.
    const double s = std::accumulate(supply_.begin(), supply_.end(), 0.0);
    const double d = std::accumulate(demand_.begin(), demand_.end(), 0.0);
    if (d > 0.0 && s != d) {
      for (double& v : demand_) v *= s / d;
    }
    double max_abs = 1.0;
    for (double c : cost_.data()) max_abs = std::max(max_abs, std::abs(c));
    price_tol_ = 1e-12 * max_abs;
  }

  ExactSolution Solve() {
    const std::size_t nodes = n_ + k_;
    flow_.assign(n_ * k_, 0.0);
    basic_.assign(n_ * k_, 0);
    adj_.assign(nodes, {});
    parent_.assign(nodes, -1);
    parent_arc_.assign(nodes, -1);
    depth_.assign(nodes, 0);
    pot_.assign(nodes, 0.0);

    BuildInitialTree();
    HangTree(Root(), -1, -1);

    std::size_t pivots = 0;
    for (std::int64_t entering = FindEntering(); entering >= 0;
         entering = FindEntering()) {
      Pivot(entering);
      ++pivots;
    }
    return Extract(pivots);
  }

 private:
  int Root() const { return static_cast<int>(n_); }
  bool IsRow(int node) const { return node < static_cast<int>(n_); }
  int RowOf(std::int64_t arc) const { return static_cast<int>(arc / k_); }
  int ColOf(std::int64_t arc) const { return static_cast<int>(arc % k_); }
  double Cost(std::int64_t arc) const { return cost_.data()[arc]; }

  void AddTreeArc(std::int64_t arc, double flow) {
    basic_[arc] = 1;
    flow_[arc] = flow;
    adj_[RowOf(arc)].push_back(arc);
    adj_[n_ + ColOf(arc)].push_back(arc);
  }

  void RemoveTreeArc(std::int64_t arc) {
    basic_[arc] = 0;
    flow_[arc] = 0.0;
    for (int node : {RowOf(arc), static_cast<int>(n_) + ColOf(arc)}) {
      auto& list = adj_[node];
      auto it = std::find(list.begin(), list.end(), arc);
      *it = list.back();
      list.pop_back();
    }
  }

  int Other(std::int64_t arc, int node) const {
    return IsRow(node) ? static_cast<int>(n_) + ColOf(arc) : RowOf(arc);
  }

  // Greedy start: rows in decreasing order of regret (gap between the two
  // cheapest columns), each row poured into its cheapest open columns. Every
  // allocation closes a row or a column, so the allocated arcs form a forest;
  // zero-flow arcs then join the components into a spanning tree.
  void BuildInitialTree() {
    std::vector<double> regret(n_, 0.0);
    std::vector<std::vector<int>> order(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto& cols = order[i];
      cols.resize(k_);
      std::iota(cols.begin(), cols.end(), 0);
      std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) {
        return cost_(i, a) < cost_(i, b);
      });
      if (k_ > 1) regret[i] = cost_(i, cols[1]) - cost_(i, cols[0]);
    }
    std::vector<int> rows(n_);
    std::iota(rows.begin(), rows.end(), 0);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](int a, int b) { return regret[a] > regret[b]; });

    std::vector<int> uf(n_ + k_);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    auto unite = [&](std::int64_t arc) {
      const int a = find(RowOf(arc));
      const int b = find(static_cast<int>(n_) + ColOf(arc));
      if (a == b) throw std::logic_error("greedy start produced a cycle");
      uf[a] = b;
    };

    std::vector<double> open = demand_;
    std::size_t tree_arcs = 0;
    for (int i : rows) {
      double remaining = supply_[i];
      std::int64_t last = -1;
      for (int j : order[i]) {
        if (remaining <= 0.0) break;
        if (open[j] <= 0.0) continue;
        const std::int64_t arc = static_cast<std::int64_t>(i) * k_ + j;
        if (remaining <= open[j]) {
          open[j] -= remaining;
          AddTreeArc(arc, remaining);
          remaining = 0.0;
        } else {
          AddTreeArc(arc, open[j]);
          remaining -= open[j];
          open[j] = 0.0;
        }
        unite(arc);
        ++tree_arcs;
        last = arc;
      }
      if (remaining > 0.0) {
        // Rounding leftovers only: every column is already closed.
        if (last < 0) {
          last = static_cast<std::int64_t>(i) * k_ + order[i][0];
          AddTreeArc(last, 0.0);
          unite(last);
          ++tree_arcs;
        }
        flow_[last] += remaining;
      }
    }

    for (std::size_t i = 0; i < n_ && tree_arcs + 1 < n_ + k_; ++i) {
      for (int j : order[i]) {
        const std::int64_t arc = static_cast<std::int64_t>(i) * k_ + j;
        if (basic_[arc]) continue;
        if (find(static_cast<int>(i)) == find(static_cast<int>(n_) + j)) continue;
        AddTreeArc(arc, 0.0);
        unite(arc);
        ++tree_arcs;
      }
    }
    if (tree_arcs + 1 != n_ + k_) {
      throw std::logic_error("initial basis is not a spanning tree");
    }
  }

  // Re-roots the component containing `start` below `parent` via `via_arc`,
  // recomputing depth and potentials from tree arcs.
  void HangTree(int start, int parent, std::int64_t via_arc) {
    struct Frame {
      int node;
      int parent;
      std::int64_t arc;
    };
    std::vector<Frame> stack{{start, parent, via_arc}};
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      parent_[f.node] = f.parent;
      parent_arc_[f.node] = f.arc;
      if (f.parent < 0) {
        depth_[f.node] = 0;
        pot_[f.node] = 0.0;
      } else {
        depth_[f.node] = depth_[f.parent] + 1;
        pot_[f.node] = Cost(f.arc) - pot_[f.parent];
      }
      for (std::int64_t arc : adj_[f.node]) {
        if (arc == f.arc) continue;
        stack.push_back({Other(arc, f.node), f.node, arc});
      }
    }
  }

  double ReducedCost(std::int64_t arc) const {
    return Cost(arc) - pot_[RowOf(arc)] - pot_[n_ + ColOf(arc)];
  }

  // Bland: the lowest-index nonbasic arc with negative reduced cost.
  std::int64_t FindEntering() const {
    const std::int64_t arcs = static_cast<std::int64_t>(n_ * k_);
    for (std::int64_t arc = 0; arc < arcs; ++arc) {
      if (!basic_[arc] && ReducedCost(arc) < -price_tol_) return arc;
    }
    return -1;
  }

  void Pivot(std::int64_t entering) {
    // Walk both endpoints up to their common ancestor. Moving from a column
    // node towards its parent traverses an arc against its direction on the
    // b-side; on the a-side the orientation flips.
    struct CycleArc {
      std::int64_t arc;
      bool minus;
      bool a_side;
    };
    std::vector<CycleArc> cycle;
    int a = RowOf(entering);
    int b = static_cast<int>(n_) + ColOf(entering);
    while (a != b) {
      if (depth_[a] >= depth_[b]) {
        cycle.push_back({parent_arc_[a], IsRow(a), true});
        a = parent_[a];
      } else {
        cycle.push_back({parent_arc_[b], !IsRow(b), false});
        b = parent_[b];
      }
    }

    double theta = std::numeric_limits<double>::infinity();
    for (const auto& c : cycle) {
      if (c.minus) theta = std::min(theta, flow_[c.arc]);
    }
    const CycleArc* leaving = nullptr;
    for (const auto& c : cycle) {
      if (c.minus && flow_[c.arc] <= theta && (!leaving || c.arc < leaving->arc)) {
        leaving = &c;
      }
    }

    for (const auto& c : cycle) flow_[c.arc] += c.minus ? -theta : theta;
    const std::int64_t out = leaving->arc;
    const bool entering_row_detached = leaving->a_side;

    RemoveTreeArc(out);
    AddTreeArc(entering, theta);
    const int row = RowOf(entering);
    const int col = static_cast<int>(n_) + ColOf(entering);
    if (entering_row_detached) {
      HangTree(row, col, entering);
    } else {
      HangTree(col, row, entering);
    }
  }

  ExactSolution Extract(std::size_t pivots) const {
    ExactSolution out;
    TransportPlan& plan = out.plan;
    plan.coupling = Matrix(n_, k_);
    double primal = 0.0;
    for (std::size_t arc = 0; arc < n_ * k_; ++arc) {
      if (!basic_[arc]) continue;
      const double f = std::max(0.0, flow_[arc]);
      plan.coupling.data()[arc] = f;
      primal += f * Cost(static_cast<std::int64_t>(arc));
    }
    plan.row_duals.assign(pot_.begin(), pot_.begin() + n_);
    plan.col_duals.assign(pot_.begin() + n_, pot_.end());
    plan.objective = primal;

    double dual = 0.0;
    for (std::size_t i = 0; i < n_; ++i) dual += supply_[i] * plan.row_duals[i];
    for (std::size_t j = 0; j < k_; ++j) dual += demand_[j] * plan.col_duals[j];
    out.diagnostics = {primal, dual, primal - dual, pivots};
    return out;
  }

  const Matrix& cost_;
  std::size_t n_;
  std::size_t k_;
  std::vector<double> supply_;
  std::vector<double> demand_;
  double price_tol_ = 0.0;

  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<std::vector<std::int64_t>> adj_;
  std::vector<int> parent_;
  std::vector<std::int64_t> parent_arc_;
  std::vector<int> depth_;
  std::vector<double> pot_;
};

}  // namespace

ExactSolution solve_exact(const TransportProblem& problem) {
  return NetworkSimplex(problem).Solve();
}

Predictions plan_to_predictions(const TransportPlan& plan) {
  Predictions p;
  p.k = plan.k();
  p.method = Method::kOtter;
  p.labels.resize(plan.n());
  for (std::size_t i = 0; i < plan.n(); ++i) p.labels[i] = argmax(plan.coupling.row(i));
  return p;
}

double marginal_residual(const TransportPlan& plan, const TransportProblem& problem) {
  if (plan.n() != problem.n() || plan.k() != problem.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "plan and problem sizes differ");
  }
  double worst = 0.0;
  std::vector<double> col(plan.k(), 0.0);
  for (std::size_t i = 0; i < plan.n(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < plan.k(); ++j) {
      row += plan.coupling(i, j);
      col[j] += plan.coupling(i, j);
    }
    worst = std::max(worst, std::abs(row - problem.row_masses()[i]));
  }
  for (std::size_t j = 0; j < plan.k(); ++j) {
    worst = std::max(worst, std::abs(col[j] - problem.col_masses()[j]));
  }
  return worst;
}

}  // namespace otter
