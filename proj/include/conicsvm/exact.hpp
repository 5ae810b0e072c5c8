#pragma once

// Exact small-instance solvers for the 0-1-loss SVM: full enumeration over
// binary indicator assignments and a branch-and-bound shell whose node
// bounds come from either the big-M relaxation or the hull-based SDP.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "conicsvm/core.hpp"
#include "conicsvm/formulations.hpp"
#include "conicsvm/qp.hpp"

namespace conicsvm {

struct ExactResult {
  enum class Method { Enumeration, BranchAndBound };

  double objective = std::numeric_limits<double>::infinity();
  std::vector<int> z_assignment;
  Vector weights;
  long nodes_explored = 0;
  Method method = Method::Enumeration;
  bool optimal = false;
  double bound_gap = 0.0;  // only meaningful when the node limit was hit
};

enum class BnbRelaxation { BigM, ConicSdp };

/// Relative shortfall of a relaxation value against the exact optimum.
inline double relaxation_gap(double zeta_mio, double zeta_relax) {
  if (!(zeta_mio > 0.0))
    throw std::invalid_argument("relaxation gap needs a positive exact optimum");
  return (zeta_mio - zeta_relax) / zeta_mio;
}

namespace exact_detail {

constexpr double kFeasTol = 1e-6;
constexpr double kTieTol = 1e-9;

struct FixedZResult {
  bool feasible = false;
  Vector w;
  double w_norm_sq = 0.0;
};

// Subproblem for one full assignment: minimize ||w||^2 subject to
//   y_i x_i'w >= 1 for z_i = 0  and  y_i x_i'w <= 1 for z_i = 1.
// A phase-one slack minimization certifies feasibility first.
inline FixedZResult solve_fixed_z(const LabeledDataset& data, const std::vector<int>& z) {
  const Eigen::Index n = data.n(), p = data.p();
  FixedZResult out;

  Matrix C(n, p);
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector a = data.signed_point(i);
    if (z[i] == 0) {
      C.row(i) = -a.transpose();
      d(i) = -1.0;
    } else {
      C.row(i) = a.transpose();
      d(i) = 1.0;
    }
  }

  // phase one: min t  s.t.  C w - t <= d, t >= 0
  {
    Matrix C1(n + 1, p + 1);
    C1.setZero();
    C1.topLeftCorner(n, p) = C;
    C1.col(p).head(n).setConstant(-1.0);
    C1(n, p) = -1.0;
    Vector d1(n + 1);
    d1.head(n) = d;
    d1(n) = 0.0;
    Vector g1 = Vector::Zero(p + 1);
    g1(p) = 1.0;
    auto ph1 = solve_qp(Matrix::Zero(p + 1, p + 1), g1, C1, d1);
    if (ph1.status != QpStatus::Optimal || ph1.objective > kFeasTol) return out;
  }

  auto sol = solve_qp(Matrix(2.0 * Matrix::Identity(p, p)), Vector::Zero(p), C, d);
  if (sol.status != QpStatus::Optimal) return out;
  out.feasible = true;
  out.w = sol.x;
  out.w_norm_sq = sol.objective;
  return out;
}

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace exact_detail

/// Global optimum of min ||w||^2 + lambda sum z over z in {0,1}^n by full
/// enumeration; assignments are visited in lexicographic order and ties
/// keep the lexicographically smallest z.
inline ExactResult solve_enumeration(const LabeledDataset& data, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("enumeration needs lambda > 0");
  if (data.n() > 20) throw std::invalid_argument("enumeration is limited to n <= 20");
  const int n = static_cast<int>(data.n());

  ExactResult best;
  best.method = ExactResult::Method::Enumeration;
  std::vector<int> z(n, 0);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    int ones = 0;
    for (int i = 0; i < n; ++i) {
      z[i] = static_cast<int>((mask >> (n - 1 - i)) & 1u);  // z_1 is most significant
      ones += z[i];
    }
    if (lambda * ones > best.objective + exact_detail::kTieTol) continue;
    auto sub = exact_detail::solve_fixed_z(data, z);
    ++best.nodes_explored;
    if (!sub.feasible) continue;
    const double obj = sub.w_norm_sq + lambda * ones;
    if (obj < best.objective - exact_detail::kTieTol) {
      best.objective = obj;
      best.z_assignment = z;
      best.weights = sub.w;
      best.optimal = true;
    }
  }
  return best;
}

struct BnbOptions {
  long node_limit = 100000;
  double big_m = 0.0;  // 0 selects the default scale
  SolverSettings conic;
  QpSettings qp;
};

/// Branch-and-bound on the indicator variables, bounding each node with the
/// selected continuous relaxation and certifying incumbents through the
/// fixed-assignment subproblem.
inline ExactResult solve_branch_and_bound(const LabeledDataset& data, double lambda,
                                          BnbRelaxation relaxation, long node_limit = 100000,
                                          const BnbOptions& opts_in = {}) {
  if (!(lambda > 0.0)) throw std::invalid_argument("branch-and-bound needs lambda > 0");
  const int n = static_cast<int>(data.n());
  BnbOptions opts = opts_in;
  if (opts.big_m <= 0.0) opts.big_m = default_big_m(data);
  opts.node_limit = node_limit;

  ExactResult best;
  best.method = ExactResult::Method::BranchAndBound;

  // guaranteed incumbent: all indicators on, w = 0
  {
    std::vector<int> ones(n, 1);
    auto sub = exact_detail::solve_fixed_z(data, ones);
    if (sub.feasible) {
      best.objective = sub.w_norm_sq + lambda * n;
      best.z_assignment = ones;
      best.weights = sub.w;
    }
  }

  auto try_incumbent = [&](const std::vector<int>& z) {
    auto sub = exact_detail::solve_fixed_z(data, z);
    if (!sub.feasible) return;
    int ones = 0;
    for (int v : z) ones += v;
    const double obj = sub.w_norm_sq + lambda * ones;
    if (obj < best.objective - exact_detail::kTieTol) {
      best.objective = obj;
      best.z_assignment = z;
      best.weights = sub.w;
    }
  };

  struct Node {
    std::vector<int> fixed;
  };
  std::vector<Node> stack;
  stack.push_back({std::vector<int>(n, -1)});
  bool hit_limit = false;
  double worst_open_bound = std::numeric_limits<double>::infinity();

  while (!stack.empty()) {
    if (best.nodes_explored >= opts.node_limit) {
      hit_limit = true;
      // remaining open nodes cap the certifiable bound
      worst_open_bound = std::min(worst_open_bound, 0.0);
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++best.nodes_explored;

    double bound = -std::numeric_limits<double>::infinity();
    Vector zrel;
    std::vector<Eigen::Index> free_idx;
    for (int i = 0; i < n; ++i)
      if (node.fixed[i] == -1) free_idx.push_back(i);

    if (free_idx.empty()) {
      try_incumbent(node.fixed);
      continue;
    }

    if (relaxation == BnbRelaxation::BigM) {
      auto model = build_bigm_relaxation(data, lambda, opts.big_m, node.fixed);
      auto sol = solve_qp(model.problem, opts.qp);
      if (sol.status == QpStatus::Infeasible) continue;
      if (sol.status == QpStatus::Optimal) {
        bound = sol.objective + model.objective_constant;
        zrel = Vector(free_idx.size());
        for (size_t k = 0; k < free_idx.size(); ++k)
          zrel(k) = sol.x(model.z_index[free_idx[k]]);
      }
    } else {
      auto model = build_conic_sdp(data, SvmHyperparams::conic_penalty(lambda), node.fixed);
      auto sol = solve(model.program, opts.conic);
      if (sol.status == ConicStatus::PrimalInfeasible) continue;
      if (sol.status == ConicStatus::Optimal || sol.status == ConicStatus::Inaccurate) {
        bound = sol.primal_objective + model.objective_constant;
        if (sol.status == ConicStatus::Inaccurate) bound -= 1e-6 * (1.0 + std::abs(bound));
        zrel = Vector(free_idx.size());
        for (size_t k = 0; k < free_idx.size(); ++k)
          zrel(k) = sol.primal(model.z_index[free_idx[k]]);
      }
    }

    if (bound >= best.objective - 1e-7) continue;

    if (zrel.size() > 0) {
      // rounding heuristic keeps the incumbent fresh
      std::vector<int> rounded = node.fixed;
      for (size_t k = 0; k < free_idx.size(); ++k)
        rounded[free_idx[k]] = zrel(k) >= 0.5 ? 1 : 0;
      try_incumbent(rounded);
      if (bound >= best.objective - 1e-7) continue;
    }

    // branch on the most fractional free indicator
    Eigen::Index pick = free_idx[0];
    double frac = 2.0;
    for (size_t k = 0; k < free_idx.size(); ++k) {
      const double f = zrel.size() > 0 ? std::abs(zrel(k) - 0.5) : 0.0;
      if (f < frac - 1e-12) {
        frac = f;
        pick = free_idx[k];
      }
    }
    Node one = node, zero = node;
    one.fixed[pick] = 1;
    zero.fixed[pick] = 0;
    stack.push_back(std::move(one));
    stack.push_back(std::move(zero));  // explored first
  }

  best.optimal = !hit_limit && best.z_assignment.size() == static_cast<size_t>(n) &&
                 std::isfinite(best.objective);
  if (hit_limit && std::isfinite(best.objective) && best.objective != 0.0)
    best.bound_gap = (best.objective - std::max(worst_open_bound, 0.0)) / best.objective;
  return best;
}

}  // namespace conicsvm
