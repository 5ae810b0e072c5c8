#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "conicsvm/conic_program.hpp"
#include "conicsvm/conic_solver.hpp"
#include "conicsvm/core.hpp"
#include "conicsvm/qp.hpp"

namespace conicsvm {

struct SvmHyperparams {
  enum class Form { HingeQP, BigMRelaxation, ConicSdpPenalty, ConicSdpCardinality, KernelConicSdp };

  Form form = Form::HingeQP;
  std::optional<double> lambda;
  std::optional<double> kappa;
  std::optional<double> big_m;

  static SvmHyperparams hinge(double lambda) {
    SvmHyperparams h;
    h.form = Form::HingeQP;
    h.lambda = lambda;
    h.validate();
    return h;
  }
  static SvmHyperparams bigm(double lambda, double big_m) {
    SvmHyperparams h;
    h.form = Form::BigMRelaxation;
    h.lambda = lambda;
    h.big_m = big_m;
    h.validate();
    return h;
  }
  static SvmHyperparams conic_penalty(double lambda) {
    SvmHyperparams h;
    h.form = Form::ConicSdpPenalty;
    h.lambda = lambda;
    h.validate();
    return h;
  }
  static SvmHyperparams conic_cardinality(double kappa) {
    SvmHyperparams h;
    h.form = Form::ConicSdpCardinality;
    h.kappa = kappa;
    h.validate();
    return h;
  }
  static SvmHyperparams kernel_penalty(double lambda) {
    SvmHyperparams h;
    h.form = Form::KernelConicSdp;
    h.lambda = lambda;
    h.validate();
    return h;
  }
  static SvmHyperparams kernel_cardinality(double kappa) {
    SvmHyperparams h;
    h.form = Form::KernelConicSdp;
    h.kappa = kappa;
    h.validate();
    return h;
  }

  void validate() const {
    auto need_lambda = [&] {
      if (!lambda || !(*lambda > 0.0))
        throw std::invalid_argument("this form needs lambda > 0");
    };
    auto need_kappa = [&] {
      if (!kappa || *kappa < 0.0 || *kappa > 0.5)
        throw std::invalid_argument("this form needs kappa in [0, 0.5]");
    };
    switch (form) {
      case Form::HingeQP:
      case Form::ConicSdpPenalty:
        need_lambda();
        break;
      case Form::BigMRelaxation:
        need_lambda();
        if (!big_m || !(*big_m > 0.0))
          throw std::invalid_argument("big-M form needs big_m > 0");
        break;
      case Form::ConicSdpCardinality:
        need_kappa();
        break;
      case Form::KernelConicSdp:
        if (lambda.has_value())
          need_lambda();
        else
          need_kappa();
        break;
    }
  }

  bool cardinality() const {
    return form == Form::ConicSdpCardinality ||
           (form == Form::KernelConicSdp && !lambda.has_value());
  }
};

/// Default big-M used when none is given; large enough to expose the weak
/// relaxation behavior.
inline double default_big_m(const LabeledDataset& data) {
  double mx = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    mx = std::max(mx, data.point(i).norm());
  return 1e4 * std::max(mx, 1.0);
}

// ----- quadratic models -----

struct QpModel {
  QpProblem problem;
  Eigen::Index dim_w = 0;
  Eigen::Index n_points = 0;
  std::vector<int> z_index;  // variable index of z_i, -1 when fixed/absent
  double objective_constant = 0.0;
};

/// Hinge-loss SVM as a QP in (w, xi):
///   min ||w||^2 + lambda sum xi  s.t.  xi >= 0, xi >= 1 - y_i x_i'w
inline QpModel build_hinge_qp(const LabeledDataset& data, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("hinge needs lambda > 0");
  const Eigen::Index p = data.p(), n = data.n();
  QpModel m;
  m.dim_w = p;
  m.n_points = n;
  m.z_index.assign(n, -1);

  std::vector<Triplet> th, tc;
  for (Eigen::Index j = 0; j < p; ++j) th.emplace_back(j, j, 2.0);
  Vector g = Vector::Zero(p + n);
  g.tail(n).setConstant(lambda);
  Vector d(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    tc.emplace_back(i, p + i, -1.0);  // -xi <= 0
    d(i) = 0.0;
    const Vector a = data.signed_point(i);
    for (Eigen::Index j = 0; j < p; ++j)
      if (a(j) != 0.0) tc.emplace_back(n + i, j, -a(j));
    tc.emplace_back(n + i, p + i, -1.0);  // -a'w - xi <= -1
    d(n + i) = -1.0;
  }
  m.problem.H.resize(p + n, p + n);
  m.problem.H.setFromTriplets(th.begin(), th.end());
  m.problem.g = g;
  m.problem.C.resize(2 * n, p + n);
  m.problem.C.setFromTriplets(tc.begin(), tc.end());
  m.problem.d = d;
  return m;
}

/// Continuous big-M relaxation in (w, z):
///   min ||w||^2 + lambda sum z  s.t.  y_i x_i'w >= 1 - M z_i, 0 <= z <= 1
/// fixed[i] in {-1 free, 0, 1} pins individual indicators (used by
/// branch-and-bound); fixing to one drops the classification row and adds
/// lambda to the objective constant.
inline QpModel build_bigm_relaxation(const LabeledDataset& data, double lambda, double big_m,
                                     const std::vector<int>& fixed = {}) {
  if (!(lambda > 0.0) || !(big_m > 0.0))
    throw std::invalid_argument("big-M relaxation needs lambda > 0 and M > 0");
  const Eigen::Index p = data.p(), n = data.n();
  std::vector<int> fx = fixed.empty() ? std::vector<int>(n, -1) : fixed;
  if (static_cast<Eigen::Index>(fx.size()) != n)
    throw std::invalid_argument("fixed vector length mismatch");

  QpModel m;
  m.dim_w = p;
  m.n_points = n;
  m.z_index.assign(n, -1);
  Eigen::Index nv = p;
  for (Eigen::Index i = 0; i < n; ++i)
    if (fx[i] == -1) m.z_index[i] = static_cast<int>(nv++);

  std::vector<Triplet> th, tc;
  for (Eigen::Index j = 0; j < p; ++j) th.emplace_back(j, j, 2.0);
  Vector g = Vector::Zero(nv);
  std::vector<double> dvals;
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector a = data.signed_point(i);
    if (fx[i] == 1) {
      m.objective_constant += lambda;
      continue;  // constraint vacuous for large M
    }
    // -a'w - M z_i <= -1   (z term only when free)
    for (Eigen::Index j = 0; j < p; ++j)
      if (a(j) != 0.0) tc.emplace_back(row, j, -a(j));
    if (fx[i] == -1) tc.emplace_back(row, m.z_index[i], -big_m);
    dvals.push_back(-1.0);
    ++row;
    if (fx[i] == -1) {
      g(m.z_index[i]) = lambda;
      tc.emplace_back(row, m.z_index[i], -1.0);  // -z <= 0
      dvals.push_back(0.0);
      ++row;
      tc.emplace_back(row, m.z_index[i], 1.0);  // z <= 1
      dvals.push_back(1.0);
      ++row;
    }
  }
  m.problem.H.resize(nv, nv);
  m.problem.H.setFromTriplets(th.begin(), th.end());
  m.problem.g = g;
  m.problem.C.resize(row, nv);
  m.problem.C.setFromTriplets(tc.begin(), tc.end());
  m.problem.d = Eigen::Map<Vector>(dvals.data(), row);
  return m;
}

// ----- conic models -----

struct SdpModel {
  ConicProgram program;
  Eigen::Index dim_w = 0;    // weight (or dual coefficient) count
  Eigen::Index n_points = 0;
  int psd_order = 0;
  Eigen::Index w_start = 0, W_start = 0;
  std::vector<int> z_index;      // variable index of z_i, -1 when fixed
  std::vector<int> margin_row;   // row of the per-point hull constraint
  std::vector<int> fixed;        // -1 free, 0, 1
  double objective_constant = 0.0;
  bool kernel_mode = false;
};

namespace detail {

// Shared builder for the training SDP over margins m_i = a_i'x:
//   min <Theta, W> (+ lambda sum z)  s.t. per-point hull constraints,
//   [[1, w'],[w, W]] psd, z in [0,1]^n (or sum z <= kappa n).
// rows a_i are the label-scaled points (linear) or Gram columns (kernel).
inline SdpModel build_margin_sdp(const Matrix& a_rows, const Matrix& theta,
                                 const SvmHyperparams& hyper, const std::vector<int>& fixed,
                                 bool kernel_mode) {
  const Eigen::Index n = a_rows.rows();
  const Eigen::Index dim = a_rows.cols();
  const Eigen::Index wlen = dim * (dim + 1) / 2;
  std::vector<int> fx = fixed.empty() ? std::vector<int>(n, -1) : fixed;
  if (static_cast<Eigen::Index>(fx.size()) != n)
    throw std::invalid_argument("fixed vector length mismatch");
  hyper.validate();
  const bool cardinality = hyper.cardinality();
  const double lambda = hyper.lambda.value_or(0.0);

  SdpModel m;
  m.dim_w = dim;
  m.n_points = n;
  m.psd_order = static_cast<int>(dim) + 1;
  m.w_start = 0;
  m.W_start = dim;
  m.kernel_mode = kernel_mode;
  m.fixed = fx;
  m.z_index.assign(n, -1);
  m.margin_row.assign(n, -1);

  // variable layout: w, svec(W), then per-point auxiliaries
  Eigen::Index nv = dim + wlen;
  std::vector<int> p_idx(n, -1), q_idx(n, -1), s_idx(n, -1), r_idx(n, -1);
  int n_fixed1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fx[i] == -1) {
      m.z_index[i] = static_cast<int>(nv++);
      p_idx[i] = static_cast<int>(nv++);
      q_idx[i] = static_cast<int>(nv++);
      s_idx[i] = static_cast<int>(nv++);
      r_idx[i] = static_cast<int>(nv++);
    } else if (fx[i] == 0) {
      q_idx[i] = static_cast<int>(nv++);
      r_idx[i] = static_cast<int>(nv++);
    } else {
      p_idx[i] = static_cast<int>(nv++);
      s_idx[i] = static_cast<int>(nv++);
      ++n_fixed1;
      if (!cardinality) m.objective_constant += lambda;
    }
  }

  std::vector<Triplet> ta;
  std::vector<double> bvals;
  std::vector<ConeDesc> cones;
  Eigen::Index row = 0;
  auto push_row = [&](double b) {
    bvals.push_back(b);
    return row++;
  };

  // split equalities p_i - q_i = 1 - m_i, one flavor per fixing
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector a = a_rows.row(i).transpose();
    if (fx[i] == -1) {
      for (Eigen::Index j = 0; j < dim; ++j)
        if (a(j) != 0.0) ta.emplace_back(row, j, a(j));
      ta.emplace_back(row, p_idx[i], 1.0);
      ta.emplace_back(row, q_idx[i], -1.0);
      push_row(1.0);
    } else if (fx[i] == 0) {
      // q_i = m_i - 1 >= 0 certifies the margin
      for (Eigen::Index j = 0; j < dim; ++j)
        if (a(j) != 0.0) ta.emplace_back(row, j, -a(j));
      ta.emplace_back(row, q_idx[i], 1.0);
      push_row(-1.0);
    } else {
      // p_i = 1 - m_i >= 0
      for (Eigen::Index j = 0; j < dim; ++j)
        if (a(j) != 0.0) ta.emplace_back(row, j, a(j));
      ta.emplace_back(row, p_idx[i], 1.0);
      push_row(1.0);
    }
  }
  cones.push_back(zero_cone(static_cast<int>(n)));

  // nonnegative rows: z bounds, split-variable signs, hull constraints,
  // optional cardinality budget
  Eigen::Index nonneg_rows = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector a = a_rows.row(i).transpose();
    if (fx[i] == -1) {
      ta.emplace_back(row, m.z_index[i], -1.0);
      push_row(0.0);  // z_i >= 0
      ta.emplace_back(row, m.z_index[i], 1.0);
      push_row(1.0);  // 1 - z_i >= 0
      ta.emplace_back(row, p_idx[i], -1.0);
      push_row(0.0);
      ta.emplace_back(row, q_idx[i], -1.0);
      push_row(0.0);
      nonneg_rows += 4;
    } else if (fx[i] == 0) {
      ta.emplace_back(row, q_idx[i], -1.0);
      push_row(0.0);
      nonneg_rows += 1;
    } else {
      ta.emplace_back(row, p_idx[i], -1.0);
      push_row(0.0);
      nonneg_rows += 1;
    }
    // hull row: <a a', W> - 2 m_i + 1 - s_i - r_i >= 0 (absent slots drop)
    Vector svec_a = psd_vectorize(Matrix(a * a.transpose()));
    for (Eigen::Index j = 0; j < dim; ++j)
      if (a(j) != 0.0) ta.emplace_back(row, j, 2.0 * a(j));
    for (Eigen::Index j = 0; j < wlen; ++j)
      if (svec_a(j) != 0.0) ta.emplace_back(row, dim + j, -svec_a(j));
    if (s_idx[i] >= 0) ta.emplace_back(row, s_idx[i], 1.0);
    if (r_idx[i] >= 0) ta.emplace_back(row, r_idx[i], 1.0);
    m.margin_row[i] = static_cast<int>(row);
    push_row(1.0);
    nonneg_rows += 1;
  }
  if (cardinality) {
    const double budget = *hyper.kappa * static_cast<double>(n) - n_fixed1;
    for (Eigen::Index i = 0; i < n; ++i)
      if (m.z_index[i] >= 0) ta.emplace_back(row, m.z_index[i], 1.0);
    push_row(budget);
    nonneg_rows += 1;
  }
  cones.push_back(nonnegative_cone(static_cast<int>(nonneg_rows)));

  // rotated cones: epigraphs s_i >= p_i^2/z_i and r_i >= q_i^2/(1-z_i);
  // fixed points keep one epigraph with unit denominator
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fx[i] == -1) {
      ta.emplace_back(row, s_idx[i], -1.0);
      push_row(0.0);
      ta.emplace_back(row, m.z_index[i], -0.5);
      push_row(0.0);
      ta.emplace_back(row, p_idx[i], -1.0);
      push_row(0.0);
      cones.push_back(rotated_second_order_cone(3));
      ta.emplace_back(row, r_idx[i], -1.0);
      push_row(0.0);
      ta.emplace_back(row, m.z_index[i], 0.5);
      push_row(0.5);
      ta.emplace_back(row, q_idx[i], -1.0);
      push_row(0.0);
      cones.push_back(rotated_second_order_cone(3));
    } else if (fx[i] == 0) {
      ta.emplace_back(row, r_idx[i], -1.0);
      push_row(0.0);
      push_row(0.5);
      ta.emplace_back(row, q_idx[i], -1.0);
      push_row(0.0);
      cones.push_back(rotated_second_order_cone(3));
    } else {
      ta.emplace_back(row, s_idx[i], -1.0);
      push_row(0.0);
      push_row(0.5);
      ta.emplace_back(row, p_idx[i], -1.0);
      push_row(0.0);
      cones.push_back(rotated_second_order_cone(3));
    }
  }

  // psd block [[1, w'],[w, W]]
  {
    const int k = m.psd_order;
    const double rt2 = std::sqrt(2.0);
    for (int col = 0; col < k; ++col) {
      for (int r = col; r < k; ++r) {
        if (r == 0 && col == 0) {
          push_row(1.0);
        } else if (col == 0) {
          ta.emplace_back(row, m.w_start + (r - 1), -rt2);
          push_row(0.0);
        } else {
          // svec index of (r-1, col-1) within W
          const int a_ = r - 1, b_ = col - 1;
          int widx = 0;
          for (int c2 = 0; c2 < b_; ++c2) widx += static_cast<int>(dim) - c2;
          widx += a_ - b_;
          ta.emplace_back(row, m.W_start + widx, -1.0);
          push_row(0.0);
        }
      }
    }
    cones.push_back(psd_cone(k));
  }

  m.program.objective = Vector::Zero(nv);
  Vector theta_vec = psd_vectorize(theta);
  m.program.objective.segment(m.W_start, wlen) = theta_vec;
  if (!cardinality)
    for (Eigen::Index i = 0; i < n; ++i)
      if (m.z_index[i] >= 0) m.program.objective(m.z_index[i]) = lambda;

  m.program.rhs = Eigen::Map<Vector>(bvals.data(), row);
  m.program.constraint_matrix.resize(row, nv);
  m.program.constraint_matrix.setFromTriplets(ta.begin(), ta.end());
  m.program.cones = std::move(cones);

  m.program.variable_names.assign(nv, "");
  const char* coef = kernel_mode ? "alpha" : "w";
  const char* mat = kernel_mode ? "A" : "W";
  for (Eigen::Index j = 0; j < dim; ++j)
    m.program.variable_names[j] = std::string(coef) + std::to_string(j);
  for (Eigen::Index j = 0; j < wlen; ++j) {
    const auto [r2, c2] = svec_position(static_cast<int>(dim), static_cast<int>(j));
    m.program.variable_names[m.W_start + j] =
        std::string(mat) + std::to_string(r2) + "_" + std::to_string(c2);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string tag = std::to_string(i);
    if (m.z_index[i] >= 0) m.program.variable_names[m.z_index[i]] = "z" + tag;
    if (p_idx[i] >= 0) m.program.variable_names[p_idx[i]] = "p" + tag;
    if (q_idx[i] >= 0) m.program.variable_names[q_idx[i]] = "q" + tag;
    if (s_idx[i] >= 0) m.program.variable_names[s_idx[i]] = "s" + tag;
    if (r_idx[i] >= 0) m.program.variable_names[r_idx[i]] = "r" + tag;
  }

  m.program.validate();
  return m;
}

}  // namespace detail

/// Training SDP with the hull-derived per-point constraints (penalty or
/// cardinality form), on label-scaled features.
inline SdpModel build_conic_sdp(const LabeledDataset& data, const SvmHyperparams& hyper,
                                const std::vector<int>& fixed = {}) {
  if (hyper.form != SvmHyperparams::Form::ConicSdpPenalty &&
      hyper.form != SvmHyperparams::Form::ConicSdpCardinality)
    throw std::invalid_argument("build_conic_sdp needs a conic form");
  Matrix a(data.n(), data.p());
  for (Eigen::Index i = 0; i < data.n(); ++i) a.row(i) = data.signed_point(i).transpose();
  return detail::build_margin_sdp(a, Matrix::Identity(data.p(), data.p()), hyper, fixed, false);
}

/// Kernelized variant over dual coefficients alpha, margins K_i'alpha and
/// objective <K, A>.
inline SdpModel build_kernel_sdp(const LabeledDataset& data, const Kernel& kernel,
                                 const SvmHyperparams& hyper) {
  if (hyper.form != SvmHyperparams::Form::KernelConicSdp)
    throw std::invalid_argument("build_kernel_sdp needs the kernel form");
  Matrix K = gram_matrix(kernel, data);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, K.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("kernel Gram matrix is not positive semidefinite");
  return detail::build_margin_sdp(K, K, hyper, {}, true);
}

// ----- solution extraction -----

inline SolverStatus to_solver_status(ConicStatus s) {
  switch (s) {
    case ConicStatus::Optimal: return SolverStatus::Optimal;
    case ConicStatus::Inaccurate: return SolverStatus::Inaccurate;
    case ConicStatus::PrimalInfeasible: return SolverStatus::Infeasible;
    case ConicStatus::DualInfeasible: return SolverStatus::Unbounded;
    case ConicStatus::IterationLimit: return SolverStatus::IterationLimit;
  }
  return SolverStatus::IterationLimit;
}

inline SolverStatus to_solver_status(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return SolverStatus::Optimal;
    case QpStatus::Infeasible: return SolverStatus::Infeasible;
    case QpStatus::IterationLimit: return SolverStatus::IterationLimit;
  }
  return SolverStatus::IterationLimit;
}

inline Vector extract_z(const SdpModel& model, const Vector& primal) {
  Vector z(model.n_points);
  for (Eigen::Index i = 0; i < model.n_points; ++i) {
    if (model.z_index[i] >= 0)
      z(i) = primal(model.z_index[i]);
    else
      z(i) = model.fixed[i];
  }
  return z;
}

inline TrainedClassifier extract_classifier(const SdpModel& model, const ConicSolution& sol,
                                            const Kernel* kernel = nullptr) {
  const SolverStatus status = to_solver_status(sol.status);
  if (sol.status == ConicStatus::PrimalInfeasible || sol.status == ConicStatus::DualInfeasible) {
    TrainedClassifier c = TrainedClassifier::linear(Vector::Zero(model.dim_w),
                                                    std::numeric_limits<double>::quiet_NaN(),
                                                    status);
    return c;
  }
  Vector coef = sol.primal.segment(model.w_start, model.dim_w);
  const double obj = sol.primal_objective + model.objective_constant;
  Vector z = extract_z(model, sol.primal);
  if (model.kernel_mode) {
    if (kernel == nullptr) throw std::invalid_argument("kernel extraction needs the kernel");
    return TrainedClassifier::dual(coef, *kernel, obj, status, z);
  }
  return TrainedClassifier::linear(coef, obj, status, z);
}

/// Dual multipliers of the per-point hull constraints; at an optimum these
/// are the strongest-relaxation gamma weights.
inline Vector recover_gamma(const SdpModel& model, const ConicSolution& sol) {
  if (sol.status != ConicStatus::Optimal && sol.status != ConicStatus::Inaccurate)
    throw std::runtime_error("gamma recovery needs an optimal solution");
  Vector gamma(model.n_points);
  for (Eigen::Index i = 0; i < model.n_points; ++i) gamma(i) = sol.dual(model.margin_row[i]);
  return gamma;
}

// ----- one-call training front end -----

struct TrainOptions {
  SolverSettings conic;
  QpSettings qp;
};

inline TrainedClassifier train(const LabeledDataset& data, const SvmHyperparams& hyper,
                               const Kernel* kernel = nullptr, const TrainOptions& opts = {}) {
  hyper.validate();
  switch (hyper.form) {
    case SvmHyperparams::Form::HingeQP: {
      auto model = build_hinge_qp(data, *hyper.lambda);
      auto sol = solve_qp(model.problem, opts.qp);
      Vector w = sol.x.head(model.dim_w);
      return TrainedClassifier::linear(w, sol.objective, to_solver_status(sol.status));
    }
    case SvmHyperparams::Form::BigMRelaxation: {
      auto model = build_bigm_relaxation(data, *hyper.lambda, *hyper.big_m);
      auto sol = solve_qp(model.problem, opts.qp);
      Vector w = sol.x.head(model.dim_w);
      Vector z(model.n_points);
      for (Eigen::Index i = 0; i < model.n_points; ++i) z(i) = sol.x(model.z_index[i]);
      return TrainedClassifier::linear(w, sol.objective + model.objective_constant,
                                       to_solver_status(sol.status), z);
    }
    case SvmHyperparams::Form::ConicSdpPenalty:
    case SvmHyperparams::Form::ConicSdpCardinality: {
      auto model = build_conic_sdp(data, hyper);
      auto sol = solve(model.program, opts.conic);
      return extract_classifier(model, sol);
    }
    case SvmHyperparams::Form::KernelConicSdp: {
      if (kernel == nullptr) throw std::invalid_argument("kernel form needs a kernel");
      auto model = build_kernel_sdp(data, *kernel, hyper);
      auto sol = solve(model.program, opts.conic);
      return extract_classifier(model, sol, kernel);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace conicsvm
