#pragma once

// Mehrotra predictor-corrector for convex quadratic programs
//   min (1/2) x'Hx + g'x  s.t.  C x <= d
// with H psd (possibly zero). The augmented KKT system is factorized by a
// sparse LDLT with static regularization and iterative refinement.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "conicsvm/conic_program.hpp"

namespace conicsvm {

struct QpProblem {
  SparseMatrix H;  // n x n, psd
  Vector g;
  SparseMatrix C;  // m x n
  Vector d;

  Eigen::Index num_vars() const { return g.size(); }
  Eigen::Index num_ineq() const { return d.size(); }

  void validate() const {
    if (H.rows() != H.cols() || H.rows() != g.size())
      throw std::invalid_argument("qp: H/g shape mismatch");
    if (C.rows() != d.size() || (C.rows() > 0 && C.cols() != g.size()))
      throw std::invalid_argument("qp: C/d shape mismatch");
    if (!g.allFinite() || !d.allFinite()) throw std::invalid_argument("qp: non-finite data");
  }
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpSolution {
  Vector x;
  Vector duals;  // multipliers of C x <= d, nonnegative
  QpStatus status = QpStatus::IterationLimit;
  double objective = 0.0;
  int iterations = 0;
};

struct QpSettings {
  double tol = 1e-9;
  int max_iters = 100;
  double static_reg = 1e-9;
};

inline QpSolution solve_qp(QpProblem qp, const QpSettings& opt = {}) {
  qp.validate();
  const Eigen::Index n = qp.num_vars();
  const Eigen::Index m = qp.num_ineq();
  QpSolution sol;

  // normalize the objective so extreme penalty weights stay well scaled;
  // the minimizer is unchanged and duals/objective are scaled back below
  double hmax = 0.0;
  for (int k = 0; k < qp.H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(qp.H, k); it; ++it)
      hmax = std::max(hmax, std::abs(it.value()));
  const double obj_scale = std::max({1.0, qp.g.lpNorm<Eigen::Infinity>(), hmax});
  qp.H /= obj_scale;
  qp.g /= obj_scale;

  if (m == 0) {
    Matrix Hd = Matrix(qp.H) + 1e-12 * Matrix::Identity(n, n);
    Eigen::LDLT<Matrix> ldlt(Hd);
    sol.x = ldlt.solve(-qp.g);
    sol.duals.resize(0);
    sol.status = QpStatus::Optimal;
    sol.objective = obj_scale * (0.5 * sol.x.dot(qp.H * sol.x) + qp.g.dot(sol.x));
    return sol;
  }

  SparseMatrix CT = qp.C.transpose();

  Vector x = Vector::Zero(n);
  Vector s(m), z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s(i) = std::max(1.0, qp.d(i));
    z(i) = 1.0;
  }

  const double dinf = 1.0 + qp.d.lpNorm<Eigen::Infinity>();
  const double ginf = 1.0 + qp.g.lpNorm<Eigen::Infinity>();
  const double reg = opt.static_reg;
  const Eigen::Index kdim = n + m;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool analyzed = false;

  auto assemble = [&](const Vector& soz) {
    std::vector<Triplet> t;
    t.reserve(static_cast<size_t>(qp.H.nonZeros() + qp.C.nonZeros() + kdim));
    for (Eigen::Index j = 0; j < n; ++j) t.emplace_back(j, j, reg);
    for (int k = 0; k < qp.H.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(qp.H, k); it; ++it)
        if (it.row() >= it.col()) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < qp.C.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(qp.C, k); it; ++it)
        t.emplace_back(n + it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < m; ++i) t.emplace_back(n + i, n + i, -soz(i) - reg);
    SparseMatrix K(kdim, kdim);
    K.setFromTriplets(t.begin(), t.end());
    if (!analyzed) {
      ldlt.analyzePattern(K);
      analyzed = true;
    }
    ldlt.factorize(K);
    return ldlt.info() == Eigen::Success;
  };

  auto kkt_solve = [&](const Vector& bx, const Vector& bz, const Vector& soz, Vector& dx,
                       Vector& dz) {
    Vector rhs(kdim);
    rhs.head(n) = bx;
    rhs.tail(m) = bz;
    Vector u = ldlt.solve(rhs);
    double prev = std::numeric_limits<double>::max();
    Vector best = u;
    for (int it = 0; it <= 6; ++it) {
      Vector ex = bx - qp.H * u.head(n) - CT * u.tail(m);
      Vector ez = bz - qp.C * u.head(n) + soz.cwiseProduct(u.tail(m));
      const double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
      if (err < prev) {
        best = u;
        prev = err;
      }
      if (err < 1e-13 * (1.0 + rhs.lpNorm<Eigen::Infinity>()) || it == 6) break;
      Vector e(kdim);
      e.head(n) = ex;
      e.tail(m) = ez;
      u += ldlt.solve(e);
    }
    dx = best.head(n);
    dz = best.tail(m);
  };

  Vector dx(n), dz(m), ds(m), dx_c(n), dz_c(m), ds_c(m);
  Vector best_x = x, best_s = s, best_z = z;
  double best_merit = std::numeric_limits<double>::max();
  int iter = 0;
  for (iter = 0; iter < opt.max_iters; ++iter) {
    Vector Hx = qp.H * x;
    Vector rd = Hx + qp.g + CT * z;
    Vector rp = qp.C * x + s - qp.d;
    const double mu = s.dot(z) / static_cast<double>(m);
    const double obj = 0.5 * x.dot(Hx) + qp.g.dot(x);

    const double pres = rp.lpNorm<Eigen::Infinity>();
    const double dres = rd.lpNorm<Eigen::Infinity>();
    const double merit = std::max({pres / dinf, dres / ginf, s.dot(z) / (1.0 + std::abs(obj))});
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_s = s;
      best_z = z;
    }
    if (pres <= opt.tol * dinf && dres <= opt.tol * ginf &&
        s.dot(z) <= std::max(opt.tol * (1.0 + std::abs(obj)), 1e-12)) {
      sol.status = QpStatus::Optimal;
      break;
    }
    // divergence heuristic: dual blow-up with stubborn primal residual
    if (iter > 20 && pres > 1e-6 * dinf && z.lpNorm<Eigen::Infinity>() > 1e10) {
      sol.status = QpStatus::Infeasible;
      break;
    }

    Vector soz = s.cwiseQuotient(z);
    if (!assemble(soz)) {
      sol.status = QpStatus::IterationLimit;
      break;
    }

    // predictor
    Vector rhs_z = -rp + s;
    kkt_solve(-rd, rhs_z, soz, dx, dz);
    ds = -s - soz.cwiseProduct(dz);

    auto max_step = [](const Vector& v, const Vector& dv) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
      return a;
    };
    const double ap_aff = max_step(s, ds);
    const double ad_aff = max_step(z, dz);
    double mu_aff = (s + ap_aff * ds).dot(z + ad_aff * dz) / static_cast<double>(m);
    mu_aff = std::max(mu_aff, 0.0);
    const double sigma = std::min(std::pow(mu_aff / mu, 3.0), 0.99);

    // corrector
    Vector comp = s.cwiseProduct(z) + ds.cwiseProduct(dz);
    comp.array() -= sigma * mu;
    rhs_z = -rp + comp.cwiseQuotient(z);
    kkt_solve(-rd, rhs_z, soz, dx_c, dz_c);
    ds_c = (-comp - s.cwiseProduct(dz_c)).cwiseQuotient(z);

    const double ap = std::min(1.0, 0.9995 * max_step(s, ds_c));
    const double ad = std::min(1.0, 0.9995 * max_step(z, dz_c));
    x += ap * dx_c;
    s += ap * ds_c;
    z += ad * dz_c;

    // stalled or exploded: fall back to the best iterate seen
    if (!x.allFinite() || !s.allFinite() || !z.allFinite() ||
        (iter > 5 && ap < 1e-10 && ad < 1e-10)) {
      x = best_x;
      s = best_s;
      z = best_z;
      sol.status = QpStatus::IterationLimit;
      break;
    }
  }

  if (sol.status != QpStatus::Optimal && best_merit < std::numeric_limits<double>::max()) {
    x = best_x;
    s = best_s;
    z = best_z;
  }
  sol.x = x;
  sol.duals = obj_scale * z;
  sol.iterations = iter;
  sol.objective = obj_scale * (0.5 * x.dot(qp.H * x) + qp.g.dot(x));
  if (iter == opt.max_iters) sol.status = QpStatus::IterationLimit;
  return sol;
}

/// Dense convenience overload matching the operation contract.
inline QpSolution solve_qp(const Matrix& H, const Vector& g, const Matrix& C, const Vector& d,
                           const QpSettings& opt = {}) {
  QpProblem qp;
  qp.H = H.sparseView();
  qp.g = g;
  qp.C = C.sparseView();
  qp.d = d;
  return solve_qp(qp, opt);
}

}  // namespace conicsvm
