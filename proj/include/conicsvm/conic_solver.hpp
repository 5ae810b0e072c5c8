#pragma once

// Homogeneous self-dual interior-point solver over the product of zero,
// nonnegative, second-order and semidefinite cones, with Nesterov-Todd
// scalings and a Mehrotra predictor-corrector. Rotated second-order cones
// are mapped to plain second-order cones by an orthogonal involution of
// their first two rows. The KKT system is solved by a sparse LDLT with
// static regularization and iterative refinement.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>
#include <vector>

#include "conicsvm/conic_program.hpp"

namespace conicsvm {

namespace ipm_detail {

constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 0.9995;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 0.9999;
constexpr double kSafeguard = 500.0;
constexpr double kLineSearchEps = 1e-13;
constexpr int kIpmIterMax = 200;

struct SocBlock {
  int start = 0;   // offset into the barrier rows
  int dim = 0;
  bool rotated = false;  // user block was a rotated cone
  Matrix W2;             // eta^2 (2 wbar wbar' - J)^2
  Matrix H;              // 2 wbar wbar' - J
  double eta = 0.0;
};

struct PsdBlock {
  int start = 0;
  int order = 0;
  int len = 0;  // order (order+1) / 2
  Matrix R, Rti;
  Vector sigma;  // singular values; lambda block is diag(sigma)
  Matrix W2;
};

inline Matrix smat(const Vector& v, int k) {
  Matrix M(k, k);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < k; ++j) {
    M(j, j) = v(idx++);
    for (int i = j + 1; i < k; ++i) {
      const double val = v(idx++) * inv_rt2;
      M(i, j) = val;
      M(j, i) = val;
    }
  }
  return M;
}

inline void svec_into(const Matrix& M, Vector& v, int offset) {
  const int k = static_cast<int>(M.rows());
  const double rt2 = std::sqrt(2.0);
  int idx = offset;
  for (int j = 0; j < k; ++j) {
    v(idx++) = M(j, j);
    for (int i = j + 1; i < k; ++i) v(idx++) = rt2 * 0.5 * (M(i, j) + M(j, i));
  }
}

class Solver {
 public:
  Solver(const ConicProgram& prog, const SolverSettings& settings)
      : prog_(prog), opt_(settings) {
    build_layout();
  }

  ConicSolution run() {
    const auto t0 = std::chrono::steady_clock::now();
    ConicSolution sol = iterate();
    sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
  }

 private:
  const ConicProgram& prog_;
  SolverSettings opt_;

  Eigen::Index n_ = 0;      // variables
  Eigen::Index n_eq_ = 0;   // equality rows
  Eigen::Index m_ = 0;      // barrier rows
  Eigen::Index nonneg_ = 0;
  std::vector<SocBlock> socs_;
  std::vector<PsdBlock> psds_;
  int degree_ = 0;

  SparseMatrix Aeq_, G_, AeqT_, GT_;
  Vector beq_, h_, c_;
  std::vector<Eigen::Index> eq_orig_, cone_orig_;  // internal row -> original row

  Eigen::Index kdim_ = 0;
  SparseMatrix K_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool analyzed_ = false;

  // iterate state
  Vector x_, y_, z_, s_, lambda_;
  double tau_ = 1.0, kap_ = 1.0;

  struct Residuals {
    Vector rx, ry, rz;
    double rt = 0, hresx = 0, hresy = 0, hresz = 0;
    double cx = 0, by = 0, hz = 0;
    double nx = 0, ny = 0, nz = 0, ns = 0;
  } res_;

  struct Stats {
    double gap = 0, mu = 0, pcost = 0, dcost = 0;
    double pres = 0, dres = 0;
    double pinfres = -1, dinfres = -1;
    double pres_abs = 0, dres_abs = 0;  // contract-form residuals
    bool gap_ok = false;
  } st_;

  double resx0_ = 1, resy0_ = 1, resz0_ = 1, normb_full_ = 0, normc_ = 0;

  void build_layout() {
    prog_.validate();
    n_ = prog_.num_vars();
    c_ = prog_.objective;
    normc_ = c_.norm();
    normb_full_ = prog_.rhs.norm();

    // bucket the rows of A
    const Eigen::Index mtot = prog_.num_rows();
    std::vector<std::vector<std::pair<Eigen::Index, double>>> rows(mtot);
    for (int k = 0; k < prog_.constraint_matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(prog_.constraint_matrix, k); it; ++it)
        rows[it.row()].emplace_back(it.col(), it.value());

    // classify cone blocks in user order, remembering original rows
    struct UserBlock {
      ConeDesc desc;
      Eigen::Index row0;
    };
    std::vector<UserBlock> blocks;
    Eigen::Index r = 0;
    for (const auto& cd : prog_.cones) {
      blocks.push_back({cd, r});
      r += cd.rows();
    }

    for (const auto& b : blocks) {
      switch (b.desc.kind) {
        case ConeKind::Zero:
          n_eq_ += b.desc.dim;
          break;
        case ConeKind::Nonnegative:
          nonneg_ += b.desc.dim;
          break;
        case ConeKind::SecondOrder:
        case ConeKind::RotatedSecondOrder:
        case ConeKind::Psd:
          break;
      }
    }

    std::vector<Triplet> ta, tg;
    beq_.resize(n_eq_);
    eq_orig_.clear();
    cone_orig_.clear();
    Eigen::Index eqi = 0;

    auto copy_row = [&](std::vector<Triplet>& t, Eigen::Index dst, Eigen::Index src, double w) {
      for (const auto& [col, val] : rows[src]) t.emplace_back(dst, col, w * val);
    };

    // equality rows first
    for (const auto& b : blocks) {
      if (b.desc.kind != ConeKind::Zero) continue;
      for (int i = 0; i < b.desc.dim; ++i) {
        copy_row(ta, eqi, b.row0 + i, 1.0);
        beq_(eqi) = prog_.rhs(b.row0 + i);
        eq_orig_.push_back(b.row0 + i);
        ++eqi;
      }
    }

    // barrier rows: nonnegative, then (rotated) second-order, then psd
    std::vector<double> hvals;
    Eigen::Index ci = 0;
    for (const auto& b : blocks) {
      if (b.desc.kind != ConeKind::Nonnegative) continue;
      for (int i = 0; i < b.desc.dim; ++i) {
        copy_row(tg, ci, b.row0 + i, 1.0);
        hvals.push_back(prog_.rhs(b.row0 + i));
        cone_orig_.push_back(b.row0 + i);
        ++ci;
      }
    }
    const double ir2 = 1.0 / std::sqrt(2.0);
    for (const auto& b : blocks) {
      if (b.desc.kind != ConeKind::SecondOrder && b.desc.kind != ConeKind::RotatedSecondOrder)
        continue;
      SocBlock sb;
      sb.start = static_cast<int>(ci);
      sb.dim = b.desc.dim;
      sb.rotated = (b.desc.kind == ConeKind::RotatedSecondOrder);
      socs_.push_back(sb);
      if (sb.rotated) {
        // (u, v, w) in rotated cone  <=>  ((u+v)/r2, (u-v)/r2, w) in soc
        copy_row(tg, ci, b.row0, ir2);
        copy_row(tg, ci, b.row0 + 1, ir2);
        hvals.push_back(ir2 * (prog_.rhs(b.row0) + prog_.rhs(b.row0 + 1)));
        cone_orig_.push_back(b.row0);
        ++ci;
        copy_row(tg, ci, b.row0, ir2);
        copy_row(tg, ci, b.row0 + 1, -ir2);
        hvals.push_back(ir2 * (prog_.rhs(b.row0) - prog_.rhs(b.row0 + 1)));
        cone_orig_.push_back(b.row0 + 1);
        ++ci;
        for (int i = 2; i < b.desc.dim; ++i) {
          copy_row(tg, ci, b.row0 + i, 1.0);
          hvals.push_back(prog_.rhs(b.row0 + i));
          cone_orig_.push_back(b.row0 + i);
          ++ci;
        }
      } else {
        for (int i = 0; i < b.desc.dim; ++i) {
          copy_row(tg, ci, b.row0 + i, 1.0);
          hvals.push_back(prog_.rhs(b.row0 + i));
          cone_orig_.push_back(b.row0 + i);
          ++ci;
        }
      }
    }
    for (const auto& b : blocks) {
      if (b.desc.kind != ConeKind::Psd) continue;
      PsdBlock pb;
      pb.start = static_cast<int>(ci);
      pb.order = b.desc.dim;
      pb.len = b.desc.dim * (b.desc.dim + 1) / 2;
      psds_.push_back(pb);
      for (int i = 0; i < pb.len; ++i) {
        copy_row(tg, ci, b.row0 + i, 1.0);
        hvals.push_back(prog_.rhs(b.row0 + i));
        cone_orig_.push_back(b.row0 + i);
        ++ci;
      }
    }
    m_ = ci;

    Aeq_.resize(n_eq_, n_);
    Aeq_.setFromTriplets(ta.begin(), ta.end());
    G_.resize(m_, n_);
    G_.setFromTriplets(tg.begin(), tg.end());
    AeqT_ = Aeq_.transpose();
    GT_ = G_.transpose();
    h_ = Eigen::Map<Vector>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));

    degree_ = static_cast<int>(nonneg_) + static_cast<int>(socs_.size());
    for (const auto& pb : psds_) degree_ += pb.order;

    resx0_ = std::max(1.0, c_.norm());
    resy0_ = std::max(1.0, beq_.norm());
    resz0_ = std::max(1.0, h_.norm());
    kdim_ = n_ + n_eq_ + m_;
  }

  // ----- cone operations on barrier vectors -----

  Vector cone_identity() const {
    Vector e = Vector::Zero(m_);
    e.head(nonneg_).setOnes();
    for (const auto& sb : socs_) e(sb.start) = 1.0;
    for (const auto& pb : psds_) {
      int idx = pb.start;
      for (int j = 0; j < pb.order; ++j) {
        e(idx) = 1.0;
        idx += pb.order - j;
      }
    }
    return e;
  }

  /// Worst distance of r to the cone interior boundary (positive when outside).
  double cone_violation(const Vector& r) const {
    double alpha = -1.0;
    for (Eigen::Index i = 0; i < nonneg_; ++i) alpha = std::max(alpha, -r(i));
    for (const auto& sb : socs_) {
      const double cres = r(sb.start) - r.segment(sb.start + 1, sb.dim - 1).norm();
      alpha = std::max(alpha, -cres);
    }
    for (const auto& pb : psds_) {
      Matrix M = smat(r.segment(pb.start, pb.len), pb.order);
      Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
      alpha = std::max(alpha, -es.eigenvalues().minCoeff());
    }
    return alpha;
  }

  Vector bring_to_cone(const Vector& r) const {
    const double alpha = std::max(cone_violation(r), -0.99);
    return r + (1.0 + alpha) * cone_identity();
  }

  // diag(s/z) entries for the nonnegative rows; refreshed per iteration
  Vector nn_w2_;

  bool compute_scaling() {
    nn_w2_.resize(nonneg_);
    lambda_.resize(m_);
    for (Eigen::Index i = 0; i < nonneg_; ++i) {
      if (s_(i) <= 0.0 || z_(i) <= 0.0) return false;
      nn_w2_(i) = s_(i) / z_(i);
      lambda_(i) = std::sqrt(s_(i) * z_(i));
    }
    for (auto& sb : socs_) {
      const auto sseg = s_.segment(sb.start, sb.dim);
      const auto zseg = z_.segment(sb.start, sb.dim);
      // product form avoids the cancellation in s0^2 - ||s1||^2 near the
      // cone boundary
      const double sres =
          (sseg(0) - sseg.tail(sb.dim - 1).norm()) * (sseg(0) + sseg.tail(sb.dim - 1).norm());
      const double zres =
          (zseg(0) - zseg.tail(sb.dim - 1).norm()) * (zseg(0) + zseg.tail(sb.dim - 1).norm());
      if (sres <= 0.0 || zres <= 0.0) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      Vector sbar = sseg / snorm, zbar = zseg / znorm;
      double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
      Vector wbar(sb.dim);
      wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
      wbar.tail(sb.dim - 1) =
          (0.5 / gamma) * (sbar.tail(sb.dim - 1) - zbar.tail(sb.dim - 1));
      sb.eta = std::sqrt(snorm / znorm);
      // hyperbolic Householder form of the NT scaling point
      const double a = wbar(0);
      const auto q = wbar.tail(sb.dim - 1);
      sb.H.resize(sb.dim, sb.dim);
      sb.H(0, 0) = a;
      sb.H.row(0).tail(sb.dim - 1) = q.transpose();
      sb.H.col(0).tail(sb.dim - 1) = q;
      sb.H.bottomRightCorner(sb.dim - 1, sb.dim - 1) =
          Matrix::Identity(sb.dim - 1, sb.dim - 1) + q * q.transpose() / (1.0 + a);
      sb.W2 = (sb.eta * sb.eta) * (sb.H * sb.H);
      lambda_.segment(sb.start, sb.dim) = sb.eta * (sb.H * zseg);
    }
    for (auto& pb : psds_) {
      Matrix S = smat(s_.segment(pb.start, pb.len), pb.order);
      Matrix Z = smat(z_.segment(pb.start, pb.len), pb.order);
      auto chol_with_retry = [&](Matrix M, Matrix& L) {
        Eigen::LLT<Matrix> llt(M);
        if (llt.info() != Eigen::Success) {
          const double bump = 1e-14 * std::max(1.0, M.trace());
          llt.compute(M + bump * Matrix::Identity(M.rows(), M.cols()));
          if (llt.info() != Eigen::Success) return false;
        }
        L = llt.matrixL();
        return true;
      };
      Matrix Ls, Lz;
      if (!chol_with_retry(S, Ls) || !chol_with_retry(Z, Lz)) return false;
      Eigen::JacobiSVD<Matrix> svd(Lz.transpose() * Ls,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
      pb.sigma = svd.singularValues();
      if (pb.sigma.minCoeff() <= 0.0) return false;
      Vector isq = pb.sigma.cwiseSqrt().cwiseInverse();
      pb.R = Ls * svd.matrixV() * isq.asDiagonal();
      pb.Rti = Lz * svd.matrixU() * isq.asDiagonal();
      // lambda block = diag(sigma)
      Vector lb = Vector::Zero(pb.len);
      int idx = 0;
      for (int j = 0; j < pb.order; ++j) {
        lb(idx) = pb.sigma(j);
        idx += pb.order - j;
      }
      lambda_.segment(pb.start, pb.len) = lb;
      // W'W = symmetric Kronecker square of B = R R'
      Matrix B = pb.R * pb.R.transpose();
      pb.W2.resize(pb.len, pb.len);
      const double rt2 = std::sqrt(2.0);
      int col = 0;
      for (int cj = 0; cj < pb.order; ++cj) {
        for (int cri = cj; cri < pb.order; ++cri) {
          Matrix M;
          if (cri == cj) {
            M = B.col(cj) * B.row(cj);
          } else {
            M = (B.col(cri) * B.row(cj) + B.col(cj) * B.row(cri)) / rt2;
          }
          Vector out(pb.len);
          svec_into(M, out, 0);
          pb.W2.col(col++) = out;
        }
      }
      pb.W2 = 0.5 * (pb.W2 + pb.W2.transpose().eval());
    }
    return true;
  }

  /// u -> W u
  Vector scale_w(const Vector& u) const {
    Vector out(m_);
    out.head(nonneg_) = nn_w2_.cwiseSqrt().cwiseProduct(u.head(nonneg_));
    for (const auto& sb : socs_)
      out.segment(sb.start, sb.dim) = sb.eta * (sb.H * u.segment(sb.start, sb.dim));
    for (const auto& pb : psds_) {
      Matrix U = smat(u.segment(pb.start, pb.len), pb.order);
      Matrix M = pb.R.transpose() * U * pb.R;
      Vector out_b(pb.len);
      svec_into(M, out_b, 0);
      out.segment(pb.start, pb.len) = out_b;
    }
    return out;
  }

  /// u -> W' u  (differs from W u only on psd blocks)
  Vector scale_wT(const Vector& u) const {
    Vector out(m_);
    out.head(nonneg_) = nn_w2_.cwiseSqrt().cwiseProduct(u.head(nonneg_));
    for (const auto& sb : socs_)
      out.segment(sb.start, sb.dim) = sb.eta * (sb.H * u.segment(sb.start, sb.dim));
    for (const auto& pb : psds_) {
      Matrix U = smat(u.segment(pb.start, pb.len), pb.order);
      Matrix M = pb.R * U * pb.R.transpose();
      Vector out_b(pb.len);
      svec_into(M, out_b, 0);
      out.segment(pb.start, pb.len) = out_b;
    }
    return out;
  }

  Vector w2_mul(const Vector& u) const {
    Vector out(m_);
    out.head(nonneg_) = nn_w2_.cwiseProduct(u.head(nonneg_));
    for (const auto& sb : socs_)
      out.segment(sb.start, sb.dim) = sb.W2 * u.segment(sb.start, sb.dim);
    for (const auto& pb : psds_)
      out.segment(pb.start, pb.len) = pb.W2 * u.segment(pb.start, pb.len);
    return out;
  }

  /// Jordan product u o v.
  Vector cone_product(const Vector& u, const Vector& v) const {
    Vector out(m_);
    out.head(nonneg_) = u.head(nonneg_).cwiseProduct(v.head(nonneg_));
    for (const auto& sb : socs_) {
      const auto us = u.segment(sb.start, sb.dim);
      const auto vs = v.segment(sb.start, sb.dim);
      out(sb.start) = us.dot(vs);
      out.segment(sb.start + 1, sb.dim - 1) =
          us(0) * vs.tail(sb.dim - 1) + vs(0) * us.tail(sb.dim - 1);
    }
    for (const auto& pb : psds_) {
      Matrix U = smat(u.segment(pb.start, pb.len), pb.order);
      Matrix V = smat(v.segment(pb.start, pb.len), pb.order);
      Matrix M = 0.5 * (U * V + V * U);
      Vector out_b(pb.len);
      svec_into(M, out_b, 0);
      out.segment(pb.start, pb.len) = out_b;
    }
    return out;
  }

  /// lambda \ u, the inverse Jordan product against the scaling point.
  Vector lambda_divide(const Vector& u) const {
    Vector out(m_);
    out.head(nonneg_) = u.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_));
    for (const auto& sb : socs_) {
      const auto ls = lambda_.segment(sb.start, sb.dim);
      const auto us = u.segment(sb.start, sb.dim);
      const double l0 = ls(0);
      const double rho = l0 * l0 - ls.tail(sb.dim - 1).squaredNorm();
      const double zeta = ls.tail(sb.dim - 1).dot(us.tail(sb.dim - 1));
      const double factor = (zeta / l0 - us(0)) / rho;
      out(sb.start) = (l0 * us(0) - zeta) / rho;
      out.segment(sb.start + 1, sb.dim - 1) =
          factor * ls.tail(sb.dim - 1) + us.tail(sb.dim - 1) / l0;
    }
    for (const auto& pb : psds_) {
      // lambda block is diagonal, so (lam o X)_ij = (sig_i + sig_j)/2 X_ij
      Matrix U = smat(u.segment(pb.start, pb.len), pb.order);
      for (int a = 0; a < pb.order; ++a)
        for (int b = 0; b < pb.order; ++b) U(a, b) *= 2.0 / (pb.sigma(a) + pb.sigma(b));
      Vector out_b(pb.len);
      svec_into(U, out_b, 0);
      out.segment(pb.start, pb.len) = out_b;
    }
    return out;
  }

  /// Largest alpha so that lambda + alpha d stays in the cone, for the two
  /// scaled directions; also bounds tau and kappa.
  double max_step(const Vector& ds, const Vector& dz, double dtau, double dkap) const {
    double alpha = 1.0 / kLineSearchEps;
    if (nonneg_ > 0) {
      const double rhomin = (ds.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_))).minCoeff();
      const double sigmin = (dz.head(nonneg_).cwiseQuotient(lambda_.head(nonneg_))).minCoeff();
      const double worst = std::min(rhomin, sigmin);
      if (worst < 0.0) alpha = std::min(alpha, 1.0 / (-worst));
    }
    const double mtau = -tau_ / dtau;
    const double mkap = -kap_ / dkap;
    if (mtau > 0.0) alpha = std::min(alpha, mtau);
    if (mkap > 0.0) alpha = std::min(alpha, mkap);

    for (const auto& sb : socs_) {
      const auto ls = lambda_.segment(sb.start, sb.dim);
      const double lknorm2 = ls(0) * ls(0) - ls.tail(sb.dim - 1).squaredNorm();
      if (lknorm2 <= 0.0) continue;
      const double lknorm = std::sqrt(lknorm2);
      Vector lkbar = ls / lknorm;
      const double lknorminv = 1.0 / lknorm;
      for (const Vector* dir : {&ds, &dz}) {
        const auto d = dir->segment(sb.start, sb.dim);
        const double lkbar_d = lkbar(0) * d(0) - lkbar.tail(sb.dim - 1).dot(d.tail(sb.dim - 1));
        Vector rho(sb.dim);
        rho(0) = lknorminv * lkbar_d;
        const double factor = (lkbar_d + d(0)) / (lkbar(0) + 1.0);
        rho.tail(sb.dim - 1) =
            lknorminv * (d.tail(sb.dim - 1) - factor * lkbar.tail(sb.dim - 1));
        const double rhonorm = rho.tail(sb.dim - 1).norm() - rho(0);
        if (rhonorm > 0.0) alpha = std::min(alpha, 1.0 / rhonorm);
      }
    }
    for (const auto& pb : psds_) {
      Vector isq = pb.sigma.cwiseSqrt().cwiseInverse();
      for (const Vector* dir : {&ds, &dz}) {
        Matrix D = smat(dir->segment(pb.start, pb.len), pb.order);
        Matrix M = isq.asDiagonal() * D * isq.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
        const double mineig = es.eigenvalues().minCoeff();
        if (mineig < 0.0) alpha = std::min(alpha, 1.0 / (-mineig));
      }
    }
    return std::clamp(alpha, kStepMin, kStepMax);
  }

  // ----- KKT machinery -----

  void assemble_kkt(bool identity_scaling, double reg_scale = 1.0) {
    std::vector<Triplet> t;
    t.reserve(static_cast<size_t>(Aeq_.nonZeros() + G_.nonZeros() + kdim_) + 4096);
    const double d = opt_.static_reg * reg_scale;
    for (Eigen::Index j = 0; j < n_; ++j) t.emplace_back(j, j, d);
    for (int k = 0; k < Aeq_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(Aeq_, k); it; ++it)
        t.emplace_back(n_ + it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < n_eq_; ++i) t.emplace_back(n_ + i, n_ + i, -d);
    const Eigen::Index z0 = n_ + n_eq_;
    for (int k = 0; k < G_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(G_, k); it; ++it)
        t.emplace_back(z0 + it.row(), it.col(), it.value());
    // the dense cone blocks keep their full pattern even under identity
    // scaling so the symbolic factorization can be reused
    for (Eigen::Index i = 0; i < nonneg_; ++i)
      t.emplace_back(z0 + i, z0 + i, identity_scaling ? -1.0 - d : -nn_w2_(i) - d);
    for (const auto& sb : socs_)
      for (int i = 0; i < sb.dim; ++i)
        for (int j = 0; j <= i; ++j) {
          const double v = identity_scaling ? (i == j ? 1.0 : 0.0) : sb.W2(i, j);
          t.emplace_back(z0 + sb.start + i, z0 + sb.start + j, -v - (i == j ? d : 0.0));
        }
    for (const auto& pb : psds_)
      for (int i = 0; i < pb.len; ++i)
        for (int j = 0; j <= i; ++j) {
          const double v = identity_scaling ? (i == j ? 1.0 : 0.0) : pb.W2(i, j);
          t.emplace_back(z0 + pb.start + i, z0 + pb.start + j, -v - (i == j ? d : 0.0));
        }
    K_.resize(kdim_, kdim_);
    K_.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(K_);
      analyzed_ = true;
    }
    ldlt_.factorize(K_);
  }

  /// Solve K0 [dx dy dz] = [bx by bz] where K0 is the unregularized KKT
  /// matrix, refining iteratively against it. identity_scaling selects
  /// W'W = I (used during initialization).
  bool solve_kkt(const Vector& bx, const Vector& by, const Vector& bz, Vector& dx, Vector& dy,
                 Vector& dz, bool identity_scaling) const {
    Vector rhs(kdim_);
    rhs.head(n_) = bx;
    rhs.segment(n_, n_eq_) = by;
    rhs.tail(m_) = bz;
    Vector u = ldlt_.solve(rhs);
    if (!u.allFinite()) return false;
    const double thresh = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    double prev_err = std::numeric_limits<double>::max();
    Vector best = u;
    for (int it = 0; it <= opt_.refine_steps; ++it) {
      const Vector ux = u.head(n_);
      const Vector uy = u.segment(n_, n_eq_);
      const Vector uz = u.tail(m_);
      Vector ex = bx - GT_ * uz;
      if (n_eq_ > 0) ex -= AeqT_ * uy;
      Vector ey = by - Aeq_ * ux;
      Vector ez = bz - G_ * ux;
      if (identity_scaling)
        ez += uz;
      else
        ez += w2_mul(uz);
      double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
      if (n_eq_ > 0) err = std::max(err, ey.lpNorm<Eigen::Infinity>());
      if (err < prev_err) {
        best = u;
        prev_err = err;
      }
      if (err < thresh || it == opt_.refine_steps) break;
      Vector e(kdim_);
      e.head(n_) = ex;
      e.segment(n_, n_eq_) = ey;
      e.tail(m_) = ez;
      Vector du = ldlt_.solve(e);
      if (!du.allFinite()) break;
      u += du;
    }
    dx = best.head(n_);
    dy = best.segment(n_, n_eq_);
    dz = best.tail(m_);
    return true;
  }

  // ----- residuals and statistics -----

  void compute_residuals() {
    res_.rx = -(GT_ * z_);
    if (n_eq_ > 0) res_.rx -= AeqT_ * y_;
    res_.hresx = res_.rx.norm();
    res_.rx -= tau_ * c_;

    if (n_eq_ > 0) {
      res_.ry = Aeq_ * x_;
      res_.hresy = res_.ry.norm();
      res_.ry -= tau_ * beq_;
    } else {
      res_.ry.resize(0);
      res_.hresy = 0.0;
    }

    res_.rz = s_ + G_ * x_;
    res_.hresz = res_.rz.norm();
    res_.rz -= tau_ * h_;

    res_.cx = c_.dot(x_);
    res_.by = n_eq_ > 0 ? beq_.dot(y_) : 0.0;
    res_.hz = h_.dot(z_);
    res_.rt = kap_ + res_.cx + res_.by + res_.hz;

    res_.nx = x_.norm();
    res_.ny = y_.norm();
    res_.nz = z_.norm();
    res_.ns = s_.norm();
  }

  void update_statistics() {
    st_.gap = s_.dot(z_);
    st_.mu = (st_.gap + kap_ * tau_) / (degree_ + 1);
    st_.pcost = res_.cx / tau_;
    st_.dcost = -(res_.hz + res_.by) / tau_;

    const double nry = n_eq_ > 0 ? res_.ry.norm() / std::max(resy0_ + res_.nx, 1.0) : 0.0;
    const double nrz = res_.rz.norm() / std::max(resz0_ + res_.nx + res_.ns, 1.0);
    st_.pres = std::max(nry, nrz) / tau_;
    st_.dres = res_.rx.norm() / std::max(resx0_ + res_.ny + res_.nz, 1.0) / tau_;

    st_.pinfres = -1;
    st_.dinfres = -1;
    if ((res_.hz + res_.by) / std::max(res_.ny + res_.nz, 1.0) < -opt_.tol_feas)
      st_.pinfres = res_.hresx / std::max(res_.ny + res_.nz, 1.0);
    if (res_.cx / std::max(res_.nx, 1.0) < -opt_.tol_feas)
      st_.dinfres = std::max(res_.hresy / std::max(res_.nx, 1.0),
                             res_.hresz / std::max(res_.nx + res_.ns, 1.0));

    // contract-form residuals on the unscaled candidate
    const double inv_tau = 1.0 / tau_;
    Vector xs = x_ * inv_tau;
    double p2 = (G_ * xs + s_ * inv_tau - h_).squaredNorm();
    if (n_eq_ > 0) p2 += (Aeq_ * xs - beq_).squaredNorm();
    st_.pres_abs = std::sqrt(p2);
    Vector dres_vec = c_ + GT_ * (z_ * inv_tau);
    if (n_eq_ > 0) dres_vec += AeqT_ * (y_ * inv_tau);
    st_.dres_abs = dres_vec.norm();
    st_.gap_ok = std::abs(st_.pcost - st_.dcost) <= opt_.tol_gap * (1.0 + std::abs(st_.pcost));
  }

  enum class Exit { None, Optimal, Inaccurate, PrimalInfeasible, DualInfeasible };

  Exit check_exit(bool reduced) const {
    const double feastol = reduced ? opt_.tol_feas_reduced : opt_.tol_feas;
    const double gaptol = reduced ? opt_.tol_gap_reduced : opt_.tol_gap;
    const bool gap_ok =
        std::abs(st_.pcost - st_.dcost) <= gaptol * (1.0 + std::abs(st_.pcost)) ||
        st_.gap / tau_ / tau_ <= gaptol * (1.0 + std::abs(st_.pcost));
    const bool feas_ok = st_.pres_abs <= feastol * (1.0 + normb_full_) &&
                         st_.dres_abs <= feastol * (1.0 + normc_) && st_.pres <= feastol &&
                         st_.dres <= feastol;
    if (feas_ok && gap_ok) return reduced ? Exit::Inaccurate : Exit::Optimal;
    if (st_.dinfres >= 0 && st_.dinfres < feastol && tau_ < kap_) return Exit::DualInfeasible;
    if ((st_.pinfres >= 0 && st_.pinfres < feastol && tau_ < kap_) ||
        (tau_ < feastol && kap_ < feastol && st_.pinfres >= 0 && st_.pinfres < feastol))
      return Exit::PrimalInfeasible;
    return Exit::None;
  }

  // ----- solution assembly -----

  void scatter(const Vector& cone_vec, const Vector& eq_vec, Vector& out) const {
    out = Vector::Zero(prog_.num_rows());
    for (Eigen::Index i = 0; i < n_eq_; ++i) out(eq_orig_[i]) = eq_vec(i);
    // undo the rotation on rotated blocks before scattering
    Vector cv = cone_vec;
    const double ir2 = 1.0 / std::sqrt(2.0);
    for (const auto& sb : socs_) {
      if (!sb.rotated) continue;
      const double a = cv(sb.start), b = cv(sb.start + 1);
      cv(sb.start) = ir2 * (a + b);
      cv(sb.start + 1) = ir2 * (a - b);
    }
    for (Eigen::Index i = 0; i < m_; ++i) out(cone_orig_[i]) = cv(i);
  }

  ConicSolution package(ConicStatus status, int iters) const {
    ConicSolution sol;
    sol.status = status;
    sol.iterations = iters;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (status == ConicStatus::PrimalInfeasible) {
      const double scale = -(res_.by + res_.hz);
      const double inv = scale > 0 ? 1.0 / scale : 1.0;
      sol.primal = Vector::Zero(n_);
      scatter(z_ * inv, y_ * inv, sol.dual);
      sol.slacks = Vector::Zero(prog_.num_rows());
      sol.primal_objective = nan;
      sol.dual_objective = nan;
      return sol;
    }
    if (status == ConicStatus::DualInfeasible) {
      const double scale = -res_.cx;
      const double inv = scale > 0 ? 1.0 / scale : 1.0;
      sol.primal = x_ * inv;
      sol.dual = Vector::Zero(prog_.num_rows());
      scatter(s_ * inv, Vector::Zero(n_eq_), sol.slacks);
      sol.primal_objective = nan;
      sol.dual_objective = nan;
      return sol;
    }
    const double inv_tau = 1.0 / tau_;
    sol.primal = x_ * inv_tau;
    scatter(z_ * inv_tau, y_ * inv_tau, sol.dual);
    Vector eq_slack = n_eq_ > 0 ? Vector(beq_ - Aeq_ * sol.primal) : Vector();
    scatter(s_ * inv_tau, eq_slack, sol.slacks);
    sol.primal_objective = res_.cx * inv_tau;
    sol.dual_objective = -(res_.hz + res_.by) * inv_tau;
    return sol;
  }

  struct Snapshot {
    Vector x, y, z, s;
    double tau, kap;
    double merit;
  };

  ConicSolution iterate() {
    // initialization with identity scaling
    assemble_kkt(true);
    if (ldlt_.info() != Eigen::Success)
      throw std::invalid_argument("KKT factorization failed; problem data may be degenerate");

    Vector dx1(n_), dy1(n_eq_), dz1(m_), dx2(n_), dy2(n_eq_), dz2(m_);
    solve_kkt(Vector::Zero(n_), beq_, h_, dx1, dy1, dz1, true);
    x_ = dx1;
    s_ = bring_to_cone(-dz1);
    solve_kkt(-c_, Vector::Zero(n_eq_), Vector::Zero(m_), dx2, dy2, dz2, true);
    y_ = dy2;
    z_ = bring_to_cone(dz2);
    tau_ = 1.0;
    kap_ = 1.0;

    const Vector e = cone_identity();
    const int iter_cap = std::min(opt_.max_iters, kIpmIterMax);
    double pres_prev = std::numeric_limits<double>::max();
    Snapshot best{x_, y_, z_, s_, tau_, kap_, std::numeric_limits<double>::max()};
    bool have_best = false;
    int stuck = 0;

    int iter = 0;
    for (iter = 0; iter <= iter_cap; ++iter) {
      compute_residuals();
      update_statistics();
      if (opt_.verbose)
        std::printf(
            "it %3d pcost %+9.3e dcost %+9.3e gap %8.2e pres %8.2e dres %8.2e "
            "presA %8.2e dresA %8.2e k/t %8.2e mu %8.2e\n",
            iter, st_.pcost, st_.dcost, st_.gap, st_.pres, st_.dres, st_.pres_abs, st_.dres_abs,
            kap_ / tau_, st_.mu);

      // safeguard against a blown-up step
      if (iter > 0 && (st_.pres > kSafeguard * pres_prev || st_.gap < 0)) {
        if (opt_.verbose) std::printf("exit: safeguard (pres %.2e prev %.2e gap %.2e)\n", st_.pres, pres_prev, st_.gap);
        restore(best);
        compute_residuals();
        update_statistics();
        const Exit code = check_exit(true);
        return package(map_reduced(code), iter);
      }
      pres_prev = st_.pres;

      Exit code = check_exit(false);
      if (code == Exit::Optimal) return package(ConicStatus::Optimal, iter);
      if (code == Exit::PrimalInfeasible) return package(ConicStatus::PrimalInfeasible, iter);
      if (code == Exit::DualInfeasible) return package(ConicStatus::DualInfeasible, iter);
      if (iter == iter_cap) {
        const Exit reduced = check_exit(true);
        if (reduced == Exit::None && have_best && merit() > best.merit) {
          restore(best);
          compute_residuals();
          update_statistics();
          return package(map_reduced(check_exit(true)), iter);
        }
        return package(map_reduced(reduced), iter);
      }

      if (!have_best || merit() < best.merit) {
        best = {x_, y_, z_, s_, tau_, kap_, merit()};
        have_best = true;
      }

      if (!compute_scaling()) {
        if (opt_.verbose) std::printf("exit: scaling breakdown\n");
        restore(best);
        compute_residuals();
        update_statistics();
        return package(map_reduced(check_exit(true)), iter);
      }
      assemble_kkt(false);
      for (double bump : {1e2, 1e4}) {
        if (ldlt_.info() == Eigen::Success) break;
        assemble_kkt(false, bump);
      }
      if (ldlt_.info() != Eigen::Success) {
        if (opt_.verbose) std::printf("exit: kkt factorization failed\n");
        restore(best);
        compute_residuals();
        update_statistics();
        return package(map_reduced(check_exit(true)), iter);
      }

      solve_kkt(-c_, beq_, h_, dx1, dy1, dz1, false);
      const double dtau_denom =
          kap_ / tau_ - c_.dot(dx1) - (n_eq_ > 0 ? beq_.dot(dy1) : 0.0) - h_.dot(dz1);

      // affine (predictor) direction
      solve_kkt(res_.rx, -res_.ry, s_ - res_.rz, dx2, dy2, dz2, false);
      const double dtau_aff =
          (res_.rt - kap_ + c_.dot(dx2) + (n_eq_ > 0 ? beq_.dot(dy2) : 0.0) + h_.dot(dz2)) /
          dtau_denom;
      Vector dz_aff = dz2 + dtau_aff * dz1;
      Vector w_dz_aff = scale_w(dz_aff);
      Vector ds_by_w_aff = -w_dz_aff - lambda_;
      const double dkap_aff = -kap_ - kap_ / tau_ * dtau_aff;
      const double step_aff = max_step(ds_by_w_aff, w_dz_aff, dtau_aff, dkap_aff);

      const double sigma =
          std::clamp(std::pow(1.0 - step_aff, 3.0), kSigmaMin, kSigmaMax);

      // combined (corrector) direction
      Vector bs = cone_product(lambda_, lambda_) + cone_product(ds_by_w_aff, w_dz_aff) -
                  sigma * st_.mu * e;
      Vector lam_div_bs = lambda_divide(bs);
      Vector rhs_z = -(1.0 - sigma) * res_.rz + scale_wT(lam_div_bs);
      solve_kkt((1.0 - sigma) * res_.rx, -(1.0 - sigma) * res_.ry, rhs_z, dx2, dy2, dz2, false);

      const double bkap = kap_ * tau_ + dkap_aff * dtau_aff - sigma * st_.mu;
      const double dtau = ((1.0 - sigma) * res_.rt - bkap / tau_ + c_.dot(dx2) +
                           (n_eq_ > 0 ? beq_.dot(dy2) : 0.0) + h_.dot(dz2)) /
                          dtau_denom;
      dx2 += dtau * dx1;
      if (n_eq_ > 0) dy2 += dtau * dy1;
      dz2 += dtau * dz1;
      Vector w_dz = scale_w(dz2);
      Vector ds_by_w = -(lam_div_bs + w_dz);
      const double dkap = -(bkap + kap_ * dtau) / tau_;

      const double step = opt_.step_scale * max_step(ds_by_w, w_dz, dtau, dkap);
      if (step <= kStepMin * opt_.step_scale * 1.0001) {
        if (++stuck >= 2) {
          if (opt_.verbose) std::printf("exit: step collapsed\n");
          restore(best);
          compute_residuals();
          update_statistics();
          return package(map_reduced(check_exit(true)), iter);
        }
      } else {
        stuck = 0;
      }
      Vector ds = scale_wT(ds_by_w);

      x_ += step * dx2;
      if (n_eq_ > 0) y_ += step * dy2;
      z_ += step * dz2;
      s_ += step * ds;
      kap_ += step * dkap;
      tau_ += step * dtau;

      if (!x_.allFinite() || !z_.allFinite() || !s_.allFinite() || !std::isfinite(tau_)) {
        if (opt_.verbose) std::printf("exit: non-finite iterate\n");
        restore(best);
        compute_residuals();
        update_statistics();
        return package(map_reduced(check_exit(true)), iter);
      }
    }
    return package(ConicStatus::IterationLimit, iter);
  }

  double merit() const {
    return std::max({st_.pres, st_.dres, st_.gap / std::max(tau_ * tau_, 1e-30)});
  }

  void restore(const Snapshot& snap) {
    x_ = snap.x;
    y_ = snap.y;
    z_ = snap.z;
    s_ = snap.s;
    tau_ = snap.tau;
    kap_ = snap.kap;
  }

  ConicStatus map_reduced(Exit code) const {
    switch (code) {
      case Exit::Optimal:
      case Exit::Inaccurate: return ConicStatus::Inaccurate;
      case Exit::PrimalInfeasible: return ConicStatus::PrimalInfeasible;
      case Exit::DualInfeasible: return ConicStatus::DualInfeasible;
      case Exit::None: return ConicStatus::IterationLimit;
    }
    return ConicStatus::IterationLimit;
  }
};

}  // namespace ipm_detail

inline ConicSolution solve(const ConicProgram& program, const SolverSettings& settings = {}) {
  ipm_detail::Solver solver(program, settings);
  return solver.run();
}

}  // namespace conicsvm
