#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "conicsvm/core.hpp"

namespace conicsvm {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Division convention for squared terms: a^2/0 = 0 if a = 0, else +inf.
inline double guarded_quot(double a_squared, double denom) {
  if (denom > 0.0) return a_squared / denom;
  return a_squared == 0.0 ? 0.0 : kInf;
}

inline double positive_part(double a) { return a > 0.0 ? a : 0.0; }
inline double negative_part(double a) { return a < 0.0 ? -a : 0.0; }

/// Per-point parameters of the conic loss: curvature gamma_i and margin
/// penalty lambda, both strictly positive.
struct ConicLossParams {
  double gamma;
  double lambda;

  ConicLossParams(double gamma_, double lambda_) : gamma(gamma_), lambda(lambda_) {
    if (!(gamma > 0.0) || !(lambda > 0.0))
      throw std::invalid_argument("conic loss needs gamma > 0 and lambda > 0");
  }

  /// Margin shortfall 1 - u at which the loss saturates at lambda.
  double breakpoint() const { return std::sqrt(lambda / gamma); }
};

inline double hinge_loss(double u) { return std::max(0.0, 1.0 - u); }

/// Margin-based 0-1 loss: 1 when the point lies in the margin or on the
/// wrong side (u < 1), 0 otherwise.
inline double zero_one_loss(double u) { return u < 1.0 ? 1.0 : 0.0; }

// Piecewise closed form of the projected hull penalty: zero on the good
// side of the margin, concave quadratic ramp up to the breakpoint, then
// flat at lambda.
inline double conic_loss(double u, const ConicLossParams& params) {
  const double shortfall = 1.0 - u;
  if (shortfall <= 0.0) return 0.0;
  if (shortfall > params.breakpoint()) return params.lambda;
  return 2.0 * std::sqrt(params.lambda * params.gamma) * shortfall -
         params.gamma * shortfall * shortfall;
}

/// Minimizing z in [0,1] for the projection that defines conic_loss.
inline double conic_loss_argmin_z(double u, const ConicLossParams& params) {
  const double shortfall = 1.0 - u;
  if (shortfall <= 0.0) return 0.0;
  return std::min(std::sqrt(params.gamma / params.lambda) * shortfall, 1.0);
}

// Strengthening term h_i(w, z): the gap between the perspective form of
// the squared shortfall and the plain square. Infinite when the division
// convention dictates; extended reals are part of the contract.
inline double strengthening_h(double u, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("z must lie in [0,1]");
  const double a = 1.0 - u;
  const double ap = positive_part(a);
  const double an = negative_part(a);
  const double t1 = guarded_quot(ap * ap, z);
  const double t2 = guarded_quot(an * an, 1.0 - z);
  if (t1 == kInf || t2 == kInf) return kInf;
  return t1 + t2 - a * a;
}

// Largest gamma keeping w'Qw - gamma (1 - y x'w)^2 convex, which is
// 1 / (x' Q^{-1} x). Uses a Cholesky solve rather than an inverse.
inline double gamma_max_single(const Matrix& Q, const Vector& x) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("Q must be square");
  if (x.size() != Q.rows()) throw std::invalid_argument("x length must match Q order");
  if (x.norm() == 0.0) throw std::invalid_argument("x must be nonzero (gamma unbounded)");
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * (1.0 + Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("Q must be symmetric");
  Eigen::LLT<Matrix> llt(Q);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("Q must be positive definite");
  const Vector qinv_x = llt.solve(x);
  const double quad = x.dot(qinv_x);
  if (!(quad > 0.0) || !std::isfinite(quad))
    throw std::invalid_argument("Q is numerically singular along x");
  return 1.0 / quad;
}

// Right-hand side of the single-point hull inequality
//   t >= w'Qw - g(1-yx'w)^2 + g(1-yx'w)_+^2/z + g(1-yx'w)_-^2/(1-z).
inline double hull_inequality_rhs(const Vector& w, double z, const Vector& x, double y,
                                  const Matrix& Q, double gamma) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument("z must lie in [0,1]");
  if (y != 1.0 && y != -1.0) throw std::invalid_argument("y must be -1 or +1");
  const double margin = y * x.dot(w);
  const double a = 1.0 - margin;
  const double ap = positive_part(a);
  const double an = negative_part(a);
  const double t1 = guarded_quot(ap * ap, z);
  const double t2 = guarded_quot(an * an, 1.0 - z);
  if (t1 == kInf || t2 == kInf) return kInf;
  return w.dot(Q * w) - gamma * a * a + gamma * t1 + gamma * t2;
}

}  // namespace conicsvm
