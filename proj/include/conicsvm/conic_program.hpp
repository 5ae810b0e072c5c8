#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conicsvm/core.hpp"

namespace conicsvm {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Cone descriptors for the standard form  b - A x in K.
//   Zero(d)               : equality rows
//   Nonnegative(d)        : s >= 0
//   SecondOrder(d)        : s0 >= ||s1:||
//   RotatedSecondOrder(d) : 2 s0 s1 >= ||s2:||^2, s0, s1 >= 0
//   Psd(k)                : smat(s) psd, s stored in scaled-triangular form
//                           of length k(k+1)/2
enum class ConeKind { Zero, Nonnegative, SecondOrder, RotatedSecondOrder, Psd };

struct ConeDesc {
  ConeKind kind;
  int dim;  // block dimension; for Psd this is the matrix order k

  int rows() const {
    if (kind == ConeKind::Psd) return dim * (dim + 1) / 2;
    return dim;
  }
};

inline ConeDesc zero_cone(int dim) { return {ConeKind::Zero, dim}; }
inline ConeDesc nonnegative_cone(int dim) { return {ConeKind::Nonnegative, dim}; }
inline ConeDesc second_order_cone(int dim) { return {ConeKind::SecondOrder, dim}; }
inline ConeDesc rotated_second_order_cone(int dim) { return {ConeKind::RotatedSecondOrder, dim}; }
inline ConeDesc psd_cone(int order) { return {ConeKind::Psd, order}; }

/// Scaled lower-triangular vectorization: off-diagonals carry sqrt(2) so
/// that <M, N> = svec(M).svec(N). Column-major over the lower triangle.
inline Vector psd_vectorize(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("psd_vectorize needs a square matrix");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("psd_vectorize needs a symmetric matrix");
  const Eigen::Index k = M.rows();
  Vector v(k * (k + 1) / 2);
  const double rt2 = std::sqrt(2.0);
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    v(idx++) = M(j, j);
    for (Eigen::Index i = j + 1; i < k; ++i) v(idx++) = rt2 * M(i, j);
  }
  return v;
}

inline Matrix psd_devectorize(const Vector& v) {
  const double len = static_cast<double>(v.size());
  const Eigen::Index k = static_cast<Eigen::Index>(std::round((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
  if (k * (k + 1) / 2 != v.size())
    throw std::invalid_argument("vector length is not a triangular number");
  Matrix M(k, k);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    M(j, j) = v(idx++);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      const double val = v(idx++) * inv_rt2;
      M(i, j) = val;
      M(j, i) = val;
    }
  }
  return M;
}

/// (row, col) of svec index within a block of order k; row >= col.
inline std::pair<int, int> svec_position(int k, int idx) {
  int col = 0;
  int remaining = idx;
  while (remaining >= k - col) {
    remaining -= k - col;
    ++col;
  }
  return {col + remaining, col};
}

// Standard-form conic problem  min c'x  s.t.  b - A x in K1 x K2 x ...
struct ConicProgram {
  Vector objective;              // c
  SparseMatrix constraint_matrix;  // A, one row per cone row
  Vector rhs;                    // b
  std::vector<ConeDesc> cones;
  std::vector<std::string> variable_names;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_rows() const { return rhs.size(); }

  void validate() const {
    Eigen::Index cone_rows = 0;
    for (const auto& c : cones) {
      if (c.dim <= 0) throw std::invalid_argument("cone dimension must be positive");
      if (c.kind == ConeKind::SecondOrder && c.dim < 1)
        throw std::invalid_argument("second-order cone needs dim >= 1");
      if (c.kind == ConeKind::RotatedSecondOrder && c.dim < 2)
        throw std::invalid_argument("rotated cone needs dim >= 2");
      cone_rows += c.rows();
    }
    if (cone_rows != num_rows())
      throw std::invalid_argument("cone dimensions sum to " + std::to_string(cone_rows) +
                                  " but b has " + std::to_string(num_rows()) + " rows");
    if (constraint_matrix.rows() != num_rows() || constraint_matrix.cols() != num_vars())
      throw std::invalid_argument("constraint matrix shape mismatch");
    if (!objective.allFinite() || !rhs.allFinite())
      throw std::invalid_argument("non-finite problem data");
    for (int k = 0; k < constraint_matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(constraint_matrix, k); it; ++it)
        if (!std::isfinite(it.value())) throw std::invalid_argument("non-finite matrix entry");
  }

  /// Plain-text triplet dump for external cross-checks.
  void dump(std::ostream& os) const {
    os.precision(17);
    os << "conicprogram 1\n";
    os << "vars " << num_vars() << "\n";
    os << "rows " << num_rows() << "\n";
    for (const auto& c : cones) {
      switch (c.kind) {
        case ConeKind::Zero: os << "cone zero "; break;
        case ConeKind::Nonnegative: os << "cone nonneg "; break;
        case ConeKind::SecondOrder: os << "cone soc "; break;
        case ConeKind::RotatedSecondOrder: os << "cone rsoc "; break;
        case ConeKind::Psd: os << "cone psd "; break;
      }
      os << c.dim << "\n";
    }
    for (Eigen::Index j = 0; j < objective.size(); ++j)
      if (objective(j) != 0.0) os << "c " << j << " " << objective(j) << "\n";
    for (int k = 0; k < constraint_matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(constraint_matrix, k); it; ++it)
        os << "A " << it.row() << " " << it.col() << " " << it.value() << "\n";
    for (Eigen::Index i = 0; i < rhs.size(); ++i)
      if (rhs(i) != 0.0) os << "b " << i << " " << rhs(i) << "\n";
    for (size_t j = 0; j < variable_names.size(); ++j)
      if (!variable_names[j].empty()) os << "name " << j << " " << variable_names[j] << "\n";
  }
};

enum class ConicStatus { Optimal, Inaccurate, PrimalInfeasible, DualInfeasible, IterationLimit };

inline const char* to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::Optimal: return "optimal";
    case ConicStatus::Inaccurate: return "inaccurate";
    case ConicStatus::PrimalInfeasible: return "primal_infeasible";
    case ConicStatus::DualInfeasible: return "dual_infeasible";
    case ConicStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct ConicSolution {
  Vector primal;  // x
  Vector dual;    // y, one multiplier per cone row (original row order)
  Vector slacks;  // s = b - A x    (certificate direction when infeasible)
  ConicStatus status = ConicStatus::IterationLimit;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double solve_time = 0.0;
};

struct SolverSettings {
  double tol_gap = 1e-7;
  double tol_feas = 1e-7;
  int max_iters = 50000;
  // Internal knobs; defaults follow common interior-point practice.
  double static_reg = 1e-8;
  int refine_steps = 9;
  double step_scale = 0.99;
  double tol_feas_reduced = 5e-5;
  double tol_gap_reduced = 5e-4;
  bool verbose = false;
};

}  // namespace conicsvm
