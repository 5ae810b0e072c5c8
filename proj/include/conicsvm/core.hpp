#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conicsvm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Outcome of a training solve, at the classifier level.
enum class SolverStatus { Optimal, Inaccurate, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::Inaccurate: return "inaccurate";
    case SolverStatus::Infeasible: return "infeasible";
    case SolverStatus::Unbounded: return "unbounded";
    case SolverStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

inline SolverStatus solver_status_from_string(const std::string& s) {
  if (s == "optimal") return SolverStatus::Optimal;
  if (s == "inaccurate") return SolverStatus::Inaccurate;
  if (s == "infeasible") return SolverStatus::Infeasible;
  if (s == "unbounded") return SolverStatus::Unbounded;
  if (s == "iteration_limit") return SolverStatus::IterationLimit;
  throw std::invalid_argument("unknown solver status: " + s);
}

// Binary classification data. Features are n x p, labels strictly +-1.
// When intercept_embedded is set, column 0 is all ones and the intercept
// is part of w (and therefore regularized like any other coordinate).
class LabeledDataset {
 public:
  LabeledDataset(Matrix features, Vector labels, bool intercept_embedded = false)
      : features_(std::move(features)),
        labels_(std::move(labels)),
        intercept_embedded_(intercept_embedded) {
    if (features_.rows() < 1 || features_.cols() < 1)
      throw std::invalid_argument("dataset needs n >= 1 and p >= 1");
    if (labels_.size() != features_.rows())
      throw std::invalid_argument("label count does not match feature rows");
    if (!features_.allFinite()) throw std::invalid_argument("non-finite feature value");
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
      if (labels_(i) != 1.0 && labels_(i) != -1.0)
        throw std::invalid_argument("labels must be exactly -1 or +1");
    }
    if (intercept_embedded_) {
      for (Eigen::Index i = 0; i < features_.rows(); ++i) {
        if (features_(i, 0) != 1.0)
          throw std::invalid_argument("intercept-embedded data must have an all-ones first column");
      }
    }
  }

  Eigen::Index n() const { return features_.rows(); }
  Eigen::Index p() const { return features_.cols(); }
  const Matrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  bool intercept_embedded() const { return intercept_embedded_; }

  Eigen::RowVectorXd point(Eigen::Index i) const { return features_.row(i); }
  double label(Eigen::Index i) const { return labels_(i); }

  /// Row i scaled by its label, y_i * x_i.
  Vector signed_point(Eigen::Index i) const { return labels_(i) * features_.row(i).transpose(); }

 private:
  Matrix features_;
  Vector labels_;
  bool intercept_embedded_;
};

struct Kernel {
  enum class Kind { Linear, Gaussian, Polynomial };

  Kind kind = Kind::Linear;
  double bandwidth = 1.0;  // Gaussian
  int degree = 2;          // Polynomial
  double offset = 1.0;     // Polynomial

  static Kernel linear() { return Kernel{Kind::Linear, 0.0, 0, 0.0}; }
  static Kernel gaussian(double bandwidth) {
    if (!(bandwidth > 0)) throw std::invalid_argument("gaussian bandwidth must be positive");
    return Kernel{Kind::Gaussian, bandwidth, 0, 0.0};
  }
  static Kernel polynomial(int degree, double offset) {
    if (degree < 1) throw std::invalid_argument("polynomial degree must be positive");
    return Kernel{Kind::Polynomial, 0.0, degree, offset};
  }

  double operator()(const Vector& a, const Vector& b) const {
    if (a.size() != b.size()) throw std::invalid_argument("kernel arguments differ in length");
    switch (kind) {
      case Kind::Linear: return a.dot(b);
      case Kind::Gaussian: return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
      case Kind::Polynomial: return std::pow(a.dot(b) + offset, degree);
    }
    return 0.0;
  }
};

// A trained classifier holds either primal weights (linear mode) or dual
// coefficients plus the kernel (kernel mode), never both.
struct TrainedClassifier {
  std::optional<Vector> weights;
  std::optional<Vector> dual_coefficients;
  std::optional<Kernel> kernel;
  double objective_value = 0.0;
  SolverStatus solver_status = SolverStatus::Optimal;
  std::optional<Vector> z_values;

  static TrainedClassifier linear(Vector w, double objective, SolverStatus status,
                                  std::optional<Vector> z = std::nullopt) {
    TrainedClassifier c;
    c.weights = std::move(w);
    c.objective_value = objective;
    c.solver_status = status;
    c.z_values = std::move(z);
    return c;
  }

  static TrainedClassifier dual(Vector alpha, Kernel k, double objective, SolverStatus status,
                                std::optional<Vector> z = std::nullopt) {
    TrainedClassifier c;
    c.dual_coefficients = std::move(alpha);
    c.kernel = k;
    c.objective_value = objective;
    c.solver_status = status;
    c.z_values = std::move(z);
    return c;
  }

  bool is_linear() const { return weights.has_value(); }
};

/// sign with the tie at zero resolved to +1.
inline double sign_plus(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// Decision value x.w (linear) or sum_j y_j k(x_j, x) alpha_j (kernel mode).
inline double decision_value(const TrainedClassifier& c, const Vector& x,
                             const LabeledDataset* dataset_for_kernel = nullptr) {
  if (c.is_linear()) {
    if (x.size() != c.weights->size())
      throw std::invalid_argument("feature vector length does not match weight length");
    return c.weights->dot(x);
  }
  if (!c.dual_coefficients || !c.kernel)
    throw std::invalid_argument("kernel classifier lacks dual coefficients or kernel");
  if (dataset_for_kernel == nullptr)
    throw std::invalid_argument("kernel-mode prediction needs the training dataset");
  const LabeledDataset& train = *dataset_for_kernel;
  if (train.n() != c.dual_coefficients->size())
    throw std::invalid_argument("dual coefficient length does not match training set");
  if (x.size() != train.p()) throw std::invalid_argument("feature vector length mismatch");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < train.n(); ++j) {
    Vector xj = train.point(j).transpose();
    acc += train.label(j) * (*c.kernel)(xj, x) * (*c.dual_coefficients)(j);
  }
  return acc;
}

inline double predict(const TrainedClassifier& c, const Vector& x,
                      const LabeledDataset* dataset_for_kernel = nullptr) {
  return sign_plus(decision_value(c, x, dataset_for_kernel));
}

inline double misclassification_rate(const TrainedClassifier& c, const LabeledDataset& data,
                                     const LabeledDataset* dataset_for_kernel = nullptr) {
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Vector xi = data.point(i).transpose();
    if (predict(c, xi, dataset_for_kernel) != data.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.n());
}

/// Label-scaled Gram matrix, K_ij = y_i y_j k(x_i, x_j).
inline Matrix gram_matrix(const Kernel& kernel, const LabeledDataset& data) {
  const Eigen::Index n = data.n();
  Matrix K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector xi = data.point(i).transpose();
    for (Eigen::Index j = 0; j <= i; ++j) {
      Vector xj = data.point(j).transpose();
      const double v = data.label(i) * data.label(j) * kernel(xi, xj);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace conicsvm
