#pragma once

// Synthetic benchmark harness: Gaussian-mixture and separable-flip instance
// generators, the train/validate/test cross-validation protocol, and
// replication aggregates.

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "conicsvm/core.hpp"
#include "conicsvm/formulations.hpp"
#include "conicsvm/random.hpp"

namespace conicsvm {

enum class GeneratorClass { None_, Clustered, Spread, SeparableFlip };
enum class Method { Hinge, Conic, Bayes };

inline const char* to_string(GeneratorClass g) {
  switch (g) {
    case GeneratorClass::None_: return "none";
    case GeneratorClass::Clustered: return "clustered";
    case GeneratorClass::Spread: return "spread";
    case GeneratorClass::SeparableFlip: return "separable-flip";
  }
  return "unknown";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Hinge: return "hinge";
    case Method::Conic: return "conic";
    case Method::Bayes: return "bayes";
  }
  return "unknown";
}

inline GeneratorClass generator_from_string(const std::string& s) {
  if (s == "none") return GeneratorClass::None_;
  if (s == "clustered") return GeneratorClass::Clustered;
  if (s == "spread") return GeneratorClass::Spread;
  if (s == "separable-flip") return GeneratorClass::SeparableFlip;
  throw std::invalid_argument("unknown generator class: " + s);
}

inline Method method_from_string(const std::string& s) {
  if (s == "hinge") return Method::Hinge;
  if (s == "conic") return Method::Conic;
  if (s == "bayes") return Method::Bayes;
  throw std::invalid_argument("unknown method: " + s);
}

struct ExperimentConfig {
  GeneratorClass generator = GeneratorClass::None_;
  int n = 100;
  int p = 3;
  double sigma = 0.2;
  double tau = 0.1;  // label-flip probability, separable generator only
  int replications = 20;
  std::uint64_t seed = 0;
  int grid_size = 100;
  int test_size = 100000;
  std::vector<Method> methods{Method::Hinge, Method::Conic, Method::Bayes};
  int jobs = 1;

  void validate() const {
    if (n < 1 || p < 1 || replications < 1 || grid_size < 1 || test_size < 1)
      throw std::invalid_argument("experiment dimensions must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (tau < 0.0 || tau >= 0.5) throw std::invalid_argument("tau must lie in [0, 0.5)");
    if (methods.empty()) throw std::invalid_argument("no methods selected");
  }
};

// ----- instance generators -----

/// Direction d with iid Uniform[-1,1] entries; the class centroids are
/// +-0.5 d/||d||, one unit apart.
inline Vector draw_direction(int p, Rng& rng) {
  Vector d(p);
  for (int j = 0; j < p; ++j) d(j) = rng.uniform(-1.0, 1.0);
  if (d.norm() == 0.0) d(0) = 1.0;
  return d;
}

/// Gaussian-mixture sample; points live in R^{p+1} with a leading 1 for the
/// intercept. with_outliers selects the contaminated mixture of the chosen
/// class; test sets pass false.
inline LabeledDataset sample_gaussian(GeneratorClass generator, int n, double sigma,
                                      const Vector& direction, bool with_outliers, Rng& rng) {
  if (generator == GeneratorClass::SeparableFlip)
    throw std::invalid_argument("gaussian sampler called with the separable generator");
  const int p = static_cast<int>(direction.size());
  Vector centroid = 0.5 * direction / direction.norm();
  Matrix X(n, p + 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    const double u = rng.uniform();
    double label = 1.0;
    Vector mean = centroid;
    double sd = sigma;
    if (!with_outliers || generator == GeneratorClass::None_) {
      if (u < 0.5) {
        label = 1.0;
        mean = centroid;
      } else {
        label = -1.0;
        mean = -centroid;
      }
    } else if (generator == GeneratorClass::Clustered) {
      if (u < 0.45) {
        label = 1.0;
        mean = centroid;
      } else if (u < 0.9) {
        label = -1.0;
        mean = -centroid;
      } else {
        label = 1.0;  // tight far cluster mislabeled as +1
        mean = -10.0 * centroid;
        sd = sigma * std::sqrt(0.001);
      }
    } else {  // Spread
      if (u < 0.45) {
        label = 1.0;
        mean = centroid;
      } else if (u < 0.9) {
        label = -1.0;
        mean = -centroid;
      } else if (u < 0.95) {
        label = 1.0;
        mean = centroid;
        sd = 10.0 * sigma;
      } else {
        label = -1.0;
        mean = -centroid;
        sd = 10.0 * sigma;
      }
    }
    for (int j = 0; j < p; ++j) X(i, j + 1) = mean(j) + sd * rng.normal();
    y(i) = label;
  }
  return LabeledDataset(std::move(X), std::move(y), /*intercept_embedded=*/true);
}

/// Separable points with labels flipped independently with probability tau.
inline LabeledDataset sample_separable_flip(int n, int p, double tau,
                                            const Vector& true_hyperplane, Rng& rng) {
  Matrix X(n, p + 1);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j <= p; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    const double side = true_hyperplane.dot(X.row(i).transpose()) >= 0.0 ? 1.0 : -1.0;
    const bool flip = rng.uniform() < tau;
    y(i) = flip ? -side : side;
  }
  return LabeledDataset(std::move(X), std::move(y), /*intercept_embedded=*/true);
}

/// Contaminated sample as configured (the one-call generator entry point).
inline LabeledDataset generate_gaussian_instance(const ExperimentConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Vector d = draw_direction(config.p, rng);
  return sample_gaussian(config.generator, config.n, config.sigma, d, true, rng);
}

inline LabeledDataset generate_separable_flip_instance(const ExperimentConfig& config) {
  config.validate();
  if (config.generator != GeneratorClass::SeparableFlip)
    throw std::invalid_argument("config generator is not separable-flip");
  Rng rng(config.seed);
  Vector wbar(config.p + 1);
  for (int j = 0; j <= config.p; ++j) wbar(j) = rng.uniform(-1.0, 1.0);
  return sample_separable_flip(config.n, config.p, config.tau, wbar, rng);
}

/// The oracle rule (0, d'), perpendicular to the centroid axis.
inline TrainedClassifier bayes_classifier(const Vector& direction) {
  Vector w(direction.size() + 1);
  w(0) = 0.0;
  w.tail(direction.size()) = direction;
  return TrainedClassifier::linear(w, 0.0, SolverStatus::Optimal);
}

inline TrainedClassifier bayes_classifier(const ExperimentConfig& config) {
  config.validate();
  if (config.generator == GeneratorClass::SeparableFlip)
    throw std::invalid_argument("the Bayes rule is only defined for the gaussian generators");
  Rng rng(config.seed);
  return bayes_classifier(draw_direction(config.p, rng));
}

/// Analytic Bayes misclassification Phi(-1/(2 sigma)) on clean data.
inline double bayes_error(double sigma) {
  return 0.5 * std::erfc(1.0 / (2.0 * sigma * std::sqrt(2.0)));
}

// ----- cross-validation -----

struct CvResult {
  TrainedClassifier classifier;
  double chosen_hyperparameter = 0.0;
  int chosen_index = -1;
  double cv_seconds = 0.0;  // wall-clock sum over the grid solves
  int failures = 0;
};

inline double hinge_grid_value(int k, int grid_size) {
  const double beta = static_cast<double>(k + 1) / (grid_size + 1);
  return beta / (1.0 - beta);
}

inline double conic_grid_value(int k, int grid_size) {
  if (grid_size == 1) return 0.25;
  return 0.5 * static_cast<double>(k) / (grid_size - 1);
}

inline CvResult cross_validate(const LabeledDataset& train_set, const LabeledDataset& validate_set,
                               Method method, int grid_size, const TrainOptions& opts = {}) {
  if (method == Method::Bayes)
    throw std::invalid_argument("the Bayes rule has no hyperparameter to cross-validate");
  if (train_set.p() != validate_set.p())
    throw std::invalid_argument("train/validation dimension mismatch");

  CvResult best;
  double best_rate = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_size; ++k) {
    const double param = method == Method::Hinge ? hinge_grid_value(k, grid_size)
                                                 : conic_grid_value(k, grid_size);
    const SvmHyperparams hyper = method == Method::Hinge
                                     ? SvmHyperparams::hinge(param)
                                     : SvmHyperparams::conic_cardinality(param);
    const auto t0 = std::chrono::steady_clock::now();
    TrainedClassifier model;
    bool ok = true;
    try {
      model = train(train_set, hyper, nullptr, opts);
    } catch (const std::exception&) {
      ok = false;
    }
    best.cv_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!ok || (model.solver_status != SolverStatus::Optimal &&
                model.solver_status != SolverStatus::Inaccurate)) {
      ++best.failures;
      continue;
    }
    const double rate = misclassification_rate(model, validate_set);
    if (rate < best_rate) {  // ties keep the smaller index
      best_rate = rate;
      best.classifier = model;
      best.chosen_hyperparameter = param;
      best.chosen_index = k;
    }
  }
  if (best.chosen_index < 0) throw std::runtime_error("every grid point failed to train");
  return best;
}

// ----- replication harness -----

struct ReplicationResult {
  int replication = 0;
  Method method = Method::Hinge;
  double oos_misclassification = 0.0;
  double cv_time = 0.0;
  double chosen_hyperparameter = 0.0;
  std::uint64_t seed = 0;
};

struct MethodAggregate {
  Method method = Method::Hinge;
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1) convention
  double mean_time = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  std::vector<MethodAggregate> aggregates;
};

namespace detail {

inline std::vector<ReplicationResult> run_one_replication(const ExperimentConfig& config, int r) {
  Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(r)));
  std::vector<ReplicationResult> out;

  LabeledDataset train_set(Matrix::Ones(1, 1), Vector::Ones(1));
  LabeledDataset validate_set = train_set, test_set = train_set;
  Vector direction;
  if (config.generator == GeneratorClass::SeparableFlip) {
    Vector wbar(config.p + 1);
    for (int j = 0; j <= config.p; ++j) wbar(j) = rng.uniform(-1.0, 1.0);
    train_set = sample_separable_flip(config.n, config.p, config.tau, wbar, rng);
    validate_set = sample_separable_flip(config.n, config.p, config.tau, wbar, rng);
    test_set = sample_separable_flip(config.test_size, config.p, 0.0, wbar, rng);
  } else {
    direction = draw_direction(config.p, rng);
    train_set = sample_gaussian(config.generator, config.n, config.sigma, direction, true, rng);
    validate_set =
        sample_gaussian(config.generator, config.n, config.sigma, direction, true, rng);
    test_set =
        sample_gaussian(config.generator, config.test_size, config.sigma, direction, false, rng);
  }

  for (Method method : config.methods) {
    ReplicationResult rr;
    rr.replication = r;
    rr.method = method;
    rr.seed = mix_seed(config.seed, static_cast<std::uint64_t>(r));
    if (method == Method::Bayes) {
      if (config.generator == GeneratorClass::SeparableFlip)
        throw std::invalid_argument("the Bayes rule is only defined for gaussian generators");
      auto model = bayes_classifier(direction);
      rr.oos_misclassification = misclassification_rate(model, test_set);
    } else {
      auto cv = cross_validate(train_set, validate_set, method, config.grid_size);
      rr.oos_misclassification = misclassification_rate(cv.classifier, test_set);
      rr.cv_time = cv.cv_seconds;
      rr.chosen_hyperparameter = cv.chosen_hyperparameter;
    }
    out.push_back(rr);
  }
  return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;

  std::vector<std::vector<ReplicationResult>> per_rep(config.replications);
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (int r = 0; r < config.replications; ++r)
      per_rep[r] = detail::run_one_replication(config, r);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&, t] {
        try {
          for (int r = t; r < config.replications; r += jobs)
            per_rep[r] = detail::run_one_replication(config, r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (auto& rep : per_rep)
    result.replications.insert(result.replications.end(), rep.begin(), rep.end());

  for (Method method : config.methods) {
    MethodAggregate agg;
    agg.method = method;
    std::vector<double> vals, times;
    for (const auto& rr : result.replications) {
      if (rr.method != method) continue;
      vals.push_back(rr.oos_misclassification);
      times.push_back(rr.cv_time);
    }
    const double n = static_cast<double>(vals.size());
    for (double v : vals) agg.mean += v;
    agg.mean /= n;
    if (vals.size() > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - agg.mean) * (v - agg.mean);
      agg.stddev = std::sqrt(ss / (n - 1.0));
    }
    for (double t : times) agg.mean_time += t;
    agg.mean_time /= n;
    result.aggregates.push_back(agg);
  }
  return result;
}

// ----- user-data protocol: seeded splits with label-flip noise -----

struct DataSplit {
  LabeledDataset train;
  LabeledDataset validate;
  LabeledDataset test;
};

/// Seeded random split; fractions apply to train and validation, the rest
/// becomes the test set.
inline DataSplit split_dataset(const LabeledDataset& data, double train_frac,
                               double validate_frac, Rng& rng) {
  if (train_frac <= 0 || validate_frac <= 0 || train_frac + validate_frac >= 1.0)
    throw std::invalid_argument("split fractions must be positive and sum below one");
  const Eigen::Index n = data.n();
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const Eigen::Index j = static_cast<Eigen::Index>(rng.next_u64() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const Eigen::Index n_train = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(train_frac * n));
  const Eigen::Index n_val =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(validate_frac * n));
  if (n_train + n_val >= n) throw std::invalid_argument("dataset too small to split");

  auto take = [&](Eigen::Index begin, Eigen::Index count) {
    Matrix X(count, data.p());
    Vector y(count);
    for (Eigen::Index k = 0; k < count; ++k) {
      X.row(k) = data.features().row(order[begin + k]);
      y(k) = data.label(order[begin + k]);
    }
    return LabeledDataset(std::move(X), std::move(y), data.intercept_embedded());
  };
  return {take(0, n_train), take(n_train, n_val), take(n_train + n_val, n - n_train - n_val)};
}

/// Independent label flips with probability tau.
inline LabeledDataset flip_labels(const LabeledDataset& data, double tau, Rng& rng) {
  if (tau < 0.0 || tau >= 0.5) throw std::invalid_argument("tau must lie in [0, 0.5)");
  Vector y = data.labels();
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (rng.uniform() < tau) y(i) = -y(i);
  return LabeledDataset(data.features(), std::move(y), data.intercept_embedded());
}

/// Cross-validation protocol on user-supplied data: per replication a fresh
/// seeded 35/35/30 split, label noise applied to train and validation only.
inline ExperimentResult run_csv_experiment(const LabeledDataset& data,
                                           const ExperimentConfig& config) {
  config.validate();
  for (Method m : config.methods)
    if (m == Method::Bayes)
      throw std::invalid_argument("the Bayes rule is unavailable for user-supplied data");

  ExperimentResult result;
  result.config = config;
  for (int r = 0; r < config.replications; ++r) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(r)));
    DataSplit split = split_dataset(data, 0.35, 0.35, rng);
    LabeledDataset noisy_train = flip_labels(split.train, config.tau, rng);
    LabeledDataset noisy_val = flip_labels(split.validate, config.tau, rng);
    for (Method method : config.methods) {
      ReplicationResult rr;
      rr.replication = r;
      rr.method = method;
      rr.seed = mix_seed(config.seed, static_cast<std::uint64_t>(r));
      auto cv = cross_validate(noisy_train, noisy_val, method, config.grid_size);
      rr.oos_misclassification = misclassification_rate(cv.classifier, split.test);
      rr.cv_time = cv.cv_seconds;
      rr.chosen_hyperparameter = cv.chosen_hyperparameter;
      result.replications.push_back(rr);
    }
  }
  for (Method method : config.methods) {
    MethodAggregate agg;
    agg.method = method;
    std::vector<double> vals;
    double time_sum = 0.0;
    for (const auto& rr : result.replications) {
      if (rr.method != method) continue;
      vals.push_back(rr.oos_misclassification);
      time_sum += rr.cv_time;
    }
    const double n = static_cast<double>(vals.size());
    for (double v : vals) agg.mean += v;
    agg.mean /= n;
    if (vals.size() > 1) {
      double ss = 0.0;
      for (double v : vals) ss += (v - agg.mean) * (v - agg.mean);
      agg.stddev = std::sqrt(ss / (n - 1.0));
    }
    agg.mean_time = time_sum / n;
    result.aggregates.push_back(agg);
  }
  return result;
}

// ----- config file (key = value lines, '#' comments) -----

inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) + " is not key=value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "class")
      config.generator = generator_from_string(value);
    else if (key == "n")
      config.n = std::stoi(value);
    else if (key == "p")
      config.p = std::stoi(value);
    else if (key == "sigma")
      config.sigma = std::stod(value);
    else if (key == "tau")
      config.tau = std::stod(value);
    else if (key == "replications")
      config.replications = std::stoi(value);
    else if (key == "seed")
      config.seed = std::stoull(value);
    else if (key == "grid_size")
      config.grid_size = std::stoi(value);
    else if (key == "test_size")
      config.test_size = std::stoi(value);
    else if (key == "jobs")
      config.jobs = std::stoi(value);
    else if (key == "methods") {
      config.methods.clear();
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ','))
        config.methods.push_back(method_from_string(trim(tok)));
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return config;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_experiment_config(in);
}

}  // namespace conicsvm
