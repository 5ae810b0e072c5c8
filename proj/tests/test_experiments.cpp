#include <catch2/catch.hpp>

#include <cmath>

#include "conicsvm/experiments.hpp"

using namespace conicsvm;

namespace {

Vector class_mean(const LabeledDataset& d, double label) {
  Vector m = Vector::Zero(d.p() - 1);
  int cnt = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.label(i) != label) continue;
    m += d.features().row(i).tail(d.p() - 1).transpose();
    ++cnt;
  }
  return m / std::max(1, cnt);
}

}  // namespace

TEST_CASE("gaussian generator geometry") {
  ExperimentConfig config;
  config.generator = GeneratorClass::None_;
  config.n = 4000;
  config.p = 3;
  config.sigma = 1e-4;  // nearly point masses at the centroids
  config.seed = 5;
  auto data = generate_gaussian_instance(config);
  CHECK(data.intercept_embedded());
  CHECK(data.p() == 4);
  Vector mplus = class_mean(data, 1.0);
  Vector mminus = class_mean(data, -1.0);
  // centroids are one unit apart
  CHECK((mplus - mminus).norm() == Approx(1.0).margin(1e-3));
  CHECK(mplus.norm() == Approx(0.5).margin(1e-3));
}

TEST_CASE("clustered outlier fraction concentrates near 10 percent") {
  ExperimentConfig config;
  config.generator = GeneratorClass::Clustered;
  config.n = 10000;
  config.p = 3;
  config.sigma = 0.2;
  config.seed = 11;
  auto data = generate_gaussian_instance(config);
  // outliers sit at -5 d-hat with label +1; projection separates them
  Rng rng(config.seed);
  Vector d = draw_direction(config.p, rng);
  Vector dhat = d / d.norm();
  int outliers = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double proj = data.features().row(i).tail(config.p).dot(dhat);
    if (data.label(i) == 1.0 && proj < -2.0) ++outliers;
  }
  const double frac = static_cast<double>(outliers) / data.n();
  CHECK(frac >= 0.08);
  CHECK(frac <= 0.12);
}

TEST_CASE("clean samples carry no outliers") {
  Rng rng(13);
  Vector d = draw_direction(3, rng);
  auto clean = sample_gaussian(GeneratorClass::Clustered, 5000, 0.2, d, false, rng);
  Vector dhat = d / d.norm();
  for (Eigen::Index i = 0; i < clean.n(); ++i) {
    const double proj = clean.features().row(i).tail(3).dot(dhat);
    CHECK(std::abs(proj) < 2.0);
  }
}

TEST_CASE("separable-flip generator") {
  ExperimentConfig config;
  config.generator = GeneratorClass::SeparableFlip;
  config.n = 500;
  config.p = 3;
  config.tau = 0.0;
  config.seed = 17;
  auto data = generate_separable_flip_instance(config);
  Rng rng(config.seed);
  Vector wbar(config.p + 1);
  for (int j = 0; j <= config.p; ++j) wbar(j) = rng.uniform(-1.0, 1.0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double side = wbar.dot(data.features().row(i).transpose());
    CHECK(data.label(i) * side >= 0.0);
  }

  config.tau = 0.2;
  config.n = 10000;
  auto noisy = generate_separable_flip_instance(config);
  Rng rng2(config.seed);
  Vector wbar2(config.p + 1);
  for (int j = 0; j <= config.p; ++j) wbar2(j) = rng2.uniform(-1.0, 1.0);
  int flips = 0;
  for (Eigen::Index i = 0; i < noisy.n(); ++i) {
    const double side = wbar2.dot(noisy.features().row(i).transpose()) >= 0 ? 1.0 : -1.0;
    if (noisy.label(i) != side) ++flips;
  }
  const double frac = static_cast<double>(flips) / noisy.n();
  CHECK(frac >= 0.17);
  CHECK(frac <= 0.23);

  ExperimentConfig bad = config;
  bad.tau = 0.5;
  CHECK_THROWS_AS(generate_separable_flip_instance(bad), std::invalid_argument);
}

TEST_CASE("bayes classifier") {
  ExperimentConfig config;
  config.generator = GeneratorClass::None_;
  config.p = 3;
  config.sigma = 0.05;
  config.seed = 23;
  auto model = bayes_classifier(config);
  REQUIRE(model.weights.has_value());
  CHECK((*model.weights)(0) == 0.0);

  // a point at the +1 centroid classifies as +1
  Rng rng(config.seed);
  Vector d = draw_direction(config.p, rng);
  Vector x(config.p + 1);
  x(0) = 1.0;
  x.tail(config.p) = 0.5 * d / d.norm();
  CHECK(predict(model, x) == 1.0);

  // analytic reference values
  CHECK(bayes_error(0.2) == Approx(0.0062).margin(2e-4));
  CHECK(bayes_error(0.5) == Approx(0.1587).margin(2e-4));
  CHECK(bayes_error(1.0) == Approx(0.3085).margin(2e-4));

  // empirical error concentrates within 3 standard errors
  for (double sigma : {0.2, 0.5, 1.0}) {
    const int m = 50000;
    Rng r2(29);
    Vector dir = draw_direction(3, r2);
    auto test_set = sample_gaussian(GeneratorClass::None_, m, sigma, dir, false, r2);
    const double rate = misclassification_rate(bayes_classifier(dir), test_set);
    const double mu = bayes_error(sigma);
    const double se = std::sqrt(mu * (1.0 - mu) / m);
    CHECK(std::abs(rate - mu) <= 3.0 * se);
  }

  ExperimentConfig bad;
  bad.generator = GeneratorClass::SeparableFlip;
  CHECK_THROWS_AS(bayes_classifier(bad), std::invalid_argument);
}

TEST_CASE("hyperparameter grids") {
  // hinge grid beta/(1-beta) with beta uniform in (0,1)
  CHECK(hinge_grid_value(0, 99) > 0.0);
  CHECK(hinge_grid_value(49, 99) == Approx(1.0));  // beta = 0.5
  // conic grid kappa uniform in [0, 0.5]
  CHECK(conic_grid_value(0, 100) == 0.0);
  CHECK(conic_grid_value(99, 100) == Approx(0.5));
}

TEST_CASE("cross validation selects a zero-error model on separable data") {
  Rng rng(31);
  Vector wbar(3);
  wbar << 0.1, 0.8, -0.6;
  auto train_set = sample_separable_flip(40, 2, 0.0, wbar, rng);
  auto validate_set = sample_separable_flip(40, 2, 0.0, wbar, rng);

  auto cv = cross_validate(train_set, validate_set, Method::Hinge, 12);
  CHECK(misclassification_rate(cv.classifier, validate_set) == 0.0);
  CHECK(cv.cv_seconds > 0.0);

  // grid of one returns the single model
  auto single = cross_validate(train_set, validate_set, Method::Hinge, 1);
  CHECK(single.chosen_index == 0);
  CHECK(single.chosen_hyperparameter == Approx(1.0));

  CHECK_THROWS_AS(cross_validate(train_set, validate_set, Method::Bayes, 3),
                  std::invalid_argument);
}

TEST_CASE("run_experiment is deterministic and aggregates correctly") {
  ExperimentConfig config;
  config.generator = GeneratorClass::Clustered;
  config.n = 24;
  config.p = 2;
  config.sigma = 0.2;
  config.replications = 3;
  config.seed = 37;
  config.grid_size = 6;
  config.test_size = 400;
  config.methods = {Method::Hinge, Method::Conic, Method::Bayes};

  auto r1 = run_experiment(config);
  auto r2 = run_experiment(config);
  REQUIRE(r1.replications.size() == r2.replications.size());
  for (size_t i = 0; i < r1.replications.size(); ++i) {
    CHECK(r1.replications[i].oos_misclassification == r2.replications[i].oos_misclassification);
    CHECK(r1.replications[i].chosen_hyperparameter == r2.replications[i].chosen_hyperparameter);
  }

  // aggregates follow the sample standard deviation convention
  for (const auto& agg : r1.aggregates) {
    std::vector<double> vals;
    for (const auto& rr : r1.replications)
      if (rr.method == agg.method) vals.push_back(rr.oos_misclassification);
    REQUIRE(vals.size() == 3);
    double mean = (vals[0] + vals[1] + vals[2]) / 3.0;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    CHECK(agg.mean == Approx(mean).margin(1e-15));
    CHECK(agg.stddev == Approx(std::sqrt(ss / 2.0)).margin(1e-12));
    CHECK(agg.mean >= 0.0);
    CHECK(agg.mean <= 1.0);
  }

  // parallel execution reproduces the sequential results
  ExperimentConfig par = config;
  par.jobs = 2;
  auto r3 = run_experiment(par);
  for (size_t i = 0; i < r1.replications.size(); ++i)
    CHECK(r1.replications[i].oos_misclassification == r3.replications[i].oos_misclassification);
}

TEST_CASE("config file parsing") {
  std::stringstream ss;
  ss << "# benchmark setup\n"
     << "class = clustered\n"
     << "n = 100\n"
     << "p = 3\n"
     << "sigma = 0.2\n"
     << "replications = 20\n"
     << "seed = 7\n"
     << "grid_size = 50\n"
     << "test_size = 20000\n"
     << "methods = hinge, conic, bayes\n";
  auto config = parse_experiment_config(ss);
  CHECK(config.generator == GeneratorClass::Clustered);
  CHECK(config.n == 100);
  CHECK(config.grid_size == 50);
  CHECK(config.methods.size() == 3);

  std::stringstream bad("nonsense line\n");
  CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);
  std::stringstream bad2("unknown_key = 3\n");
  CHECK_THROWS_AS(parse_experiment_config(bad2), std::invalid_argument);
}

TEST_CASE("seeded splits partition the data") {
  Rng gen(41);
  Vector wbar(4);
  wbar << 0.2, 0.5, -0.7, 0.3;
  auto data = sample_separable_flip(60, 3, 0.0, wbar, gen);

  Rng r1(9), r2(9);
  auto s1 = split_dataset(data, 0.35, 0.35, r1);
  auto s2 = split_dataset(data, 0.35, 0.35, r2);
  CHECK(s1.train.n() == 21);
  CHECK(s1.validate.n() == 21);
  CHECK(s1.test.n() == 18);
  CHECK((s1.train.features() - s2.train.features()).cwiseAbs().maxCoeff() == 0.0);

  // every original row appears exactly once across the three parts
  std::vector<double> seen;
  for (const auto* part : {&s1.train, &s1.validate, &s1.test})
    for (Eigen::Index i = 0; i < part->n(); ++i)
      seen.push_back(part->features().row(i).sum() + 17.0 * part->label(i));
  std::vector<double> orig;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    orig.push_back(data.features().row(i).sum() + 17.0 * data.label(i));
  std::sort(seen.begin(), seen.end());
  std::sort(orig.begin(), orig.end());
  CHECK(seen == orig);
}

TEST_CASE("label flips hit the requested fraction") {
  Rng gen(43);
  Vector wbar(3);
  wbar << 0.3, 0.9, -0.2;
  auto data = sample_separable_flip(8000, 2, 0.0, wbar, gen);
  Rng r(5);
  auto noisy = flip_labels(data, 0.25, r);
  int flips = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (noisy.label(i) != data.label(i)) ++flips;
  const double frac = static_cast<double>(flips) / data.n();
  CHECK(frac >= 0.22);
  CHECK(frac <= 0.28);
  CHECK_THROWS_AS(flip_labels(data, 0.5, r), std::invalid_argument);
}

TEST_CASE("csv experiment protocol on user data") {
  Rng gen(47);
  Vector wbar(3);
  wbar << 0.1, 0.8, -0.5;
  auto data = sample_separable_flip(60, 2, 0.0, wbar, gen);

  ExperimentConfig config;
  config.generator = GeneratorClass::SeparableFlip;  // ignored by the protocol
  config.tau = 0.1;
  config.replications = 2;
  config.seed = 3;
  config.grid_size = 5;
  config.methods = {Method::Hinge, Method::Conic};
  auto r1 = run_csv_experiment(data, config);
  auto r2 = run_csv_experiment(data, config);
  REQUIRE(r1.replications.size() == 4);
  for (size_t i = 0; i < r1.replications.size(); ++i)
    CHECK(r1.replications[i].oos_misclassification == r2.replications[i].oos_misclassification);

  config.methods = {Method::Bayes};
  CHECK_THROWS_AS(run_csv_experiment(data, config), std::invalid_argument);
}

TEST_CASE("cross validation tie-break picks the smallest grid index") {
  Rng gen(53);
  Vector wbar(3);
  wbar << 0.0, 1.0, -0.4;
  auto train_set = sample_separable_flip(30, 2, 0.0, wbar, gen);
  auto validate_set = sample_separable_flip(30, 2, 0.0, wbar, gen);

  const int grid = 10;
  auto cv = cross_validate(train_set, validate_set, Method::Hinge, grid);

  // recompute the first grid index attaining the minimal validation rate
  int first_best = -1;
  double best_rate = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid; ++k) {
    auto model = train(train_set, SvmHyperparams::hinge(hinge_grid_value(k, grid)));
    const double rate = misclassification_rate(model, validate_set);
    if (rate < best_rate) {
      best_rate = rate;
      first_best = k;
    }
  }
  CHECK(cv.chosen_index == first_best);
}

TEST_CASE("spread outliers inflate the tails of both classes") {
  Rng rng(59);
  Vector d = draw_direction(3, rng);
  Vector centroid = 0.5 * d / d.norm();
  auto noisy = sample_gaussian(GeneratorClass::Spread, 10000, 0.2, d, true, rng);
  int far = 0;
  for (Eigen::Index i = 0; i < noisy.n(); ++i) {
    Vector x = noisy.features().row(i).tail(3).transpose();
    const Vector mean = noisy.label(i) > 0 ? centroid : Vector(-centroid);
    if ((x - mean).norm() > 1.2) ++far;
  }
  const double frac = static_cast<double>(far) / noisy.n();
  CHECK(frac >= 0.04);
  CHECK(frac <= 0.13);

  // clean samples have essentially no mass that far out
  auto clean = sample_gaussian(GeneratorClass::Spread, 10000, 0.2, d, false, rng);
  int far_clean = 0;
  for (Eigen::Index i = 0; i < clean.n(); ++i) {
    Vector x = clean.features().row(i).tail(3).transpose();
    const Vector mean = clean.label(i) > 0 ? centroid : Vector(-centroid);
    if ((x - mean).norm() > 1.2) ++far_clean;
  }
  CHECK(far_clean <= 5);
}
