// Acceptance suite: one check per criterion, each printed as a PASS/FAIL
// line with its measured values. Exit code is the number of failures.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "conicsvm/conicsvm.hpp"

using namespace conicsvm;

namespace {

int g_failures = 0;

void report(int id, bool pass, const char* name, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

double grid_loss_oracle(double u, double gamma, double lambda, int grid) {
  const double a = 1.0 - u;
  const double ap2 = positive_part(a) * positive_part(a);
  const double an2 = negative_part(a) * negative_part(a);
  double best = kInf;
  for (int k = 0; k <= grid; ++k) {
    const double z = static_cast<double>(k) / grid;
    const double t1 = guarded_quot(ap2, z);
    const double t2 = guarded_quot(an2, 1.0 - z);
    if (t1 == kInf || t2 == kInf) continue;
    best = std::min(best, lambda * z + gamma * (t1 + t2) - gamma * a * a);
  }
  return best;
}

LabeledDataset random_overlap_instance(std::mt19937_64& rng, int n, int p, double sep,
                                       double sigma) {
  std::normal_distribution<double> gauss;
  Matrix X(n, p);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    const double label = (i % 2 == 0) ? 1.0 : -1.0;
    for (int j = 0; j < p; ++j)
      X(i, j) = label * sep / std::sqrt(static_cast<double>(p)) + sigma * gauss(rng);
    y(i) = label;
  }
  return LabeledDataset(X, y);
}

// ----- criteria -----

void criterion_1() {
  std::mt19937_64 rng(202406);
  std::uniform_real_distribution<double> uu(-3.0, 3.0), ug(0.1, 2.0), ul(0.1, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double u = uu(rng), gamma = ug(rng), lambda = ul(rng);
    ConicLossParams params(gamma, lambda);
    const double closed = conic_loss(u, params);
    const double oracle = grid_loss_oracle(u, gamma, lambda, 1000000);
    worst = std::max(worst, std::abs(closed - oracle));
  }
  report(1, worst <= 1e-6, "closed-form loss vs z-grid minimization",
         fmt("worst |closed - grid| = %.3e over 1000 triples", worst));
}

void criterion_2() {
  std::mt19937_64 rng(7781);
  std::normal_distribution<double> gauss;
  double worst_lo = 0.0;
  bool all_hi_negative = true;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 2 + static_cast<int>(rng() % 9);  // up to 10
    Matrix A(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) A(i, j) = gauss(rng);
    Matrix Q = A * A.transpose() + 0.2 * Matrix::Identity(p, p);
    Vector x(p);
    for (int i = 0; i < p; ++i) x(i) = gauss(rng);
    const double gstar = gamma_max_single(Q, x);
    Eigen::SelfAdjointEigenSolver<Matrix> lo(Q - gstar * x * x.transpose(),
                                             Eigen::EigenvaluesOnly);
    worst_lo = std::min(worst_lo, lo.eigenvalues().minCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix> hi(Q - 1.000001 * gstar * x * x.transpose(),
                                             Eigen::EigenvaluesOnly);
    if (hi.eigenvalues().minCoeff() >= 0.0) all_hi_negative = false;
  }
  report(2, worst_lo >= -1e-9 && all_hi_negative, "gamma threshold psd boundary",
         fmt("min eig at gamma* = %.3e; all scaled-up checks negative = %d", worst_lo,
             all_hi_negative ? 1 : 0));
}

void criterion_3() {
  std::mt19937_64 rng(40932);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss;
  auto scalar_hull_rhs = [](double w, double z, double b) {
    const double ap = positive_part(w - b), an = negative_part(w - b);
    const double t1 = guarded_quot(ap * ap, 1.0 - z);
    const double t2 = guarded_quot(an * an, z);
    if (t1 == kInf || t2 == kInf) return kInf;
    return t1 + t2 + 2.0 * b * w - b * b;
  };
  double worst_violation = 0.0, worst_tight = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double b = static_cast<double>(static_cast<int>(rng() % 5)) - 2.0;
    const double w0 = b + std::abs(gauss(rng));
    const double w1 = b - std::abs(gauss(rng));
    const double t0 = w0 * w0 + std::abs(gauss(rng));
    const double t1 = w1 * w1 + std::abs(gauss(rng));
    const double z = unif(rng);
    const double w = (1.0 - z) * w0 + z * w1;
    const double t = (1.0 - z) * t0 + z * t1;
    const double rhs = scalar_hull_rhs(w, z, b);
    if (rhs != kInf) worst_violation = std::max(worst_violation, rhs - t);
    worst_tight = std::max(worst_tight, std::abs(scalar_hull_rhs(w0, 0.0, b) - w0 * w0));
    worst_tight = std::max(worst_tight, std::abs(scalar_hull_rhs(w1, 1.0, b) - w1 * w1));
  }
  report(3, worst_violation <= 1e-9 && worst_tight <= 1e-12, "hull inequality valid and tight",
         fmt("worst violation %.3e, worst integer-z slack %.3e", worst_violation, worst_tight));
}

void criterion_4() {
  std::mt19937_64 rng(5150);
  const double lambda = 1.0;
  bool trivial_ok = true;
  double worst_gap = 1.0;
  int qualifying = 0;
  std::string detail;
  for (int rep = 0; rep < 5; ++rep) {
    auto base = random_overlap_instance(rng, 8, 2, 0.4, 0.9);
    // plant a conflicting duplicate so at least one indicator is forced on
    Matrix X(10, 2);
    X.topRows(8) = base.features();
    X.row(8) << 1.0, 0.5;
    X.row(9) << 1.0, 0.5;
    Vector y(10);
    y.head(8) = base.labels();
    y(8) = 1.0;
    y(9) = -1.0;
    LabeledDataset data(X, y);

    for (double M : {1e2, 1e4, 1e6}) {
      auto m = build_bigm_relaxation(data, lambda, M);
      auto sol = solve_qp(m.problem);
      if (sol.status != QpStatus::Optimal || sol.objective > lambda * 10.0 / M + 1e-9)
        trivial_ok = false;
    }
    auto exact = solve_enumeration(data, lambda);
    if (exact.optimal && exact.objective >= lambda) {
      ++qualifying;
      auto relax = solve_qp(build_bigm_relaxation(data, lambda, 1e6).problem);
      worst_gap = std::min(worst_gap, relaxation_gap(exact.objective, relax.objective));
    }
  }
  report(4, trivial_ok && qualifying > 0 && worst_gap > 0.99, "big-M relaxation is trivial",
         fmt("optima <= lambda n / M held = %d; min gap at M=1e6 over %d instances = %.6f",
             trivial_ok ? 1 : 0, qualifying, worst_gap));
}

void criterion_5() {
  std::mt19937_64 rng(6001);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 8 + static_cast<int>(rng() % 8);
    const int p = 2 + static_cast<int>(rng() % 2);
    auto data = random_overlap_instance(rng, n, p, 0.6, 0.8);
    const double lambda = 0.5 + 0.1 * (rep % 5);
    auto hinge_ref = solve_qp(build_hinge_qp(data, lambda).problem);
    double maxx = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) maxx = std::max(maxx, data.point(i).norm());
    const double M = 10.0 * (1.0 + maxx * hinge_ref.x.head(p).norm());
    auto big = solve_qp(build_bigm_relaxation(data, lambda, M).problem);
    auto hin = solve_qp(build_hinge_qp(data, lambda / M).problem);
    const double err =
        std::abs(big.objective - hin.objective) / (1.0 + std::abs(big.objective));
    worst = std::max(worst, err);
  }
  report(5, worst <= 1e-6, "big-M relaxation equals hinge at lambda/M",
         fmt("worst scaled difference = %.3e over 20 instances", worst));
}

void criterion_6() {
  std::mt19937_64 rng(7207);
  int strict = 0, total = 50;
  double worst_lo = 0.0, worst_hi = 0.0;
  for (int rep = 0; rep < total; ++rep) {
    const int n = 6 + 2 * (rep % 4);
    const int p = 2 + (rep % 2);
    auto data = random_overlap_instance(rng, n, p, 0.5, 0.9);
    const double lambda = 0.6 + 0.15 * (rep % 3);
    auto exact = solve_enumeration(data, lambda);
    auto bigm = solve_qp(build_bigm_relaxation(data, lambda, default_big_m(data)).problem);
    auto sdp = solve(build_conic_sdp(data, SvmHyperparams::conic_penalty(lambda)).program);
    worst_lo = std::max(worst_lo, bigm.objective - sdp.primal_objective);
    worst_hi = std::max(worst_hi, sdp.primal_objective - exact.objective);
    if (sdp.primal_objective > bigm.objective + 1e-4) ++strict;
  }
  report(6, worst_lo <= 1e-6 && worst_hi <= 1e-6 && 2 * strict >= total,
         "relaxation ordering big-M <= sdp <= exact",
         fmt("worst bigM-sdp %.3e, worst sdp-exact %.3e, strict improvements %d/%d", worst_lo,
             worst_hi, strict, total));
}

void criterion_7() {
  std::mt19937_64 rng(8513);
  double worst = 0.0;
  int solved = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 6 + 2 * (rep % 4);  // 6, 8, 10, 12
    const int p = 2 + (rep % 2);
    auto data = random_overlap_instance(rng, n, p, 0.5, 0.9);
    const double lambda = 0.5 + 0.2 * (rep % 3);
    auto enu = solve_enumeration(data, lambda);
    const BnbRelaxation relax = rep % 2 == 0 ? BnbRelaxation::ConicSdp : BnbRelaxation::BigM;
    auto bnb = solve_branch_and_bound(data, lambda, relax);
    if (enu.optimal && bnb.optimal) {
      ++solved;
      worst = std::max(worst, std::abs(enu.objective - bnb.objective));
    }
  }
  report(7, solved == 50 && worst <= 1e-5, "branch-and-bound equals enumeration",
         fmt("%d/50 solved, worst |difference| = %.3e", solved, worst));
}

void criterion_8() {
  std::mt19937_64 rng(9311);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 10 + 2 * (rep % 11);  // up to 30
    const int p = 2 + (rep % 3);
    auto data = random_overlap_instance(rng, n, p, 0.6, 0.8);
    const double lambda = 0.4 + 0.2 * (rep % 4);
    auto lin = solve(build_conic_sdp(data, SvmHyperparams::conic_penalty(lambda)).program);
    auto ker = solve(
        build_kernel_sdp(data, Kernel::linear(), SvmHyperparams::kernel_penalty(lambda)).program);
    const double rel = std::abs(lin.primal_objective - ker.primal_objective) /
                       std::max(1.0, std::abs(lin.primal_objective));
    worst = std::max(worst, rel);
  }
  report(8, worst <= 1e-4, "linear-kernel sdp equals linear sdp",
         fmt("worst relative difference = %.3e over 20 instances", worst));
}

void criterion_9() {
  ExperimentConfig config;
  config.generator = GeneratorClass::Clustered;
  config.n = 100;
  config.p = 3;
  config.sigma = 0.2;
  config.replications = 10;
  config.seed = 91;
  config.grid_size = 50;
  config.test_size = 20000;
  config.methods = {Method::Hinge, Method::Conic};
  config.jobs = 2;
  auto result = run_experiment(config);
  const auto& hinge = result.aggregates[0];
  const auto& conic = result.aggregates[1];
  report(9, conic.mean < hinge.mean && conic.stddev < hinge.stddev,
         "clustered outliers: conic beats hinge in mean and spread",
         fmt("hinge %.4f +- %.4f vs conic %.4f +- %.4f", hinge.mean, hinge.stddev, conic.mean,
             conic.stddev));
}

void criterion_10() {
  ExperimentConfig config;
  config.generator = GeneratorClass::None_;
  config.n = 100;
  config.p = 3;
  config.sigma = 0.2;
  config.replications = 10;
  config.seed = 103;
  config.grid_size = 50;
  config.test_size = 20000;
  config.methods = {Method::Hinge, Method::Conic};
  config.jobs = 2;
  auto result = run_experiment(config);
  const double diff = std::abs(result.aggregates[0].mean - result.aggregates[1].mean);
  report(10, diff <= 0.01, "no outliers: hinge and conic agree",
         fmt("hinge %.4f vs conic %.4f, |diff| = %.4f", result.aggregates[0].mean,
             result.aggregates[1].mean, diff));
}

void criterion_11() {
  const double refs[3] = {0.0062, 0.1587, 0.3085};
  const double sigmas[3] = {0.2, 0.5, 1.0};
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const double analytic = bayes_error(sigmas[k]);
    Rng rng(1022 + k);
    Vector d = draw_direction(3, rng);
    auto test_set = sample_gaussian(GeneratorClass::None_, 100000, sigmas[k], d, false, rng);
    const double empirical = misclassification_rate(bayes_classifier(d), test_set);
    if (std::abs(analytic - refs[k]) > 0.001) ok = false;
    if (std::abs(empirical - analytic) > 0.001) ok = false;
    detail += fmt("s=%.1f: analytic %.4f empirical %.4f; ", sigmas[k], analytic, empirical);
  }
  report(11, ok, "bayes reference errors", detail);
}

void criterion_12() {
  bool ok = true;
  std::string detail;
  auto check_gap = [&](const ConicSolution& sol) {
    return sol.status == ConicStatus::Optimal &&
           std::abs(sol.primal_objective - sol.dual_objective) <=
               1e-7 * (1.0 + std::abs(sol.primal_objective));
  };
  {
    ConicProgram p;
    p.objective = Vector::Constant(1, 1.0);
    p.rhs = Vector::Constant(1, -3.0);
    p.cones = {nonnegative_cone(1)};
    p.constraint_matrix.resize(1, 1);
    std::vector<Triplet> t{{0, 0, -1.0}};
    p.constraint_matrix.setFromTriplets(t.begin(), t.end());
    auto sol = solve(p);
    ok = ok && check_gap(sol) && std::abs(sol.primal_objective - 3.0) <= 1e-6;
    detail += fmt("lp %.8f; ", sol.primal_objective);
  }
  {
    ConicProgram p;
    p.objective = Vector::Constant(1, 1.0);
    p.rhs = Vector(3);
    p.rhs << 0.0, 1.0, 1.0;
    p.cones = {second_order_cone(3)};
    p.constraint_matrix.resize(3, 1);
    std::vector<Triplet> t{{0, 0, -1.0}};
    p.constraint_matrix.setFromTriplets(t.begin(), t.end());
    auto sol = solve(p);
    ok = ok && check_gap(sol) && std::abs(sol.primal_objective - std::sqrt(2.0)) <= 1e-6;
    detail += fmt("soc %.8f; ", sol.primal_objective);
  }
  {
    ConicProgram p;
    p.objective = Vector(3);
    p.objective << 1.0, 0.0, 1.0;
    p.rhs = Vector(3);
    p.rhs << -1.0, 0.0, -1.0;
    p.cones = {psd_cone(2)};
    p.constraint_matrix.resize(3, 3);
    std::vector<Triplet> t{{0, 0, -1.0}, {1, 1, -1.0}, {2, 2, -1.0}};
    p.constraint_matrix.setFromTriplets(t.begin(), t.end());
    auto sol = solve(p);
    ok = ok && check_gap(sol) && std::abs(sol.primal_objective - 2.0) <= 1e-6;
    detail += fmt("sdp %.8f", sol.primal_objective);
  }
  report(12, ok, "solver unit contract on lp/soc/sdp", detail);
}

void criterion_13() {
  auto median_solve_time = [&](int n) {
    std::vector<double> times;
    for (int run = 0; run < 5; ++run) {
      Rng rng(4040 + run);
      Vector d = draw_direction(5, rng);
      auto data = sample_gaussian(GeneratorClass::Clustered, n, 0.2, d, true, rng);
      auto model = build_conic_sdp(data, SvmHyperparams::conic_penalty(1.0));
      auto sol = solve(model.program);
      times.push_back(sol.solve_time);
    }
    std::sort(times.begin(), times.end());
    return times[2];
  };
  const double t100 = median_solve_time(100);
  const double t400 = median_solve_time(400);
  report(13, t400 <= 6.0 * t100, "solve time scales mildly in n",
         fmt("median t(n=100) = %.3fs, t(n=400) = %.3fs, ratio %.2f", t100, t400,
             t400 / std::max(t100, 1e-12)));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  criterion_13();
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/13 criteria passed in %.1fs\n", 13 - g_failures, elapsed);
  return g_failures;
}
