// Command-line front end: data generation, training, evaluation, relaxation
// gap reports, loss-curve sampling and the replication benchmark.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "conicsvm/conicsvm.hpp"

namespace {

using namespace conicsvm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;

struct GenDataArgs {
  std::string klass = "none";
  int n = 100;
  int p = 3;
  double sigma = 0.2;
  double tau = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_data(const GenDataArgs& args) {
  ExperimentConfig config;
  config.generator = generator_from_string(args.klass);
  config.n = args.n;
  config.p = args.p;
  config.sigma = args.sigma;
  config.tau = args.tau;
  config.seed = args.seed;
  LabeledDataset data = config.generator == GeneratorClass::SeparableFlip
                            ? generate_separable_flip_instance(config)
                            : generate_gaussian_instance(config);
  write_csv(args.out, data);
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string method = "hinge";
  double lambda = -1.0;
  double kappa = -1.0;
  std::string kernel = "linear";
  double bandwidth = 1.0;
  int degree = 2;
  double offset = 1.0;
  bool no_intercept = false;
  std::string out;
  std::string dump_program;
};

Kernel make_kernel(const TrainArgs& args) {
  if (args.kernel == "linear") return Kernel::linear();
  if (args.kernel == "gaussian") return Kernel::gaussian(args.bandwidth);
  if (args.kernel == "polynomial") return Kernel::polynomial(args.degree, args.offset);
  throw std::invalid_argument("unknown kernel: " + args.kernel);
}

int run_train(const TrainArgs& args) {
  auto data = read_csv(args.data, !args.no_intercept);
  const bool has_lambda = args.lambda > 0.0;
  const bool has_kappa = args.kappa >= 0.0;

  SvmHyperparams hyper;
  Kernel kernel = Kernel::linear();
  std::string description;
  if (args.method == "hinge") {
    if (!has_lambda) throw std::invalid_argument("hinge training needs --lambda");
    hyper = SvmHyperparams::hinge(args.lambda);
    description = "hinge lambda=" + std::to_string(args.lambda);
  } else if (args.method == "conic") {
    if (has_lambda == has_kappa)
      throw std::invalid_argument("conic training needs exactly one of --lambda/--kappa");
    hyper = has_lambda ? SvmHyperparams::conic_penalty(args.lambda)
                       : SvmHyperparams::conic_cardinality(args.kappa);
    description = has_lambda ? "conic lambda=" + std::to_string(args.lambda)
                             : "conic kappa=" + std::to_string(args.kappa);
  } else if (args.method == "conic-kernel") {
    if (has_lambda == has_kappa)
      throw std::invalid_argument("kernel training needs exactly one of --lambda/--kappa");
    hyper = has_lambda ? SvmHyperparams::kernel_penalty(args.lambda)
                       : SvmHyperparams::kernel_cardinality(args.kappa);
    kernel = make_kernel(args);
    description = "conic-kernel " + args.kernel +
                  (has_lambda ? " lambda=" + std::to_string(args.lambda)
                              : " kappa=" + std::to_string(args.kappa));
  } else {
    throw std::invalid_argument("unknown training method: " + args.method);
  }

  if (!args.dump_program.empty()) {
    if (args.method == "hinge")
      throw std::invalid_argument("--dump-program applies to the conic methods only");
    std::ofstream dump(args.dump_program);
    if (!dump) throw std::invalid_argument("cannot open dump file: " + args.dump_program);
    if (args.method == "conic")
      build_conic_sdp(data, hyper).program.dump(dump);
    else
      build_kernel_sdp(data, kernel, hyper).program.dump(dump);
  }

  TrainedClassifier model =
      train(data, hyper, args.method == "conic-kernel" ? &kernel : nullptr);
  if (model.solver_status != SolverStatus::Optimal &&
      model.solver_status != SolverStatus::Inaccurate) {
    std::cerr << "solver failed: " << to_string(model.solver_status) << "\n";
    return kExitSolver;
  }

  ModelFile file;
  file.classifier = model;
  file.training_data = data;
  file.hyperparameter_description = description;
  write_model(args.out, file);
  std::printf("status=%s objective=%.9g\n", to_string(model.solver_status),
              model.objective_value);
  return kExitOk;
}

int run_evaluate(const std::string& model_path, const std::string& data_path) {
  auto model = read_model(model_path);
  auto data = read_csv(data_path, model.intercept_embedded);
  const LabeledDataset* train_ref =
      model.classifier.is_linear() ? nullptr : &*model.training_data;
  const double rate = misclassification_rate(model.classifier, data, train_ref);
  std::printf("%.6f\n", rate);
  return kExitOk;
}

struct GapArgs {
  std::string data;
  double lambda = 1.0;
  double big_m = 0.0;
  bool no_intercept = false;
};

int run_gap(const GapArgs& args) {
  auto data = read_csv(args.data, !args.no_intercept);
  const double M = args.big_m > 0.0 ? args.big_m : default_big_m(data);

  auto exact = solve_enumeration(data, args.lambda);
  if (!exact.optimal) {
    std::cerr << "exact enumeration failed\n";
    return kExitSolver;
  }
  auto bigm = solve_qp(build_bigm_relaxation(data, args.lambda, M).problem);
  auto sdp_model = build_conic_sdp(data, SvmHyperparams::conic_penalty(args.lambda));
  auto sdp = solve(sdp_model.program);
  if (bigm.status != QpStatus::Optimal ||
      (sdp.status != ConicStatus::Optimal && sdp.status != ConicStatus::Inaccurate)) {
    std::cerr << "relaxation solve failed\n";
    return kExitSolver;
  }
  std::printf("zeta_mio,zeta_bigm,zeta_conic,gap_bigm,gap_conic\n");
  std::printf("%.9g,%.9g,%.9g,%.9g,%.9g\n", exact.objective, bigm.objective,
              sdp.primal_objective, relaxation_gap(exact.objective, bigm.objective),
              relaxation_gap(exact.objective, sdp.primal_objective));
  return kExitOk;
}

struct LossCurveArgs {
  double gamma = 1.0;
  double lambda = 1.0;
  int samples = 201;
  double u_min = -3.0;
  double u_max = 3.0;
  std::string out;
};

int run_loss_curve(const LossCurveArgs& args) {
  ConicLossParams params(args.gamma, args.lambda);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!args.out.empty()) {
    file.open(args.out);
    if (!file) throw std::invalid_argument("cannot open output file: " + args.out);
    os = &file;
  }
  (*os) << "u,conic,hinge,zero_one\n";
  char buf[160];
  for (int k = 0; k < args.samples; ++k) {
    const double u =
        args.u_min + (args.u_max - args.u_min) * k / std::max(1, args.samples - 1);
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", u, conic_loss(u, params),
                  hinge_loss(u), zero_one_loss(u));
    (*os) << buf;
  }
  return kExitOk;
}

struct BenchArgs {
  std::string config_path;
  std::string out_csv;
  std::string out_json;
  std::string data;  // user CSV switches to the split-and-flip protocol
  bool no_intercept = false;
  // overrides; negative/empty keeps the config value
  std::string klass;
  int n = -1, p = -1, replications = -1, grid_size = -1, test_size = -1, jobs = -1;
  double sigma = -1.0, tau = -1.0;
  long long seed = -1;
  std::string methods;
};

int run_bench(const BenchArgs& args) {
  ExperimentConfig config;
  if (!args.config_path.empty()) config = load_experiment_config(args.config_path);
  if (!args.klass.empty()) config.generator = generator_from_string(args.klass);
  if (args.n > 0) config.n = args.n;
  if (args.p > 0) config.p = args.p;
  if (args.sigma > 0) config.sigma = args.sigma;
  if (args.tau >= 0) config.tau = args.tau;
  if (args.replications > 0) config.replications = args.replications;
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.grid_size > 0) config.grid_size = args.grid_size;
  if (args.test_size > 0) config.test_size = args.test_size;
  if (args.jobs > 0) config.jobs = args.jobs;
  if (!args.methods.empty()) {
    config.methods.clear();
    std::stringstream ss(args.methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) config.methods.push_back(method_from_string(tok));
  }
  if (!args.data.empty() && args.methods.empty() && config.methods.size() == 3)
    config.methods = {Method::Hinge, Method::Conic};  // no Bayes rule on user data
  config.validate();

  ExperimentResult result;
  if (args.data.empty()) {
    result = run_experiment(config);
  } else {
    auto data = read_csv(args.data, !args.no_intercept);
    result = run_csv_experiment(data, config);
  }

  if (!args.out_csv.empty()) {
    std::ofstream out(args.out_csv);
    if (!out) throw std::invalid_argument("cannot open csv output: " + args.out_csv);
    out << "replication,method,oos_misclassification,cv_time_seconds,chosen_hyperparameter,"
           "seed\n";
    char buf[256];
    for (const auto& rr : result.replications) {
      std::snprintf(buf, sizeof(buf), "%d,%s,%.9g,%.6f,%.9g,%llu\n", rr.replication,
                    to_string(rr.method), rr.oos_misclassification, rr.cv_time,
                    rr.chosen_hyperparameter, static_cast<unsigned long long>(rr.seed));
      out << buf;
    }
  }
  if (!args.out_json.empty()) {
    nlohmann::json j;
    j["config"] = {{"class", to_string(config.generator)},
                   {"n", config.n},
                   {"p", config.p},
                   {"sigma", config.sigma},
                   {"tau", config.tau},
                   {"replications", config.replications},
                   {"seed", config.seed},
                   {"grid_size", config.grid_size},
                   {"test_size", config.test_size}};
    nlohmann::json aggs = nlohmann::json::array();
    for (const auto& agg : result.aggregates)
      aggs.push_back({{"method", to_string(agg.method)},
                      {"mean_oos_misclassification", agg.mean},
                      {"std_oos_misclassification", agg.stddev},
                      {"mean_cv_time_seconds", agg.mean_time}});
    j["aggregates"] = aggs;
    std::ofstream out(args.out_json);
    if (!out) throw std::invalid_argument("cannot open json output: " + args.out_json);
    out << j.dump(2) << "\n";
  }

  for (const auto& agg : result.aggregates)
    std::printf("%s mean=%.4f std=%.4f mean_cv_time=%.3fs\n", to_string(agg.method), agg.mean,
                agg.stddev, agg.mean_time);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust SVM training via conic optimization"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cgen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  cgen->add_option("--class", gen.klass, "none|clustered|spread|separable-flip");
  cgen->add_option("--n", gen.n, "number of points");
  cgen->add_option("--p", gen.p, "feature dimension (before the intercept)");
  cgen->add_option("--sigma", gen.sigma, "gaussian standard deviation");
  cgen->add_option("--tau", gen.tau, "label flip probability (separable-flip)");
  cgen->add_option("--seed", gen.seed, "rng seed");
  cgen->add_option("--out", gen.out, "output CSV path")->required();

  TrainArgs train_args;
  auto* ctrain = app.add_subcommand("train", "train a classifier and write a model JSON");
  ctrain->add_option("--data", train_args.data, "training CSV")->required();
  ctrain->add_option("--method", train_args.method, "hinge|conic|conic-kernel");
  ctrain->add_option("--lambda", train_args.lambda, "penalty weight");
  ctrain->add_option("--kappa", train_args.kappa, "misclassification budget fraction");
  ctrain->add_option("--kernel", train_args.kernel, "linear|gaussian|polynomial");
  ctrain->add_option("--bandwidth", train_args.bandwidth, "gaussian kernel bandwidth");
  ctrain->add_option("--degree", train_args.degree, "polynomial kernel degree");
  ctrain->add_option("--offset", train_args.offset, "polynomial kernel offset");
  ctrain->add_flag("--no-intercept", train_args.no_intercept,
                   "do not embed the constant-one intercept feature");
  ctrain->add_option("--out", train_args.out, "model JSON path")->required();
  ctrain->add_option("--dump-program", train_args.dump_program,
                     "write the conic program as plain-text triplets");

  std::string eval_model, eval_data;
  auto* ceval = app.add_subcommand("evaluate", "print the misclassification rate of a model");
  ceval->add_option("--model", eval_model, "model JSON")->required();
  ceval->add_option("--data", eval_data, "evaluation CSV")->required();

  GapArgs gap_args;
  auto* cgap = app.add_subcommand("gap", "exact optimum vs relaxations, as a CSV row");
  cgap->add_option("--data", gap_args.data, "dataset CSV (n <= 20)")->required();
  cgap->add_option("--lambda", gap_args.lambda, "penalty weight");
  cgap->add_option("--big-m", gap_args.big_m, "big-M constant (default 1e4 max ||x||)");
  cgap->add_flag("--no-intercept", gap_args.no_intercept, "do not embed the intercept");

  LossCurveArgs loss_args;
  auto* closs = app.add_subcommand("loss-curve", "sample the loss functions as CSV");
  closs->add_option("--gamma", loss_args.gamma, "curvature parameter");
  closs->add_option("--lambda", loss_args.lambda, "saturation level");
  closs->add_option("--samples", loss_args.samples, "sample count");
  closs->add_option("--u-min", loss_args.u_min, "margin range start");
  closs->add_option("--u-max", loss_args.u_max, "margin range end");
  closs->add_option("--out", loss_args.out, "output CSV (stdout when omitted)");

  BenchArgs bench_args;
  auto* cbench = app.add_subcommand("bench", "run the replication benchmark");
  cbench->add_option("--config", bench_args.config_path, "key=value config file");
  cbench->add_option("--data", bench_args.data,
                     "user CSV; runs seeded 35/35/30 splits with label noise tau");
  cbench->add_flag("--no-intercept", bench_args.no_intercept, "do not embed the intercept");
  cbench->add_option("--class", bench_args.klass, "generator class override");
  cbench->add_option("--n", bench_args.n, "points per train/validation set");
  cbench->add_option("--p", bench_args.p, "feature dimension");
  cbench->add_option("--sigma", bench_args.sigma, "gaussian standard deviation");
  cbench->add_option("--tau", bench_args.tau, "label flip probability");
  cbench->add_option("--replications", bench_args.replications, "replication count");
  cbench->add_option("--seed", bench_args.seed, "base seed");
  cbench->add_option("--grid-size", bench_args.grid_size, "hyperparameter grid size");
  cbench->add_option("--test-size", bench_args.test_size, "clean test set size");
  cbench->add_option("--jobs", bench_args.jobs, "parallel replications");
  cbench->add_option("--methods", bench_args.methods, "comma list of hinge,conic,bayes");
  cbench->add_option("--out-csv", bench_args.out_csv, "per-replication CSV path");
  cbench->add_option("--out-json", bench_args.out_json, "summary JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cgen->parsed()) return run_gen_data(gen);
    if (ctrain->parsed()) return run_train(train_args);
    if (ceval->parsed()) return run_evaluate(eval_model, eval_data);
    if (cgap->parsed()) return run_gap(gap_args);
    if (closs->parsed()) return run_loss_curve(loss_args);
    if (cbench->parsed()) return run_bench(bench_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
