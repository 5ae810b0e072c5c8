#include <catch2/catch.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "conicsvm/dataset_io.hpp"
#include "conicsvm/model_io.hpp"

namespace {

const std::string kCli = CONICSVM_CLI_PATH;
const std::string kTmp = CONICSVM_TEST_TMPDIR;

struct CliRun {
  int exit_code;
  std::string output;
};

CliRun run_cli(const std::string& args) {
  const std::string out_path = kTmp + "/cli_out.txt";
  const std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: gen-data is deterministic") {
  const std::string f1 = kTmp + "/gen1.csv", f2 = kTmp + "/gen2.csv";
  auto r1 = run_cli("gen-data --class clustered --n 50 --p 3 --sigma 0.2 --seed 7 --out " + f1);
  auto r2 = run_cli("gen-data --class clustered --n 50 --p 3 --sigma 0.2 --seed 7 --out " + f2);
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(f1) == slurp(f2));
  CHECK(!slurp(f1).empty());
}

TEST_CASE("cli: usage errors exit with code 1") {
  CHECK(run_cli("no-such-command").exit_code == 1);
  CHECK(run_cli("gen-data --unknown-flag 3 --out x.csv").exit_code == 1);
  CHECK(run_cli("train --data /does/not/exist.csv --method hinge --lambda 1 --out " + kTmp +
                "/m.json")
            .exit_code == 1);
  CHECK(run_cli("train --data " + kTmp + "/gen1.csv --method conic --out " + kTmp + "/m.json")
            .exit_code == 1);  // needs exactly one of lambda/kappa
}

TEST_CASE("cli: gap reports a near-unit big-M gap") {
  const std::string f = kTmp + "/gap_data.csv";
  REQUIRE(run_cli("gen-data --class none --n 10 --p 2 --sigma 0.5 --seed 3 --out " + f)
              .exit_code == 0);
  auto r = run_cli("gap --data " + f + " --lambda 1 --big-m 1000000");
  REQUIRE(r.exit_code == 0);
  // second line: zeta_mio,zeta_bigm,zeta_conic,gap_bigm,gap_conic
  std::stringstream ss(r.output);
  std::string header, row;
  std::getline(ss, header);
  std::getline(ss, row);
  double zmio, zbigm, zconic, gbigm, gconic;
  REQUIRE(std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf", &zmio, &zbigm, &zconic, &gbigm,
                      &gconic) == 5);
  CHECK(gbigm >= 0.99);
  CHECK(zbigm <= zconic + 1e-6);
  CHECK(zconic <= zmio + 1e-6);
}

TEST_CASE("cli: train/evaluate round trip on separable data") {
  const std::string data = kTmp + "/sep.csv";
  const std::string model = kTmp + "/sep_model.json";
  REQUIRE(run_cli("gen-data --class separable-flip --tau 0 --n 30 --p 2 --seed 11 --out " + data)
              .exit_code == 0);
  auto r = run_cli("train --data " + data + " --method conic --kappa 0.1 --out " + model);
  REQUIRE(r.exit_code == 0);
  auto ev = run_cli("evaluate --model " + model + " --data " + data);
  REQUIRE(ev.exit_code == 0);
  CHECK(std::stod(ev.output) == Approx(0.0).margin(1e-12));

  // model JSON round-trips through the library loader with identical output
  auto file = conicsvm::read_model(model);
  CHECK(file.classifier.is_linear());
  auto ev2 = run_cli("evaluate --model " + model + " --data " + data);
  CHECK(ev2.output == ev.output);
}

TEST_CASE("cli: kernel model files are self-contained") {
  const std::string data = kTmp + "/kern.csv";
  const std::string model = kTmp + "/kern_model.json";
  REQUIRE(run_cli("gen-data --class none --n 12 --p 2 --sigma 0.3 --seed 5 --out " + data)
              .exit_code == 0);
  auto r = run_cli("train --data " + data +
                   " --method conic-kernel --kernel gaussian --bandwidth 1.2 --lambda 1 --out " +
                   model);
  REQUIRE(r.exit_code == 0);
  auto ev = run_cli("evaluate --model " + model + " --data " + data);
  REQUIRE(ev.exit_code == 0);
  CHECK(std::stod(ev.output) <= 0.5);
}

TEST_CASE("cli: loss-curve emits csv samples") {
  auto r = run_cli("loss-curve --gamma 1 --lambda 1 --samples 7 --u-min -2 --u-max 2");
  REQUIRE(r.exit_code == 0);
  std::stringstream ss(r.output);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "u,conic,hinge,zero_one");
  int rows = 0;
  while (std::getline(ss, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 7);
}

TEST_CASE("cli: dump-program writes conic triplets") {
  const std::string data = kTmp + "/dump_data.csv";
  const std::string model = kTmp + "/dump_model.json";
  const std::string dump = kTmp + "/program.txt";
  REQUIRE(run_cli("gen-data --class none --n 6 --p 2 --sigma 0.3 --seed 9 --out " + data)
              .exit_code == 0);
  REQUIRE(run_cli("train --data " + data + " --method conic --lambda 1 --out " + model +
                  " --dump-program " + dump)
              .exit_code == 0);
  const std::string text = slurp(dump);
  CHECK(text.find("conicprogram 1") == 0);
  CHECK(text.find("cone psd") != std::string::npos);
  CHECK(text.find("cone rsoc") != std::string::npos);
  CHECK(text.find("\nA ") != std::string::npos);
}

TEST_CASE("cli: bench writes per-replication csv and json summary") {
  const std::string conf = kTmp + "/bench.conf";
  {
    std::ofstream out(conf);
    out << "class = none\nn = 14\np = 2\nsigma = 0.3\nreplications = 2\nseed = 1\n"
        << "grid_size = 4\ntest_size = 200\nmethods = hinge, bayes\n";
  }
  const std::string csv = kTmp + "/bench.csv", json = kTmp + "/bench.json";
  auto r = run_cli("bench --config " + conf + " --out-csv " + csv + " --out-json " + json);
  REQUIRE(r.exit_code == 0);
  const std::string rows = slurp(csv);
  CHECK(rows.find("replication,method,") == 0);
  CHECK(rows.find("hinge") != std::string::npos);
  CHECK(rows.find("bayes") != std::string::npos);
  CHECK(slurp(json).find("mean_oos_misclassification") != std::string::npos);

  // idempotent given identical config, timing column aside
  const std::string csv2 = kTmp + "/bench2.csv";
  REQUIRE(run_cli("bench --config " + conf + " --out-csv " + csv2).exit_code == 0);
  auto strip_time = [](const std::string& text) {
    std::stringstream in(text), out;
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream cells(line);
      std::string cell;
      int col = 0;
      while (std::getline(cells, cell, ',')) {
        if (col != 3) out << cell << ",";
        ++col;
      }
      out << "\n";
    }
    return out.str();
  };
  CHECK(strip_time(slurp(csv)) == strip_time(slurp(csv2)));
}
