#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "perfpd/report.hpp"

using namespace perfpd;
namespace fs = std::filesystem;

namespace {

std::optional<RunManifest> parse(std::vector<const char*> args, const char* env_seed = nullptr) {
  args.insert(args.begin(), "perfpd");
  auto env = [env_seed](const char* name) -> const char* {
    return std::string(name) == "PERFPD_SEED" ? env_seed : nullptr;
  };
  return parse_cli(static_cast<int>(args.size()), args.data(), env);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<TrajectoryRecord> toy_rows() {
  static const RiskOracle oracle([](const Vector& t) { return t.squaredNorm(); }, Vector::Zero(1), 0.0);
  MetricsRecorder rec(oracle, Matrix::Identity(1, 1), 3, 1);
  const EstimatorState est = EstimatorState::zero(1, 1);
  const Vector lambda = Vector::Zero(1);
  std::size_t t = 1;
  for (double th : {2.0, 1.0, 0.5}) {
    const Vector theta = Vector::Constant(1, th);
    const Vector g = Vector::Constant(1, th - 1.0);
    rec.on_iteration(IterationView{t++, theta, lambda, est, g});
  }
  return rec.records();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PERFPD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("perfpd_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("defaults are filled") {
  const auto m = parse({"--experiment", "linreg", "--epsilon", "1", "--T", "100000", "--seed", "7"});
  REQUIRE(m);
  CHECK(m->experiment == "linreg");
  CHECK(m->horizon == 100000);
  CHECK(m->n_samples == 317);
  CHECK(m->eta == 5e-3);
  CHECK(m->delta == 1.0);
  CHECK(m->seed == 7);
  CHECK(m->stride == 1);
  CHECK(m->strategies.size() == 3);
  CHECK(m->status == "incomplete");
}

TEST_CASE("portfolio ridge weight follows epsilon") {
  const auto m = parse({"--experiment", "portfolio", "--epsilon", "10"});
  REQUIRE(m);
  CHECK(m->xi == 10.0);
}

TEST_CASE("usage errors") {
  CHECK_THROWS_AS(parse({"--T", "-5"}), UsageError);
  CHECK_THROWS_AS(parse({"--strategies", ""}), UsageError);
  CHECK_THROWS_AS(parse({"--strategies", "sgd"}), UsageError);
  CHECK_THROWS_AS(parse({"--experiment", "ranking"}), UsageError);
  CHECK_THROWS_AS(parse({"--T", "abc"}), UsageError);
  CHECK_THROWS_AS(parse({"--bogus", "1"}), UsageError);
  CHECK_THROWS_AS(parse({"--eta", "0"}), UsageError);
}

TEST_CASE("seed precedence: flag, then config, then environment") {
  CHECK(parse({}, "13")->seed == 13);
  CHECK(parse({"--seed", "5"}, "13")->seed == 5);
  const fs::path dir = temp_dir("cfg");
  std::ofstream(dir / "run.cfg") << "# comment\nexperiment = portfolio\nseed = 21\nT = 400\nstrategies = apda\n";
  const std::string cfg = (dir / "run.cfg").string();
  const auto m = parse({"--config", cfg.c_str()}, "13");
  REQUIRE(m);
  CHECK(m->seed == 21);
  CHECK(m->experiment == "portfolio");
  CHECK(m->n_samples == 20);
  CHECK(m->strategies == std::vector<Strategy>{Strategy::Adaptive});
  CHECK(parse({"--config", cfg.c_str(), "--T", "900"})->n_samples == 30);
  std::ofstream(dir / "bad.cfg") << "colour = blue\n";
  const std::string bad = (dir / "bad.cfg").string();
  CHECK_THROWS_AS(parse({"--config", bad.c_str()}), UsageError);
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.experiment = "portfolio";
  m.horizon = 12345;
  m.n_samples = 111;
  m.epsilon = 0.1;
  m.eta = 1.0 / 3.0;
  m.delta = 2.5e-7;
  m.xi = 0.1;
  m.strategies = {Strategy::KnownA, Strategy::Adaptive};
  m.replicas = 4;
  m.seed = 18446744073709551615ull;
  m.stride = 3;
  m.out = "/tmp/x y";
  m.status = "complete";
  m.run_dir = "/tmp/x y/run";
  m.files = {"known-a.csv", "adaptive.csv", "summary.csv"};
  CHECK(read_config(write_config(m)) == m);
  const auto parsed = parse({"--seed", "3"});
  CHECK(read_config(write_config(*parsed)) == *parsed);
}

TEST_CASE("csv output") {
  CHECK(format_csv({}, 2) == "t,pr,regret_rel,vio_rel,dec_dev,param_err,g_1,g_2\n");
  const std::string golden = slurp(fs::path(PERFPD_FIXTURE_DIR) / "toy_trajectory.csv");
  CHECK(format_csv(toy_rows()) == golden);

  const fs::path dir = temp_dir("csv");
  write_csv(toy_rows(), dir / "a.csv");
  write_csv(toy_rows(), dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == golden);
  CHECK(slurp(dir / "b.csv") == golden);
  CHECK_THROWS_WITH_AS(write_csv(toy_rows(), dir / "missing" / "c.csv"), doctest::Contains("missing"),
                       std::runtime_error);

  std::vector<TrajectoryRecord> unordered = toy_rows();
  std::swap(unordered[0], unordered[1]);
  CHECK_THROWS_AS(format_csv(unordered), ContractViolation);
}

TEST_CASE("17 significant digits round-trip doubles") {
  auto rows = toy_rows();
  rows[0].pr = 0.1 + 0.2;
  const std::string text = format_csv(rows);
  const auto line = text.substr(text.find('\n') + 1);
  const double back = std::stod(line.substr(line.find(',') + 1));
  CHECK(back == rows[0].pr);
}

TEST_CASE("cli exit codes and run directory") {
  const fs::path dir = temp_dir("cli");
  CHECK(run_cli("--T -5") == 2);
  CHECK(run_cli("--nope") == 2);
  CHECK(run_cli("--help") == 0);
  const std::string args = "--experiment linreg --T 50 --replicas 2 --seed 4 --out " + dir.string();
  CHECK(run_cli(args) == 0);
  CHECK(run_cli(args) == 0);

  std::vector<fs::path> runs;
  for (const auto& e : fs::directory_iterator(dir)) runs.push_back(e.path());
  REQUIRE(runs.size() == 2);
  std::sort(runs.begin(), runs.end());
  for (const auto& run : runs) {
    const RunManifest m = read_config(slurp(run / "manifest.txt"));
    CHECK(m.status == "complete");
    CHECK(m.seed == 4);
    CHECK(m.n_samples == 8);
    CHECK(fs::exists(run / "summary.csv"));
    for (const char* name : {"adaptive.csv", "stable-point.csv", "known-a.csv"}) CHECK(fs::exists(run / name));
  }
  CHECK(slurp(runs[0] / "adaptive.csv") == slurp(runs[1] / "adaptive.csv"));
  const std::string csv = slurp(runs[0] / "adaptive.csv");
  CHECK(csv.back() == '\n');
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);

  const std::string fail = "--experiment portfolio --epsilon 10 --T 0 --n-samples 1 --out /proc/forbidden";
  CHECK(run_cli(fail) == 1);
}
