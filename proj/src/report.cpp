#include "perfpd/report.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifndef PERFPD_VERSION
#define PERFPD_VERSION "0.0.0"
#endif

namespace perfpd {

const char* version_string() { return PERFPD_VERSION; }

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& list, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(list);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw UsageError("invalid number for '" + key + "': '" + value + "'");
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  if (!value.empty() && value.front() == '-') throw UsageError("'" + key + "' must be nonnegative, got " + value);
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw UsageError("invalid integer for '" + key + "': '" + value + "'");
  return out;
}

using Pairs = std::vector<std::pair<std::string, std::string>>;

Pairs parse_pairs(const std::string& text) {
  Pairs out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(number) + ": expected key = value");
    out.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return out;
}

void apply_pair(RunManifest& m, const std::string& key, const std::string& value) {
  if (key == "experiment") {
    m.experiment = value;
  } else if (key == "T") {
    m.horizon = parse_unsigned(key, value);
  } else if (key == "n-samples") {
    m.n_samples = parse_unsigned(key, value);
  } else if (key == "epsilon") {
    m.epsilon = parse_double(key, value);
  } else if (key == "eta") {
    m.eta = parse_double(key, value);
  } else if (key == "delta") {
    m.delta = parse_double(key, value);
  } else if (key == "xi") {
    m.xi = parse_double(key, value);
  } else if (key == "strategies") {
    m.strategies = split_strategies(value);
  } else if (key == "replicas") {
    m.replicas = parse_unsigned(key, value);
  } else if (key == "seed") {
    m.seed = parse_unsigned(key, value);
  } else if (key == "stride") {
    m.stride = parse_unsigned(key, value);
  } else if (key == "out") {
    m.out = value;
  } else if (key == "version") {
    m.version = value;
  } else if (key == "status") {
    m.status = value;
  } else if (key == "run_dir") {
    m.run_dir = value;
  } else if (key == "files") {
    m.files = split(value, ',');
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

void validate(const RunManifest& m) {
  if (m.experiment != "linreg" && m.experiment != "portfolio")
    throw UsageError("experiment must be 'linreg' or 'portfolio', got '" + m.experiment + "'");
  if (m.strategies.empty()) throw UsageError("strategy list is empty");
  if (m.n_samples == 0) throw UsageError("n-samples must be positive");
  if (m.epsilon < 0.0) throw UsageError("epsilon must be nonnegative");
  if (m.eta <= 0.0) throw UsageError("eta must be positive");
  if (m.delta < 0.0) throw UsageError("delta must be nonnegative");
  if (m.replicas == 0) throw UsageError("replicas must be positive");
  if (m.stride == 0) throw UsageError("stride must be positive");
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

std::string join_strategies(const std::vector<Strategy>& strategies) {
  std::string out;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (i > 0) out += ',';
    out += to_string(strategies[i]);
  }
  return out;
}

std::vector<Strategy> split_strategies(const std::string& list) {
  std::vector<Strategy> out;
  for (const auto& name : split(list, ',')) {
    try {
      const Strategy s = parse_strategy(name);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("strategy list is empty");
  return out;
}

std::string write_config(const RunManifest& m) {
  std::ostringstream out;
  out << "# perfpd run manifest\n";
  out << "experiment = " << m.experiment << '\n';
  out << "T = " << m.horizon << '\n';
  out << "n-samples = " << m.n_samples << '\n';
  out << "epsilon = " << format_double(m.epsilon) << '\n';
  out << "eta = " << format_double(m.eta) << '\n';
  out << "delta = " << format_double(m.delta) << '\n';
  out << "xi = " << format_double(m.xi) << '\n';
  out << "strategies = " << join_strategies(m.strategies) << '\n';
  out << "replicas = " << m.replicas << '\n';
  out << "seed = " << m.seed << '\n';
  out << "stride = " << m.stride << '\n';
  out << "out = " << m.out << '\n';
  out << "version = " << m.version << '\n';
  out << "status = " << m.status << '\n';
  out << "run_dir = " << m.run_dir << '\n';
  out << "files = ";
  for (std::size_t i = 0; i < m.files.size(); ++i) out << (i > 0 ? "," : "") << m.files[i];
  out << '\n';
  return out.str();
}

RunManifest read_config(const std::string& text) {
  RunManifest m;
  for (const auto& [key, value] : parse_pairs(text)) apply_pair(m, key, value);
  return m;
}

std::optional<RunManifest> parse_cli(int argc, const char* const* argv,
                                     const std::function<const char*(const char*)>& getenv, std::string* help_out) {
  CLI::App app{"Adaptive primal-dual solver for constrained performative prediction"};
  app.set_version_flag("--version", std::string(version_string()));

  std::string experiment, strategies, out, config;
  long long horizon = 0, n_samples = 0, replicas = 0, stride = 0;
  std::uint64_t seed = 0;
  double epsilon = 0.0, eta = 0.0, delta = 0.0;

  auto* o_exp = app.add_option("--experiment", experiment, "linreg or portfolio");
  auto* o_t = app.add_option("--T", horizon, "number of iterations");
  auto* o_n = app.add_option("--n-samples", n_samples, "base pool size (default ceil(sqrt(T)))");
  auto* o_eps = app.add_option("--epsilon", epsilon, "sensitivity sigma_max(A)");
  auto* o_eta = app.add_option("--eta", eta, "primal-dual step size");
  auto* o_delta = app.add_option("--delta", delta, "dual regularization");
  auto* o_str = app.add_option("--strategies", strategies, "comma list of adaptive, stable-point, known-a");
  auto* o_rep = app.add_option("--replicas", replicas, "independent seeded replicas");
  auto* o_seed = app.add_option("--seed", seed, "master seed (fallback: PERFPD_SEED)");
  auto* o_stride = app.add_option("--stride", stride, "record every stride-th iteration");
  auto* o_out = app.add_option("--out", out, "parent directory of the run directory");
  auto* o_cfg = app.add_option("--config", config, "key = value file with the same keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    if (help_out) *help_out = app.help();
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    if (help_out) *help_out = std::string(version_string()) + "\n";
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunManifest m;
  std::set<std::string> given;
  if (o_cfg->count() > 0) {
    std::ifstream in(config);
    if (!in) throw UsageError("cannot read config file '" + config + "'");
    std::stringstream text;
    text << in.rdbuf();
    for (const auto& [key, value] : parse_pairs(text.str())) {
      apply_pair(m, key, value);
      given.insert(key);
    }
  }

  if (o_seed->count() == 0 && given.count("seed") == 0) {
    const char* env = getenv ? getenv("PERFPD_SEED") : std::getenv("PERFPD_SEED");
    if (env != nullptr && *env != '\0') {
      m.seed = parse_unsigned("PERFPD_SEED", env);
      given.insert("seed");
    }
  }

  auto nonnegative = [](long long v, const char* name) {
    if (v < 0) throw UsageError(std::string("--") + name + " must be nonnegative, got " + std::to_string(v));
    return static_cast<std::size_t>(v);
  };
  if (o_exp->count()) m.experiment = experiment, given.insert("experiment");
  if (o_t->count()) m.horizon = nonnegative(horizon, "T"), given.insert("T");
  if (o_n->count()) m.n_samples = nonnegative(n_samples, "n-samples"), given.insert("n-samples");
  if (o_eps->count()) m.epsilon = epsilon, given.insert("epsilon");
  if (o_eta->count()) m.eta = eta;
  if (o_delta->count()) m.delta = delta;
  if (o_str->count()) m.strategies = split_strategies(strategies);
  if (o_rep->count()) m.replicas = nonnegative(replicas, "replicas");
  if (o_seed->count()) m.seed = seed;
  if (o_stride->count()) m.stride = nonnegative(stride, "stride"), given.insert("stride");
  if (o_out->count()) m.out = out;

  if (given.count("n-samples") == 0)
    m.n_samples = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m.horizon)))));
  if (given.count("stride") == 0) m.stride = default_stride(m.horizon);
  m.xi = m.experiment == "portfolio" ? m.epsilon : 0.0;
  m.version = version_string();
  m.status = "incomplete";
  m.run_dir.clear();
  m.files.clear();
  validate(m);
  return m;
}

std::string format_csv(const std::vector<TrajectoryRecord>& records, std::optional<Index> constraints) {
  const Index m = !records.empty() ? records.front().g.size() : constraints.value_or(0);
  std::string out = "t,pr,regret_rel,vio_rel,dec_dev,param_err";
  for (Index i = 1; i <= m; ++i) out += ",g_" + std::to_string(i);
  out += '\n';
  std::size_t previous = 0;
  for (const auto& row : records) {
    require(row.g.size() == m, "trajectory rows have different constraint counts");
    require(row.t > previous, "trajectory rows must be in ascending t");
    previous = row.t;
    out += std::to_string(row.t);
    for (double v : {row.pr, row.regret_rel, row.vio_rel, row.dec_dev, row.param_err}) out += ',' + format_double(v);
    for (Index i = 0; i < m; ++i) out += ',' + format_double(row.g[i]);
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_csv(const std::vector<TrajectoryRecord>& records, const std::filesystem::path& path,
               std::optional<Index> constraints) {
  write_text(path, format_csv(records, constraints));
}

std::string format_summary_csv(const ComparisonResult& result) {
  Index m = 0;
  for (const auto& s : result.strategies) m = std::max(m, s.mean_summary.violation.size());
  std::string out = "strategy,T,replicas,regret,regret_per_t,dec_dev,param_err,queries";
  for (Index i = 1; i <= m; ++i) out += ",vio_" + std::to_string(i);
  out += '\n';
  for (const auto& s : result.strategies) {
    const RunSummary& sum = s.mean_summary;
    const double t = static_cast<double>(std::max<std::size_t>(1, sum.horizon));
    out += to_string(s.strategy) + ',' + std::to_string(sum.horizon) + ',' + std::to_string(s.replicas.size());
    for (double v : {sum.regret, sum.regret / t, sum.final_dec_dev, sum.final_param_err}) out += ',' + format_double(v);
    out += ',' + std::to_string(sum.queries);
    for (Index i = 0; i < m; ++i) out += ',' + format_double(i < sum.violation.size() ? sum.violation[i] : 0.0);
    out += '\n';
  }
  return out;
}

RunManifest execute_run(RunManifest manifest) {
  validate(manifest);
  namespace fs = std::filesystem;
  const fs::path parent(manifest.out);
  fs::create_directories(parent);
  const std::string stem = timestamp() + "-seed" + std::to_string(manifest.seed);
  fs::path dir = parent / stem;
  for (int suffix = 1; fs::exists(dir); ++suffix) dir = parent / (stem + "-" + std::to_string(suffix));
  fs::create_directories(dir);

  manifest.run_dir = dir.string();
  manifest.status = "incomplete";
  manifest.files.clear();
  write_text(dir / "manifest.txt", write_config(manifest));

  const ExperimentInstance experiment = manifest.experiment == "portfolio"
                                            ? build_portfolio(manifest.seed, manifest.epsilon)
                                            : build_linreg(manifest.seed, manifest.epsilon);
  ComparisonConfig config;
  config.strategies = manifest.strategies;
  config.horizon = manifest.horizon;
  config.pool_size = manifest.n_samples;
  config.replicas = manifest.replicas;
  config.seed = manifest.seed;
  config.eta = manifest.eta;
  config.delta = manifest.delta;
  config.stride = manifest.stride;
  const ComparisonResult result = run_comparison(experiment, config);

  const Index m = experiment.problem.constraints->count();
  for (const auto& s : result.strategies) {
    const std::string name = to_string(s.strategy) + ".csv";
    write_csv(s.mean, dir / name, m);
    manifest.files.push_back(name);
  }
  write_text(dir / "summary.csv", format_summary_csv(result));
  manifest.files.push_back("summary.csv");
  manifest.status = "complete";
  write_text(dir / "manifest.txt", write_config(manifest));
  return manifest;
}

}  // namespace perfpd
