#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfpd/experiments.hpp"
#include "perfpd/metrics.hpp"
#include "perfpd/solver.hpp"

namespace perfpd {

/// Bad command line or config file; the CLI exits with status 2.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

const char* version_string();

/// Fully resolved description of one CLI run.
struct RunManifest {
  std::string experiment = "linreg";
  std::size_t horizon = 100000;
  std::size_t n_samples = 0;
  double epsilon = 1.0;
  double eta = 5e-3;
  double delta = 1.0;
  double xi = 0.0;  // portfolio ridge weight, equal to epsilon
  std::vector<Strategy> strategies{Strategy::Adaptive, Strategy::StablePoint, Strategy::KnownA};
  std::size_t replicas = 20;
  std::uint64_t seed = 0;
  std::size_t stride = 1;
  std::string out = "runs";
  std::string version = version_string();
  std::string status = "incomplete";
  std::string run_dir;
  std::vector<std::string> files;

  bool operator==(const RunManifest&) const = default;
};

/// Parses flags, an optional --config file and PERFPD_SEED, then fills
/// defaults. `getenv` is injectable for tests. Returns nullopt when help was
/// requested (the text goes to `help_out` if given).
std::optional<RunManifest> parse_cli(int argc, const char* const* argv,
                                     const std::function<const char*(const char*)>& getenv = nullptr,
                                     std::string* help_out = nullptr);

/// key = value text with every manifest field; read_config(write_config(m)) == m.
std::string write_config(const RunManifest& manifest);
RunManifest read_config(const std::string& text);

std::string join_strategies(const std::vector<Strategy>& strategies);
std::vector<Strategy> split_strategies(const std::string& list);

/// `t,pr,regret_rel,vio_rel,dec_dev,param_err,g_1..g_m`, 17 significant digits.
/// `constraints` sets m for an empty trajectory; otherwise it is taken from the rows.
std::string format_csv(const std::vector<TrajectoryRecord>& records, std::optional<Index> constraints = std::nullopt);
void write_csv(const std::vector<TrajectoryRecord>& records, const std::filesystem::path& path,
               std::optional<Index> constraints = std::nullopt);

std::string format_summary_csv(const ComparisonResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);

/// Builds the experiment of `manifest`, runs the comparison and writes the run
/// directory (manifest, one CSV per strategy, summary). The manifest is first
/// written as incomplete and rewritten as complete at the end.
RunManifest execute_run(RunManifest manifest);

}  // namespace perfpd
