#pragma once
// Commands behind the hyres executable: configuration loading, run
// directories, sweeps, evaluation, kernel dumps and oracle builds.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyres/eval/metrics.hpp"
#include "hyres/train/trainer.hpp"

namespace hyres::cli {

inline constexpr int kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumeric = 3;

/// Unreadable or invalid configuration; exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates a run configuration file.
RunConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  /// Concurrent training runs.
  std::size_t jobs = 1;
  /// Reuse a seed directory whose summary matches the config hash and the
  /// library source fingerprint instead of training again.
  bool reuse = false;
  /// Progress lines, or null.
  std::ostream* log = nullptr;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  RunReport report;  // rows are empty when reused
  bool reused = false;
  std::string error;  // set when the run threw
};

/// `dir`/seed-<s>: report.csv, checkpoint.json and summary.json for one seed.
SeedResult run_seed(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& dir,
                    const Scorer& scorer, bool reuse);

/// Writes config.json into `dir`, trains every seed and writes metrics.csv.
std::vector<SeedResult> run_experiment(const RunConfig& config, const std::filesystem::path& dir,
                                       const RunOptions& options);

/// <output_dir>/<name>-<YYYYmmdd-HHMMSS>, with a numeric suffix when taken.
std::filesystem::path fresh_run_dir(const RunConfig& config);

/// 3 when any seed aborted on a non-finite value, 1 when one threw, else 0.
int exit_code(const std::vector<SeedResult>& results);

/// Model depth reported for sweeps: block count for hyres, layer count otherwise.
std::size_t model_depth(const ModelSpec& spec);

enum class SweepAxis { Depth, Collocation, ModelKind };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

/// `base` with the axis set to `value`. Collocation values set the interior
/// count and scale the boundary count by the same factor.
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, const std::string& value);

struct SweepResult {
  std::vector<MetricRecord> records;
  StudyTable table;
  std::vector<std::string> failures;  // "<cell>/seed-<s>: message"
};

/// Runs values x seeds into `dir`/<axis>-<value>/seed-<s> and writes
/// records.csv and study.csv into `dir`.
SweepResult run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                      const std::filesystem::path& dir, const RunOptions& options);

/// One CSV row per center of RBF layer `block`: coordinates, tau, mean |W|.
void dump_kernels(const Model& model, std::size_t block, std::ostream& os);

/// "key: value" evaluation summary of a model on a problem.
void evaluate(const Model& model, const PdeProblem& problem, std::ostream& os);

/// Builds or loads the cached reference solution and prints diagnostics.
void oracle_build(const std::string& problem_id, const OracleSettings& settings, std::ostream& os);

/// The command line; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hyres::cli
