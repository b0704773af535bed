#pragma once

// Named, reproducible verification experiments: flat key=value configs,
// replicate fan-out over the worker pool, and the manifest/CSV artifacts a
// run leaves behind.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hplab/functionals.hpp"
#include "hplab/sde.hpp"
#include "hplab/stats.hpp"

namespace hplab {

inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentKind {
  kScalarBougerol,
  kPearson4Functional,
  kDufresne,
  kMatrixBougerol,
  kHuaPickrellLimit,
  kInvariance,
  kTimeReversal,
  kLyapunov,
  kExplicitSolution,
  kDensityEval,
};

const char* experiment_name(ExperimentKind kind) noexcept;
/// Throws kConfigError for unknown names.
ExperimentKind parse_experiment_kind(std::string_view name);
std::span<const ExperimentKind> all_experiments() noexcept;

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kScalarBougerol;
  int n = 1;
  double s_re = 0.0;
  double s_im = 0.0;
  double nu = 1.0;  ///< scalar experiments only
  double mu = 0.0;  ///< scalar experiments only
  double t = 1.0;
  double h = 1.0 / 4096;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;  ///< 0 = hardware concurrency; HP_LAB_THREADS wins
  double tail_eps = 1e-6;
  double tail_block = 1.0;
  double tail_max_t = 0.0;  ///< 0 = derived from the decay rate
  double alpha = kDefaultAlpha;
  double burn_in = 0.25;     ///< fraction of the horizon dropped before slope fits
  double init_h = 1.0 / 128; ///< step of the infinite functional that seeds `invariance`
  int levels = 6;            ///< step-halving levels, coarsest step = h
  double x_min = -10.0;
  double x_max = 10.0;
  std::size_t points = 201;
  std::size_t save_paths = 4;    ///< replicates written to paths.csv
  std::size_t path_points = 257; ///< max time points per saved path
  std::string out_dir = "hp-lab-out";

  static ExperimentConfig defaults(ExperimentKind kind);
  /// Parses `key = value` lines (# comments, blank lines ignored) and then
  /// `overrides` of the form key=value. The last `experiment` entry picks
  /// the defaults; every other key is applied in order on top.
  static ExperimentConfig parse(std::string_view text, std::span<const std::string> overrides = {});
  static ExperimentConfig load(const std::filesystem::path& file, std::span<const std::string> overrides = {});
  static ExperimentConfig from_entries(const std::map<std::string, std::string>& entries);

  /// Throws kConfigError for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value);
  /// Every key in canonical order with a value that parses back exactly.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;

  /// Throws kConfigError when a field is out of range for the experiment.
  void validate() const;
  bool statistical() const noexcept;
  bool infinite_horizon() const noexcept;

  ModelParams model() const { return {n, s_re, s_im}; }
  /// eps/block from the config; max_t from the config or `derived`.
  TailPolicy tail_policy(const TailPolicy& derived) const;
  std::string fingerprint() const;
};

struct SampleRow {
  std::uint64_t replicate = 0;
  std::string statistic;
  double value = 0.0;
  bool flagged = false;
};

struct PathRow {
  std::uint64_t replicate = 0;
  double t = 0.0;
  std::size_t component = 0;
  double value = 0.0;
};

struct DensityRow {
  double x = 0.0;
  double pdf = 0.0;
  double cdf = 0.0;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<TestReport> reports;
  std::vector<SampleRow> samples;
  std::vector<PathRow> paths;
  std::vector<DensityRow> density;
  std::vector<std::uint64_t> flagged_replicates;
  unsigned threads_used = 1;
  double wall_seconds = 0.0;

  bool passed() const noexcept;
};

/// Validates and runs. Errors from a replicate carry its id in the message.
RunResult run_experiment(const ExperimentConfig& config);

struct OutputDigest {
  std::string file;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config;
  std::string code_version;
  std::vector<std::uint64_t> flagged_replicates;
  double wall_seconds = 0.0;
  unsigned threads_used = 1;
  std::string verdict;
  std::vector<OutputDigest> outputs;

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
  static RunManifest load(const std::filesystem::path& file);
};

/// Writes reports.json, samples.csv, paths.csv (density.csv for density-eval)
/// and manifest.json into `dir`, creating it if needed.
RunManifest write_run(const RunResult& result, const std::filesystem::path& dir);

std::string reports_json(const RunResult& result);
std::string samples_csv(const RunResult& result);
std::string paths_csv(const RunResult& result);
std::string density_csv(const RunResult& result);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& file);

struct ReplayOutcome {
  RunManifest original;
  RunManifest replayed;
  std::vector<std::string> mismatched;  ///< files whose digests differ
  bool identical() const noexcept { return mismatched.empty(); }
};

/// Reruns the manifest's config into `dir` and compares every digest.
ReplayOutcome replay_manifest(const std::filesystem::path& manifest, const std::filesystem::path& dir);

/// 0 all verdicts pass, 1 a statistical failure, 2 usage/config error,
/// 3 numerical failure.
int exit_code_for(ErrorCode code) noexcept;

struct ExperimentInfo {
  ExperimentKind kind;
  std::string name;
  std::string statement;
  ExperimentConfig defaults;
};

std::vector<ExperimentInfo> experiment_catalog();
std::string catalog_table();
/// [{"name", "statement", "config": {key: value}}], one object per experiment.
std::string catalog_json();

/// Mean terminal |det M_T - exp(tr W_T / sqrt2 + nu N T)| per step level,
/// each replicate's coarse paths built by summing one fine path.
struct DeterminantStudy {
  std::vector<double> steps;
  std::vector<double> mean_defect;
  double slope = 0.0;
};
DeterminantStudy determinant_identity_study(const ModelParams& params, double horizon, double coarsest_h, int levels,
                                            std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

}  // namespace hplab
