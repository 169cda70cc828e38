#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "linprobit/bench.hpp"
#include "linprobit/estimators.hpp"

namespace linprobit {

enum class OutputFormat { Csv, Json };

std::string to_string(OutputFormat format);

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;
inline constexpr int kExitVerifyFailure = 4;

/// Synthetic SNR sweep settings. JSON keys: sizes, snr_grid_db, estimators,
/// trials, sigma_x_sq, seed, solver, threads, output, format. Unknown keys
/// are config errors naming the field; parse(serialize(c)) == c.
struct SweepConfig {
  std::vector<std::pair<int, int>> sizes = {{10, 5},  {10, 20}, {50, 5},
                                            {50, 20}, {200, 5}, {200, 20}};
  std::vector<double> snr_grid_db = {-20, -15, -10, -5, 0, 5, 10, 15, 20};
  std::vector<EstimatorId> estimators = {EstimatorId::LMMSE, EstimatorId::LS,
                                         EstimatorId::MAP,   EstimatorId::ML,
                                         EstimatorId::LogitMAP,
                                         EstimatorId::PM};
  int trials = 100;
  double sigma_x_sq = 1.0;
  std::uint64_t seed = 1;
  SolverConfig solver;
  int threads = 1;
  std::string output_path;  // empty writes to the stream passed to cmd_sweep
  OutputFormat format = OutputFormat::Csv;

  static SweepConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
  bool operator==(const SweepConfig&) const = default;
};

/// One dataset reference: a CSV path plus its ingestion spec (loaded from
/// spec_path when set, else the inline spec).
struct DatasetRef {
  std::string path;
  std::string spec_path;
  IngestionSpec inline_spec;
  bool has_inline_spec = false;
  bool operator==(const DatasetRef&) const = default;
};

/// Real-data benchmark settings. JSON keys: datasets, estimators, folds,
/// partitions, sigma_x_grid, seed, solver, threads, output, format.
/// Gibbs defaults are the short chain (5000 kept / 2000 burn-in).
struct BenchConfig {
  std::vector<DatasetRef> datasets;
  std::vector<EstimatorId> estimators = {EstimatorId::LMMSE, EstimatorId::LS,
                                         EstimatorId::MAP, EstimatorId::PM,
                                         EstimatorId::LogitMAP};
  int folds = 5;
  int partitions = 20;
  std::vector<double> sigma_x_grid = default_sigma_x_grid();
  std::uint64_t seed = 1;
  SolverConfig solver = SolverConfig::desk_scale();
  int threads = 1;
  std::string output_path;
  OutputFormat format = OutputFormat::Csv;

  static BenchConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
  bool operator==(const BenchConfig&) const = default;
};

/// Single-problem fit settings. JSON keys: design, observations, estimator,
/// sigma_x_sq, sigma_w_sq, smoothing, seed, solver, output. The design file
/// is a headerless numeric matrix (comma or whitespace separated), the
/// observation file one value per row; output is always JSON.
struct EstimateConfig {
  std::string design_path;
  std::string observation_path;
  EstimatorId estimator = EstimatorId::LMMSE;
  double sigma_x_sq = 1.0;
  double sigma_w_sq = 1.0;
  double smoothing = 0.0;
  std::uint64_t seed = 1;
  SolverConfig solver;
  std::string output_path;

  static EstimateConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
  bool operator==(const EstimateConfig&) const = default;
};

/// Self-check settings. JSON keys: trials, seed, threads, sabotage.
/// `sabotage` is a test hook: "e-matrix-scale" inflates the linearized
/// matrix by 10% before the closed-form checks, which must then fail.
struct VerifyConfig {
  int trials = 20000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string sabotage;

  static VerifyConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;
  bool operator==(const VerifyConfig&) const = default;
};

/// Runs the sweep and writes rows [m, n, snr_db, estimator, mse_emp_mean,
/// mse_emp_stderr, mse_closed_form, trials, failures]. Absent values are
/// empty CSV cells / JSON nulls. Output is built in memory and written in
/// one step, so a failed run leaves no partial file.
int cmd_sweep(const SweepConfig& config, std::ostream& out, std::ostream& err);

/// Runs the CV benchmark per dataset and writes rows [dataset, estimator,
/// acc_mean, acc_std, auc_mean, auc_std, sigma_x_sq_mode] with metrics at 3
/// decimals. Datasets that fail to load or run are reported on err and
/// skipped; exit 1 when any failed.
int cmd_bench(const BenchConfig& config, std::ostream& out, std::ostream& err);

/// Fits one problem read from the configured files and writes the estimate
/// as JSON with diagnostics.
int cmd_estimate(const EstimateConfig& config, std::ostream& out,
                 std::ostream& err);

/// Executes the invariant suite (closed-form vs Monte-Carlo, arcsine law,
/// residual decorrelation, gradient checks, sampler moments, determinism)
/// and prints one pass/fail line per property. Exit 0 iff all pass, else 4.
/// Tolerances scale with the Monte-Carlo standard error, so smaller trial
/// counts widen the bands instead of failing.
int cmd_verify(const VerifyConfig& config, std::ostream& out,
               std::ostream& err);

/// Headerless numeric matrix reader for cmd_estimate inputs.
Eigen::MatrixXd load_matrix_file(const std::string& path);

}  // namespace linprobit
