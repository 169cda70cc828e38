#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "linprobit/estimators.hpp"

namespace linprobit {

struct Dataset {
  std::string name;
  Eigen::MatrixXd features;  // M x N, fully numeric
  Eigen::VectorXd labels;    // entries +-1, both classes present
  std::vector<std::string> feature_names;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
  void validate() const;
};

/// How a CSV file maps onto a Dataset. Parsed from JSON with keys
/// label_column (required), positive_value (required), add_intercept
/// (optional, default false), drop_columns (optional, default empty);
/// any other key is rejected by name.
struct IngestionSpec {
  std::string label_column;
  std::string positive_value;
  bool add_intercept = false;
  std::vector<std::string> drop_columns;

  static IngestionSpec from_json_text(const std::string& text);
  static IngestionSpec from_json_file(const std::string& path);
  bool operator==(const IngestionSpec&) const = default;
};

/// Reads a CSV file (UTF-8, header row required, optional double-quoted
/// fields) under the ingestion spec. A label cell equal to positive_value
/// maps to +1, every other value to -1; numeric cells compare numerically so
/// "1" matches "1.0". Missing values, non-numeric feature cells, duplicate
/// or unknown column names, and single-class labels are distinct load
/// errors naming the offending row or column.
Dataset load_dataset(const std::string& path, const IngestionSpec& spec);

struct CvPlan {
  int folds = 5;
  int partitions = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Per partition: a fresh random permutation of 0..m-1 chopped into
/// near-equal test blocks (sizes differ by at most 1). Deterministic under
/// plan.seed; the permutation for partition p comes from
/// substream(seed, kStreamPartition, p).
std::vector<std::vector<FoldSplit>> kfold_split(int m, const CvPlan& plan);

/// Picks the prior variance maximizing inner-validation accuracy. The inner
/// validation set is the last 25% of a seeded shuffle of the training fold;
/// ties break toward the smaller variance. Grid points whose fit fails are
/// disqualified; if none survive, throws EstimatorUnavailable.
/// cell_key identifies the (partition, fold) cell for stream derivation.
double grid_search_sigma_x(const Eigen::MatrixXd& train_features,
                           const Eigen::VectorXd& train_labels,
                           EstimatorId estimator_id,
                           const std::vector<double>& grid,
                           const SolverConfig& solver, std::uint64_t seed,
                           std::uint64_t cell_key);

/// Fraction of samples with sign(score) = label, sign(0) = +1.
double evaluate_acc(const Eigen::VectorXd& scores,
                    const Eigen::VectorXd& labels);

/// Mann-Whitney AUC with midrank tie handling, O(M log M). Throws when only
/// one class is present.
double evaluate_auc(const Eigen::VectorXd& scores,
                    const Eigen::VectorXd& labels);

struct BenchResult {
  std::string dataset;
  EstimatorId estimator_id = EstimatorId::LMMSE;
  bool available = true;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double auc_mean = 0.0;
  double auc_std = 0.0;
  double chosen_sigma_x_sq = 0.0;  // modal grid choice across cells
};

/// Default prior-variance grid: 9 points log-spaced in [1e-2, 1e2].
std::vector<double> default_sigma_x_grid();

/// Cross-validated benchmark of the selected estimators on one dataset.
/// Per (partition, fold): standardize features on training-fold statistics
/// (columns that are constant on the training fold pass through unchanged),
/// grid-search sigma_x^2 on an inner split, refit on the full training fold
/// at the chosen value with sigma_w^2 = 1, and score the test fold by d^T
/// x_hat. Partition ACC/AUC is the mean over folds; reported mean/std are
/// over partitions. An estimator that is inapplicable anywhere (LS with
/// train M < N, or a failed refit) is reported with available = false.
std::vector<BenchResult> run_benchmark(const Dataset& dataset,
                                       const std::vector<EstimatorId>& estimators,
                                       const CvPlan& plan,
                                       const std::vector<double>& grid,
                                       const SolverConfig& solver = SolverConfig::desk_scale(),
                                       int threads = 1);

// Stream purpose keys (seed space is the CvPlan seed, separate from sweeps).
inline constexpr std::uint64_t kStreamPartition = 0x10;
inline constexpr std::uint64_t kStreamInnerSplit = 0x11;
inline constexpr std::uint64_t kStreamGridFit = 0x12;
inline constexpr std::uint64_t kStreamFinalFit = 0x13;

}  // namespace linprobit
