#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "linprobit/estimators.hpp"
#include "linprobit/linearization.hpp"
#include "linprobit/model.hpp"
#include "linprobit/rng.hpp"

namespace linprobit {

/// Exact output MSE of the linear minimum mean-square estimator:
///   tr(C_x) - tr(E^T C_ybar^{-1} E).
/// Throws NumericError if the observation covariance cannot be factored or
/// the result falls outside [0, tr(C_x)] beyond round-off.
double lmmse_mse_closed_form(const Linearization& lin);

/// Exact output MSE of the least-squares estimator:
///   tr(C_x E^+ C_ybar (E^+)^T C_x) - tr(C_x).
/// Throws EstimatorUnavailable under the same conditions as ls_estimate.
double ls_mse_closed_form(const Linearization& lin);

struct EmpiricalMse {
  double mean = 0.0;
  double std_error = 0.0;
  int trials_used = 0;  // successful trials contributing to mean
  int failures = 0;
};

/// One estimator invocation on a fresh synthetic instance. The stream is
/// private to the (estimator, trial) pair.
using EstimatorInvocation = std::function<EstimatorReport(
    const ProbitProblem&, const ObservationVector&, RandomStream&)>;

/// Shared-draw evaluation of several estimators: every estimator sees the
/// same (x, y) instance in each trial, so cross-estimator comparisons are
/// paired. Row t of squared_errors holds ||x - xhat||^2 per estimator for
/// trial t, NaN where that estimator failed.
///
/// Stream splitting (thread-count independent): the instance for trial t is
/// drawn from substream(seed, kStreamInstance, point_key, t) and estimator k
/// runs with substream(seed, estimators[k].first, point_key, t).
struct PairedMseResult {
  std::vector<EmpiricalMse> per_estimator;
  Eigen::MatrixXd squared_errors;  // trials x estimators
};

// Purpose keys for substream derivation. Estimator keys are offset by the
// estimator id so adding or removing estimators never shifts another
// estimator's draws.
inline constexpr std::uint64_t kStreamDesign = 0;
inline constexpr std::uint64_t kStreamInstance = 1;
inline constexpr std::uint64_t kStreamEstimatorBase = 0x100;

PairedMseResult paired_empirical_mse(
    const ProbitProblem& problem,
    const std::vector<std::pair<std::uint64_t, EstimatorInvocation>>&
        estimators,
    int trials, std::uint64_t seed, std::uint64_t point_key, int threads = 1);

/// Monte-Carlo MSE of a single estimator. Aborts with NumericError when more
/// than 10% of trials fail; std_error is the sample standard deviation of
/// per-trial squared errors over sqrt(trials_used).
EmpiricalMse empirical_mse(const ProbitProblem& problem,
                           const EstimatorInvocation& invoke, int trials,
                           std::uint64_t seed, int threads = 1);

/// Mean and standard error of the paired difference
/// squared_errors(:, col_a) - squared_errors(:, col_b), over trials where
/// both entries are finite.
struct PairedDifference {
  double mean = 0.0;
  double std_error = 0.0;
  int trials_used = 0;
};

PairedDifference paired_difference(const Eigen::MatrixXd& squared_errors,
                                   int col_a, int col_b);

struct SweepPoint {
  int m = 0;
  int n = 0;
  double snr_db = 0.0;
  EstimatorId estimator_id = EstimatorId::LMMSE;
  std::optional<double> mse_empirical_mean;
  std::optional<double> mse_empirical_std_error;
  std::optional<double> mse_closed_form;  // LMMSE and LS only
  int trials_used = 0;
  int failures = 0;
};

/// Sweeps SNR over grid points with a single design matrix shared by all
/// points (drawn once from the base seed). Estimators run on shared draws
/// per trial. LS rows are emitted with all values absent when the problem
/// has fewer measurements than unknowns or E is rank deficient.
std::vector<SweepPoint> snr_sweep(const SyntheticConfig& base,
                                  const std::vector<double>& snr_grid_db,
                                  const std::vector<EstimatorId>& estimators,
                                  int trials,
                                  const SolverConfig& solver = SolverConfig(),
                                  int threads = 1);

}  // namespace linprobit
