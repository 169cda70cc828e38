#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "linprobit/linearization.hpp"
#include "linprobit/model.hpp"
#include "linprobit/rng.hpp"

namespace linprobit {

enum class EstimatorId { LMMSE, LS, MAP, ML, LogitMAP, PM };

std::string to_string(EstimatorId id);
std::optional<EstimatorId> estimator_from_string(std::string_view name);

struct Diagnostics {
  std::optional<int> iterations;
  std::optional<double> final_residual;
  std::optional<long> samples_kept;
  std::optional<long> burn_in;
  bool converged = true;
  bool diverged = false;
  std::string warning;
};

struct EstimatorReport {
  Eigen::VectorXd estimate;
  EstimatorId estimator_id = EstimatorId::LMMSE;
  Diagnostics diagnostics;

  /// True when the estimate is unusable (divergence or non-finite entries);
  /// hitting an iteration cap with a finite estimate is flagged but not
  /// counted as failure.
  bool failed() const {
    return diagnostics.diverged || !estimate.allFinite();
  }
};

/// Solver knobs. Defaults mirror the synthetic protocol: Gibbs keeps 50,000
/// samples after a 20,000-sweep burn-in, gradient methods run to tol with at
/// most 20,000 iterations.
struct SolverConfig {
  int max_iter = 20000;
  double tol = 1e-10;
  long gibbs_samples = 50000;
  long gibbs_burn_in = 20000;
  double divergence_bound = 1e6;

  /// CI-scale settings: Gibbs shortened to 5,000 kept / 2,000 burn-in.
  static SolverConfig desk_scale() {
    SolverConfig cfg;
    cfg.gibbs_samples = 5000;
    cfg.gibbs_burn_in = 2000;
    return cfg;
  }

  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct CgResult {
  Eigen::VectorXd solution;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients on a symmetric positive definite operator. Stops when
/// ||Ax - b|| / ||b|| <= tol; detecting nonpositive curvature raises
/// NumericError.
CgResult cg_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_a,
    const Eigen::VectorXd& b, double tol, int max_iter);

/// One draw from N(mean, 1) restricted to the negative (lower_tail) or
/// positive half-line. Inverse-CDF for moderate means, exponential-proposal
/// rejection once the constraint pushes |mean| past 5.
double sample_truncated_normal(double mean, bool lower_tail, RandomStream& rng);

/// x_hat = E^T C_ybar^{-1} ybar, with the inner system solved by CG.
EstimatorReport lmmse_estimate(const Linearization& lin,
                               const ObservationVector& observation,
                               const SolverConfig& config = {});

/// x_hat = C_x E^+ ybar via QR. Throws EstimatorUnavailable when M < N or E
/// is rank deficient (smallest singular value below 1e-10 of the largest).
EstimatorReport ls_estimate(const Linearization& lin,
                            const ObservationVector& observation);

/// Probit MAP: minimizes -sum log Phi(y_m d_m^T x) + x^T C_x^{-1} x / 2 over
/// the noise-whitened design by accelerated gradient descent with
/// backtracking and function-value restarts.
EstimatorReport map_probit(const ProbitProblem& problem,
                           const ObservationVector& observation,
                           const SolverConfig& config = {});

/// Probit ML (no prior). Separable data have no finite minimizer; the run is
/// flagged diverged once ||x|| exceeds config.divergence_bound.
EstimatorReport ml_probit(const ProbitProblem& problem,
                          const ObservationVector& observation,
                          const SolverConfig& config = {});

/// Logistic-noise MAP with the same solver and stopping contract.
EstimatorReport map_logit(const ProbitProblem& problem,
                          const ObservationVector& observation,
                          const SolverConfig& config = {});

/// Posterior mean by Albert-Chib data augmentation (truncated-normal latent
/// sweep + Gaussian x-update). Requires binary observations and isotropic
/// noise; the x-update covariance is factored once per call.
EstimatorReport pm_gibbs(const ProbitProblem& problem,
                         const ObservationVector& observation,
                         const SolverConfig& config, RandomStream& rng);

/// Negative log-posterior of the whitened binary regression model; exposes
/// value/gradient so finite-difference checks can run against the exact same
/// code path the solvers use.
class BinaryRegressionObjective {
 public:
  enum class Loss { Probit, Logistic };

  /// labels must be +-1; prior_cov may be empty (0x0) for the ML objective.
  BinaryRegressionObjective(Eigen::MatrixXd whitened_design,
                            Eigen::VectorXd labels, Loss loss,
                            Eigen::MatrixXd prior_cov);

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::Index dim() const { return signed_design_.cols(); }

 private:
  Eigen::MatrixXd signed_design_;  // row m = y_m * whitened d_m
  Loss loss_;
  bool has_prior_ = false;
  Eigen::LLT<Eigen::MatrixXd> prior_chol_;
};

/// Uniform dispatch for the sweep/benchmark harnesses; `lin` is reused across
/// calls since it depends only on the problem, not the observation.
EstimatorReport run_estimator(EstimatorId id, const ProbitProblem& problem,
                              const Linearization& lin,
                              const ObservationVector& observation,
                              const SolverConfig& config, RandomStream& rng);

}  // namespace linprobit
