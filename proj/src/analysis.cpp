#include "linprobit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linprobit/errors.hpp"
#include "linprobit/parallel.hpp"

namespace linprobit {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

EmpiricalMse summarize_column(const Eigen::MatrixXd& squared_errors,
                              int col) {
  EmpiricalMse out;
  const int trials = static_cast<int>(squared_errors.rows());
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double v = squared_errors(t, col);
    if (std::isfinite(v)) {
      sum += v;
      ++out.trials_used;
    } else {
      ++out.failures;
    }
  }
  if (out.trials_used == 0) {
    out.mean = kNan;
    out.std_error = kNan;
    return out;
  }
  out.mean = sum / out.trials_used;
  double ss = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double v = squared_errors(t, col);
    if (!std::isfinite(v)) continue;
    const double d = v - out.mean;
    ss += d * d;
  }
  const double variance = out.trials_used > 1 ? ss / (out.trials_used - 1) : 0.0;
  out.std_error = std::sqrt(variance / out.trials_used);
  return out;
}

}  // namespace

double lmmse_mse_closed_form(const Linearization& lin) {
  Eigen::LLT<Eigen::MatrixXd> llt(lin.obs_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericError(
        "lmmse_mse_closed_form: observation covariance is not positive "
        "definite");
  }
  // tr(E^T C^{-1} E) = ||L^{-1} E||_F^2 for C = L L^T.
  const Eigen::MatrixXd half =
      llt.matrixL().solve(lin.e_matrix);
  const double explained = half.squaredNorm();
  const double prior_trace = lin.prior_cov.trace();
  const double mse = prior_trace - explained;
  const double slack = 1e-8 * std::max(1.0, prior_trace);
  if (!std::isfinite(mse) || mse < -slack || mse > prior_trace + slack) {
    throw NumericError(
        "lmmse_mse_closed_form: result outside [0, tr(C_x)] beyond "
        "round-off");
  }
  return std::clamp(mse, 0.0, prior_trace);
}

double ls_mse_closed_form(const Linearization& lin) {
  const Eigen::Index m = lin.m();
  const Eigen::Index n = lin.n();
  if (m < n) {
    throw EstimatorUnavailable(
        "ls_mse_closed_form: fewer measurements than unknowns");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(lin.e_matrix);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(n - 1) <= 1e-10 * sv(0)) {
    throw EstimatorUnavailable(
        "ls_mse_closed_form: linearized matrix is rank deficient");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(lin.e_matrix);
  const Eigen::MatrixXd pseudo =
      qr.solve(Eigen::MatrixXd::Identity(m, m));  // n x m
  const Eigen::MatrixXd g = lin.prior_cov * pseudo;
  const double amplified = (g * lin.obs_cov).cwiseProduct(g).sum();
  const double mse = amplified - lin.prior_cov.trace();
  if (!std::isfinite(mse)) {
    throw NumericError("ls_mse_closed_form: non-finite result");
  }
  return mse;
}

PairedMseResult paired_empirical_mse(
    const ProbitProblem& problem,
    const std::vector<std::pair<std::uint64_t, EstimatorInvocation>>&
        estimators,
    int trials, std::uint64_t seed, std::uint64_t point_key, int threads) {
  if (trials < 2) {
    throw std::invalid_argument("paired_empirical_mse: need at least 2 trials");
  }
  if (estimators.empty()) {
    throw std::invalid_argument("paired_empirical_mse: no estimators given");
  }
  const int k = static_cast<int>(estimators.size());
  PairedMseResult out;
  out.squared_errors = Eigen::MatrixXd::Constant(trials, k, kNan);

  parallel_for_index(static_cast<std::size_t>(trials), threads,
                     [&](std::size_t t) {
    RandomStream instance_rng = RandomStream::substream(
        seed, kStreamInstance, point_key, static_cast<std::uint64_t>(t));
    const auto [signal, observation] = sample_instance(problem, instance_rng);
    for (int e = 0; e < k; ++e) {
      RandomStream est_rng = RandomStream::substream(
          seed, estimators[e].first, point_key,
          static_cast<std::uint64_t>(t));
      try {
        const EstimatorReport report =
            estimators[e].second(problem, observation, est_rng);
        if (!report.failed()) {
          out.squared_errors(static_cast<Eigen::Index>(t), e) =
              (report.estimate - signal).squaredNorm();
        }
      } catch (const EstimatorUnavailable&) {
        // recorded as a failed trial
      } catch (const NumericError&) {
        // recorded as a failed trial
      }
    }
  });

  out.per_estimator.reserve(k);
  for (int e = 0; e < k; ++e) {
    out.per_estimator.push_back(summarize_column(out.squared_errors, e));
  }
  return out;
}

EmpiricalMse empirical_mse(const ProbitProblem& problem,
                           const EstimatorInvocation& invoke, int trials,
                           std::uint64_t seed, int threads) {
  const std::vector<std::pair<std::uint64_t, EstimatorInvocation>> one = {
      {kStreamEstimatorBase, invoke}};
  const PairedMseResult paired =
      paired_empirical_mse(problem, one, trials, seed, 0, threads);
  const EmpiricalMse& mse = paired.per_estimator[0];
  if (mse.failures * 10 > trials) {
    throw NumericError("empirical_mse: more than 10% of trials failed (" +
                       std::to_string(mse.failures) + " of " +
                       std::to_string(trials) + ")");
  }
  return mse;
}

PairedDifference paired_difference(const Eigen::MatrixXd& squared_errors,
                                   int col_a, int col_b) {
  const int trials = static_cast<int>(squared_errors.rows());
  PairedDifference out;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double a = squared_errors(t, col_a);
    const double b = squared_errors(t, col_b);
    if (std::isfinite(a) && std::isfinite(b)) {
      sum += a - b;
      ++out.trials_used;
    }
  }
  if (out.trials_used == 0) {
    out.mean = kNan;
    out.std_error = kNan;
    return out;
  }
  out.mean = sum / out.trials_used;
  double ss = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double a = squared_errors(t, col_a);
    const double b = squared_errors(t, col_b);
    if (!(std::isfinite(a) && std::isfinite(b))) continue;
    const double d = (a - b) - out.mean;
    ss += d * d;
  }
  const double variance = out.trials_used > 1 ? ss / (out.trials_used - 1) : 0.0;
  out.std_error = std::sqrt(variance / out.trials_used);
  return out;
}

std::vector<SweepPoint> snr_sweep(const SyntheticConfig& base,
                                  const std::vector<double>& snr_grid_db,
                                  const std::vector<EstimatorId>& estimators,
                                  int trials, const SolverConfig& solver,
                                  int threads) {
  base.validate();
  solver.validate();
  if (snr_grid_db.empty()) {
    throw std::invalid_argument("snr_sweep: empty SNR grid");
  }
  if (estimators.empty()) {
    throw std::invalid_argument("snr_sweep: no estimators selected");
  }
  if (trials < 2) {
    throw std::invalid_argument("snr_sweep: need at least 2 trials");
  }

  RandomStream design_rng = RandomStream::substream(
      base.seed, kStreamDesign, static_cast<std::uint64_t>(base.m),
      static_cast<std::uint64_t>(base.n));
  const Eigen::MatrixXd design =
      generate_design(base.m, base.n, design_rng);

  std::vector<SweepPoint> rows;
  rows.reserve(snr_grid_db.size() * estimators.size());

  for (std::size_t p = 0; p < snr_grid_db.size(); ++p) {
    SyntheticConfig point_cfg = base;
    point_cfg.snr_db = snr_grid_db[p];
    const ProbitProblem problem = make_synthetic_problem(point_cfg, design);
    const Linearization lin = linearize(problem);

    bool ls_available = true;
    std::optional<double> ls_closed;
    try {
      ls_closed = ls_mse_closed_form(lin);
    } catch (const EstimatorUnavailable&) {
      ls_available = false;
    }

    std::vector<std::pair<std::uint64_t, EstimatorInvocation>> invocations;
    std::vector<EstimatorId> active;
    for (const EstimatorId id : estimators) {
      if (id == EstimatorId::LS && !ls_available) continue;
      const std::uint64_t key =
          kStreamEstimatorBase + static_cast<std::uint64_t>(id);
      invocations.emplace_back(
          key, [id, &problem, &lin, &solver](const ProbitProblem& prob,
                                             const ObservationVector& obs,
                                             RandomStream& rng) {
            return run_estimator(id, prob, lin, obs, solver, rng);
          });
      active.push_back(id);
    }

    PairedMseResult paired;
    if (!invocations.empty()) {
      paired = paired_empirical_mse(problem, invocations, trials, base.seed,
                                    static_cast<std::uint64_t>(p), threads);
    }

    std::size_t slot = 0;
    for (const EstimatorId id : estimators) {
      SweepPoint row;
      row.m = base.m;
      row.n = base.n;
      row.snr_db = snr_grid_db[p];
      row.estimator_id = id;
      if (id == EstimatorId::LS && !ls_available) {
        rows.push_back(row);  // all values absent
        continue;
      }
      const EmpiricalMse& mse = paired.per_estimator[slot];
      row.trials_used = mse.trials_used;
      row.failures = mse.failures;
      if (mse.trials_used > 0) {
        row.mse_empirical_mean = mse.mean;
        row.mse_empirical_std_error = mse.std_error;
      }
      if (id == EstimatorId::LMMSE) {
        row.mse_closed_form = lmmse_mse_closed_form(lin);
      } else if (id == EstimatorId::LS) {
        row.mse_closed_form = ls_closed;
      }
      rows.push_back(row);
      ++slot;
    }
  }
  return rows;
}

}  // namespace linprobit
