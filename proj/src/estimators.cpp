#include "linprobit/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "linprobit/errors.hpp"
#include "linprobit/special.hpp"

namespace linprobit {

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::LMMSE:
      return "lmmse";
    case EstimatorId::LS:
      return "ls";
    case EstimatorId::MAP:
      return "map";
    case EstimatorId::ML:
      return "ml";
    case EstimatorId::LogitMAP:
      return "logit-map";
    case EstimatorId::PM:
      return "pm";
  }
  return "unknown";
}

std::optional<EstimatorId> estimator_from_string(std::string_view name) {
  if (name == "lmmse") return EstimatorId::LMMSE;
  if (name == "ls") return EstimatorId::LS;
  if (name == "map") return EstimatorId::MAP;
  if (name == "ml") return EstimatorId::ML;
  if (name == "logit-map" || name == "logitmap") return EstimatorId::LogitMAP;
  if (name == "pm") return EstimatorId::PM;
  return std::nullopt;
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig.tol must be > 0");
  if (max_iter < 1)
    throw std::invalid_argument("SolverConfig.max_iter must be >= 1");
  if (gibbs_samples <= 0)
    throw std::invalid_argument("SolverConfig.gibbs_samples must be > 0");
  if (gibbs_burn_in < 0)
    throw std::invalid_argument("SolverConfig.gibbs_burn_in must be >= 0");
}

CgResult cg_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_a,
    const Eigen::VectorXd& b, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg_solve: tol must be > 0");

  CgResult out;
  out.solution = Eigen::VectorXd::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    out.iterations = 1;  // the trivial system counts as one converged pass
    out.converged = true;
    return out;
  }

  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int k = 1; k <= max_iter; ++k) {
    const Eigen::VectorXd ap = apply_a(p);
    const double p_ap = p.dot(ap);
    if (p_ap <= 0.0)
      throw NumericError(
          "cg_solve: operator is not positive definite (curvature " +
          std::to_string(p_ap) + ")");
    const double alpha = rr / p_ap;
    out.solution += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    out.iterations = k;
    out.relative_residual = std::sqrt(rr_next) / b_norm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      return out;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return out;
}

double sample_truncated_normal(double mean, bool lower_tail,
                               RandomStream& rng) {
  if (lower_tail) return -sample_truncated_normal(-mean, false, rng);

  // Draw s ~ N(0,1) | s > a with a = -mean, return mean + s.
  const double a = -mean;
  if (a <= 5.0) {
    // Inverse CDF on the upper tail; the product of small factors keeps the
    // tail probability exact instead of cancelling near 1.
    const double tail = 0.5 * std::erfc(a / 1.4142135623730951);
    const double q = tail * (1.0 - rng.uniform01());
    return mean - normal_quantile(q);
  }
  // Robert's exponential-proposal rejection sampler for the far tail.
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double s = a + rng.exponential() / lambda;
    const double d = s - lambda;
    if (rng.uniform01() <= std::exp(-0.5 * d * d)) return mean + s;
  }
}

namespace {

void check_observation(const ObservationVector& obs, Eigen::Index m,
                       bool require_binary) {
  if (obs.size() != m)
    throw std::invalid_argument("observation length does not match problem");
  if (require_binary && obs.kind() != ObservationKind::Binary)
    throw std::invalid_argument("this estimator requires binary observations");
}

Eigen::MatrixXd whitened_design(const ProbitProblem& problem) {
  if (!problem.noise_diagonal())
    throw std::invalid_argument(
        "MAP/ML/Logit-MAP require a diagonal noise covariance (whitening)");
  const Eigen::VectorXd inv_sd =
      problem.noise_cov().diagonal().cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * problem.design();
}

struct AgdOutcome {
  Eigen::VectorXd x;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  bool diverged = false;
  // No representable decrease remained before the gradient tolerance was
  // met: the iterate is at the floating-point floor of the objective.
  bool stalled = false;
};

// FISTA-style accelerated descent with backtracking line search and
// function-value restarts; the objective sequence is non-increasing.
AgdOutcome accelerated_descent(const BinaryRegressionObjective& obj,
                               Eigen::VectorXd x0, int max_iter, double tol,
                               double divergence_bound) {
  AgdOutcome out;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd y = x;
  double t_mom = 1.0;
  double lip = 1.0;
  double fx = obj.value(x);

  auto backtracked_step = [&](const Eigen::VectorXd& base, double f_base,
                              const Eigen::VectorXd& grad_base,
                              Eigen::VectorXd* next, double* f_next) {
    lip = std::max(0.9 * lip, 1e-12);
    const double g2 = grad_base.squaredNorm();
    for (int bt = 0; bt < 120; ++bt) {
      *next = base - grad_base / lip;
      *f_next = obj.value(*next);
      if (*f_next <= f_base - 0.5 * g2 / lip + 1e-12 * std::abs(f_base))
        return;
      lip *= 2.0;
    }
  };

  for (int k = 1; k <= max_iter; ++k) {
    out.iterations = k;

    const Eigen::VectorXd gx = obj.gradient(x);
    out.grad_norm = gx.norm();
    if (out.grad_norm <= tol * std::max(1.0, x.norm())) {
      out.converged = true;
      break;
    }
    if (x.norm() > divergence_bound) {
      out.diverged = true;
      break;
    }

    Eigen::VectorXd gy = obj.gradient(y);
    double fy = obj.value(y);
    Eigen::VectorXd x_next;
    double f_next;
    backtracked_step(y, fy, gy, &x_next, &f_next);

    if (f_next > fx) {
      // Momentum overshot; restart from the best iterate.
      t_mom = 1.0;
      backtracked_step(x, fx, gx, &x_next, &f_next);
      if (f_next > fx) {
        out.x = x;
        out.stalled = true;
        out.converged = true;
        return out;
      }
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    y = x_next + ((t_mom - 1.0) / t_next) * (x_next - x);
    x = std::move(x_next);
    fx = f_next;
    t_mom = t_next;
  }

  out.x = std::move(x);
  return out;
}

EstimatorReport gradient_map_estimate(const ProbitProblem& problem,
                                      const ObservationVector& observation,
                                      const SolverConfig& config,
                                      BinaryRegressionObjective::Loss loss,
                                      bool with_prior, EstimatorId id) {
  config.validate();
  check_observation(observation, problem.m(), true);

  const Eigen::MatrixXd wd = whitened_design(problem);
  BinaryRegressionObjective obj(
      wd, observation.values(), loss,
      with_prior ? problem.prior_cov() : Eigen::MatrixXd());
  AgdOutcome run =
      accelerated_descent(obj, Eigen::VectorXd::Zero(problem.n()),
                          config.max_iter, config.tol,
                          config.divergence_bound);

  bool separable = false;
  if (!with_prior && !run.diverged && run.x.norm() > 0.0) {
    // Strictly positive margins at any point prove the data separable, and
    // without a prior a separable objective has no finite minimizer. The
    // gradient stop fires on the flattening objective long before the norm
    // bound, so the norm check alone cannot catch this.
    const Eigen::VectorXd margins =
        observation.values().cwiseProduct(wd * run.x);
    separable = margins.minCoeff() > 0.0;
  }

  EstimatorReport report;
  report.estimate = std::move(run.x);
  report.estimator_id = id;
  report.diagnostics.iterations = run.iterations;
  report.diagnostics.final_residual = run.grad_norm;
  report.diagnostics.converged = run.converged && !separable;
  report.diagnostics.diverged = run.diverged || separable;
  if (separable)
    report.diagnostics.warning =
        "objective has no finite minimizer (data linearly separable)";
  else if (run.diverged)
    report.diagnostics.warning =
        "objective has no finite minimizer (divergence bound reached)";
  else if (run.stalled)
    report.diagnostics.warning =
        "stopped at the numerical floor of the objective before the "
        "gradient tolerance";
  else if (!run.converged)
    report.diagnostics.warning = "gradient solver hit max_iter";
  return report;
}

}  // namespace

BinaryRegressionObjective::BinaryRegressionObjective(
    Eigen::MatrixXd whitened_design, Eigen::VectorXd labels, Loss loss,
    Eigen::MatrixXd prior_cov)
    : loss_(loss) {
  if (labels.size() != whitened_design.rows())
    throw std::invalid_argument("labels length must match design rows");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 1.0 && labels[i] != -1.0)
      throw std::invalid_argument("labels must be +-1");
  signed_design_ = labels.asDiagonal() * whitened_design;
  if (prior_cov.size() > 0) {
    has_prior_ = true;
    prior_chol_.compute(prior_cov);
    if (prior_chol_.info() != Eigen::Success)
      throw NumericError("prior covariance is not positive definite");
  }
}

double BinaryRegressionObjective::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd t = signed_design_ * x;
  double total = 0.0;
  if (loss_ == Loss::Probit) {
    for (Eigen::Index i = 0; i < t.size(); ++i) total -= log_normal_cdf(t[i]);
  } else {
    for (Eigen::Index i = 0; i < t.size(); ++i) total += softplus(-t[i]);
  }
  if (has_prior_) total += 0.5 * x.dot(prior_chol_.solve(x));
  return total;
}

Eigen::VectorXd BinaryRegressionObjective::gradient(
    const Eigen::VectorXd& x) const {
  const Eigen::VectorXd t = signed_design_ * x;
  Eigen::VectorXd w(t.size());
  if (loss_ == Loss::Probit) {
    for (Eigen::Index i = 0; i < t.size(); ++i) w[i] = -inverse_mills(t[i]);
  } else {
    for (Eigen::Index i = 0; i < t.size(); ++i) w[i] = -logistic(-t[i]);
  }
  Eigen::VectorXd grad = signed_design_.transpose() * w;
  if (has_prior_) grad += prior_chol_.solve(x);
  return grad;
}

EstimatorReport lmmse_estimate(const Linearization& lin,
                               const ObservationVector& observation,
                               const SolverConfig& config) {
  config.validate();
  check_observation(observation, lin.m(), false);

  const Eigen::MatrixXd& cy = lin.obs_cov;
  CgResult cg = cg_solve(
      [&cy](const Eigen::VectorXd& v) -> Eigen::VectorXd { return cy * v; },
      observation.values(), config.tol, config.max_iter);

  EstimatorReport report;
  report.estimate = lin.e_matrix.transpose() * cg.solution;
  report.estimator_id = EstimatorId::LMMSE;
  report.diagnostics.iterations = cg.iterations;
  report.diagnostics.final_residual = cg.relative_residual;
  report.diagnostics.converged = cg.converged;
  if (!cg.converged)
    report.diagnostics.warning = "CG did not reach tol within max_iter";
  return report;
}

EstimatorReport ls_estimate(const Linearization& lin,
                            const ObservationVector& observation) {
  check_observation(observation, lin.m(), false);
  if (lin.m() < lin.n())
    throw EstimatorUnavailable("LS estimator does not exist for M < N");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(lin.e_matrix);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-10 * sv[0])
    throw EstimatorUnavailable(
        "LS estimator does not exist: E is rank deficient");

  // E^+ ybar by QR; never form (E^T E)^{-1}.
  const Eigen::VectorXd pseudo =
      lin.e_matrix.householderQr().solve(observation.values());

  EstimatorReport report;
  report.estimate = lin.prior_cov * pseudo;
  report.estimator_id = EstimatorId::LS;
  report.diagnostics.final_residual =
      (lin.e_matrix * pseudo - observation.values()).norm();
  return report;
}

EstimatorReport map_probit(const ProbitProblem& problem,
                           const ObservationVector& observation,
                           const SolverConfig& config) {
  return gradient_map_estimate(problem, observation, config,
                               BinaryRegressionObjective::Loss::Probit, true,
                               EstimatorId::MAP);
}

EstimatorReport ml_probit(const ProbitProblem& problem,
                          const ObservationVector& observation,
                          const SolverConfig& config) {
  return gradient_map_estimate(problem, observation, config,
                               BinaryRegressionObjective::Loss::Probit, false,
                               EstimatorId::ML);
}

EstimatorReport map_logit(const ProbitProblem& problem,
                          const ObservationVector& observation,
                          const SolverConfig& config) {
  return gradient_map_estimate(problem, observation, config,
                               BinaryRegressionObjective::Loss::Logistic, true,
                               EstimatorId::LogitMAP);
}

EstimatorReport pm_gibbs(const ProbitProblem& problem,
                         const ObservationVector& observation,
                         const SolverConfig& config, RandomStream& rng) {
  config.validate();
  check_observation(observation, problem.m(), true);
  double sigma_w_sq = 0.0;
  if (!problem.noise_isotropic(&sigma_w_sq))
    throw std::invalid_argument(
        "pm_gibbs requires isotropic noise covariance sigma_w^2 * I");

  const Eigen::Index m = problem.m();
  const Eigen::Index n = problem.n();
  const Eigen::MatrixXd dt = problem.design() / std::sqrt(sigma_w_sq);

  // x | z ~ N(A^{-1} dt^T z, A^{-1}) with A = C_x^{-1} + dt^T dt; factor once.
  Eigen::MatrixXd a =
      problem.prior_chol().solve(Eigen::MatrixXd::Identity(n, n));
  a.noalias() += dt.transpose() * dt;
  a = 0.5 * (a + a.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> a_llt(a);
  if (a_llt.info() != Eigen::Success)
    throw NumericError("pm_gibbs: posterior precision is not factorizable");

  const Eigen::VectorXd& y = observation.values();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z(m);
  Eigen::VectorXd g(n);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(n);

  const long total = config.gibbs_burn_in + config.gibbs_samples;
  for (long sweep = 0; sweep < total; ++sweep) {
    const Eigen::VectorXd mu_z = dt * x;
    for (Eigen::Index i = 0; i < m; ++i)
      z[i] = sample_truncated_normal(mu_z[i], y[i] < 0.0, rng);
    const Eigen::VectorXd mu_x = a_llt.solve(dt.transpose() * z);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = rng.gaussian();
    x = mu_x + a_llt.matrixU().solve(g);
    if (sweep >= config.gibbs_burn_in) mean_acc += x;
  }

  EstimatorReport report;
  report.estimate = mean_acc / static_cast<double>(config.gibbs_samples);
  report.estimator_id = EstimatorId::PM;
  report.diagnostics.samples_kept = config.gibbs_samples;
  report.diagnostics.burn_in = config.gibbs_burn_in;
  if (config.gibbs_samples < 100)
    report.diagnostics.warning =
        "fewer than 100 Gibbs samples; posterior mean will be noisy";
  return report;
}

EstimatorReport run_estimator(EstimatorId id, const ProbitProblem& problem,
                              const Linearization& lin,
                              const ObservationVector& observation,
                              const SolverConfig& config, RandomStream& rng) {
  switch (id) {
    case EstimatorId::LMMSE:
      return lmmse_estimate(lin, observation, config);
    case EstimatorId::LS:
      return ls_estimate(lin, observation);
    case EstimatorId::MAP:
      return map_probit(problem, observation, config);
    case EstimatorId::ML:
      return ml_probit(problem, observation, config);
    case EstimatorId::LogitMAP:
      return map_logit(problem, observation, config);
    case EstimatorId::PM:
      return pm_gibbs(problem, observation, config, rng);
  }
  throw std::invalid_argument("unknown estimator id");
}

}  // namespace linprobit
