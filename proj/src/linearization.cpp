#include "linprobit/linearization.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "linprobit/errors.hpp"

namespace linprobit {

namespace {
constexpr double kTwoOverPi = 0.6366197723675814;
constexpr double kArcsinClampTol = 1e-10;
}  // namespace

Eigen::MatrixXd z_covariance(const ProbitProblem& problem) {
  const Eigen::MatrixXd dcx = problem.design() * problem.prior_cov();
  Eigen::MatrixXd cz = dcx * problem.design().transpose() + problem.noise_cov();
  // Symmetrize away the last-bit asymmetry of the triple product.
  cz = 0.5 * (cz + cz.transpose()).eval();
  return cz;
}

Eigen::MatrixXd e_matrix(const ProbitProblem& problem) {
  const Eigen::MatrixXd dcx = problem.design() * problem.prior_cov();
  const Eigen::MatrixXd cz = z_covariance(problem);
  const double s2 = problem.smoothing() * problem.smoothing();
  Eigen::MatrixXd e = dcx;
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    e.row(i) *= std::sqrt(kTwoOverPi / (s2 + cz(i, i)));
  return e;
}

Eigen::MatrixXd observation_covariance(const ProbitProblem& problem) {
  const Eigen::MatrixXd cz = z_covariance(problem);
  const double s2 = problem.smoothing() * problem.smoothing();

  Eigen::VectorXd inv_scale(cz.rows());
  for (Eigen::Index i = 0; i < cz.rows(); ++i)
    inv_scale[i] = 1.0 / std::sqrt(s2 + cz(i, i));

  Eigen::MatrixXd cy(cz.rows(), cz.cols());
  for (Eigen::Index j = 0; j < cz.cols(); ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      double rho = cz(i, j) * inv_scale[i] * inv_scale[j];
      if (std::abs(rho) > 1.0 + kArcsinClampTol)
        throw NumericError(
            "observation_covariance: correlation " + std::to_string(rho) +
            " at (" + std::to_string(i) + "," + std::to_string(j) +
            ") implies an inconsistent covariance input");
      rho = std::clamp(rho, -1.0, 1.0);
      const double val = (i == j && s2 == 0.0)
                             ? 1.0  // Var(sign) = 1 identically
                             : kTwoOverPi * std::asin(rho);
      cy(i, j) = val;
      cy(j, i) = val;
    }
  }
  return cy;
}

Linearization linearize(const ProbitProblem& problem) {
  Linearization lin;
  lin.z_cov = z_covariance(problem);
  lin.prior_cov = problem.prior_cov();
  lin.smoothing = problem.smoothing();

  const double s2 = problem.smoothing() * problem.smoothing();
  const Eigen::MatrixXd dcx = problem.design() * problem.prior_cov();
  lin.e_matrix = dcx;
  Eigen::VectorXd inv_scale(lin.z_cov.rows());
  for (Eigen::Index i = 0; i < lin.z_cov.rows(); ++i) {
    inv_scale[i] = 1.0 / std::sqrt(s2 + lin.z_cov(i, i));
    lin.e_matrix.row(i) *= std::sqrt(kTwoOverPi) * inv_scale[i];
  }

  Eigen::MatrixXd cy(lin.z_cov.rows(), lin.z_cov.cols());
  for (Eigen::Index j = 0; j < lin.z_cov.cols(); ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      double rho = lin.z_cov(i, j) * inv_scale[i] * inv_scale[j];
      if (std::abs(rho) > 1.0 + kArcsinClampTol)
        throw NumericError(
            "linearize: correlation " + std::to_string(rho) + " at (" +
            std::to_string(i) + "," + std::to_string(j) +
            ") implies an inconsistent covariance input");
      rho = std::clamp(rho, -1.0, 1.0);
      const double val =
          (i == j && s2 == 0.0) ? 1.0 : kTwoOverPi * std::asin(rho);
      cy(i, j) = val;
      cy(j, i) = val;
    }
  }
  lin.obs_cov = std::move(cy);

  // F = E C_x^{-1} through the prior's Cholesky factor, not an inverse.
  lin.f_matrix =
      problem.prior_chol().solve(lin.e_matrix.transpose()).transpose();
  return lin;
}

Eigen::MatrixXd residual_check(const ProbitProblem& problem,
                               const Linearization& lin, long trials,
                               RandomStream& rng) {
  if (trials < 10000)
    throw std::invalid_argument("residual_check requires trials >= 10^4");
  if (lin.m() != problem.m() || lin.n() != problem.n())
    throw std::invalid_argument("linearization does not match problem");

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(problem.n(), problem.m());
  for (long t = 0; t < trials; ++t) {
    auto [signal, obs] = sample_instance(problem, rng);
    const Eigen::VectorXd e = obs.values() - lin.f_matrix * signal;
    acc.noalias() += signal * e.transpose();
  }
  return acc / static_cast<double>(trials);
}

}  // namespace linprobit
