#pragma once

#include <Eigen/Dense>

#include "linprobit/model.hpp"
#include "linprobit/rng.hpp"

namespace linprobit {

/// Bussgang-optimal linearization of the (smoothed) probit model,
/// ybar = f_matrix * x + e with E[x e^T] = 0:
///
///   z_cov     C_z    = D C_x D^T + C_w
///   e_matrix  E      = sqrt(2/pi) diag(sigma^2 I + C_z)^{-1/2} D C_x
///   obs_cov   C_ybar = (2/pi) arcsin of the scaled C_z (arcsine law)
///   f_matrix  F      = E C_x^{-1}
///
/// prior_cov is carried along so estimators and MSE formulas can be
/// evaluated from the linearization alone.
struct Linearization {
  Eigen::MatrixXd e_matrix;
  Eigen::MatrixXd obs_cov;
  Eigen::MatrixXd f_matrix;
  Eigen::MatrixXd z_cov;
  Eigen::MatrixXd prior_cov;
  double smoothing = 0.0;

  Eigen::Index m() const { return e_matrix.rows(); }
  Eigen::Index n() const { return e_matrix.cols(); }
};

Eigen::MatrixXd z_covariance(const ProbitProblem& problem);

Eigen::MatrixXd e_matrix(const ProbitProblem& problem);

Eigen::MatrixXd observation_covariance(const ProbitProblem& problem);

Linearization linearize(const ProbitProblem& problem);

/// Empirical E[x e^T] with e = ybar - F x, estimated over Monte-Carlo draws.
/// Near zero when lin.f_matrix is the Bussgang gain; doubles as a
/// user-facing diagnostic for model mismatch.
Eigen::MatrixXd residual_check(const ProbitProblem& problem,
                               const Linearization& lin, long trials,
                               RandomStream& rng);

}  // namespace linprobit
