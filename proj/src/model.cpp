#include "linprobit/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "linprobit/errors.hpp"
#include "linprobit/special.hpp"

namespace linprobit {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kEigenRatioFloor = 1e-12;

void check_symmetric(const Eigen::MatrixXd& mat, const char* name) {
  if (mat.rows() != mat.cols())
    throw std::invalid_argument(std::string(name) + " must be square");
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale)
    throw std::invalid_argument(std::string(name) + " is not symmetric");
}

bool is_diagonal(const Eigen::MatrixXd& mat) {
  for (Eigen::Index j = 0; j < mat.cols(); ++j)
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      if (i != j && mat(i, j) != 0.0) return false;
  return true;
}

// Rejects indefinite and near-singular covariances. Small matrices get the
// exact eigenvalue-ratio test; large non-diagonal ones fall back to a
// Cholesky + rcond estimate.
void check_positive_definite(const Eigen::MatrixXd& mat, const char* name) {
  const std::string label(name);
  if (is_diagonal(mat)) {
    const double lo = mat.diagonal().minCoeff();
    const double hi = mat.diagonal().maxCoeff();
    if (!(lo > 0.0) || lo < kEigenRatioFloor * hi)
      throw std::invalid_argument(label +
                                  " is not safely positive definite");
    return;
  }
  if (mat.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        mat, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || lo < kEigenRatioFloor * hi)
      throw std::invalid_argument(label +
                                  " is not safely positive definite");
    return;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(mat);
  if (llt.info() != Eigen::Success || llt.rcond() < kEigenRatioFloor)
    throw std::invalid_argument(label + " is not safely positive definite");
}

}  // namespace

ObservationVector ObservationVector::binary(Eigen::VectorXd values) {
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] != 1.0 && values[i] != -1.0)
      throw std::invalid_argument(
          "binary observation entries must be exactly +-1");
  return ObservationVector(std::move(values), ObservationKind::Binary);
}

ObservationVector ObservationVector::smoothed(Eigen::VectorXd values) {
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (!(values[i] >= -1.0 && values[i] <= 1.0))
      throw std::invalid_argument(
          "smoothed observation entries must lie in [-1, 1]");
  return ObservationVector(std::move(values), ObservationKind::Smoothed);
}

ProbitProblem::ProbitProblem(Eigen::MatrixXd design, Eigen::MatrixXd prior_cov,
                             Eigen::MatrixXd noise_cov, double smoothing)
    : design_(std::move(design)),
      prior_cov_(std::move(prior_cov)),
      noise_cov_(std::move(noise_cov)),
      smoothing_(smoothing) {
  if (design_.rows() < 1 || design_.cols() < 1)
    throw std::invalid_argument("design matrix must be nonempty");
  if (prior_cov_.rows() != design_.cols())
    throw std::invalid_argument("prior_cov dimension must match design columns");
  if (noise_cov_.rows() != design_.rows())
    throw std::invalid_argument("noise_cov dimension must match design rows");
  if (!(smoothing_ >= 0.0) || !std::isfinite(smoothing_))
    throw std::invalid_argument("smoothing must be a finite nonnegative real");

  check_symmetric(prior_cov_, "prior_cov");
  check_symmetric(noise_cov_, "noise_cov");
  check_positive_definite(prior_cov_, "prior_cov");
  check_positive_definite(noise_cov_, "noise_cov");

  for (Eigen::Index i = 0; i < design_.rows(); ++i)
    if (design_.row(i).cwiseAbs().maxCoeff() == 0.0)
      throw std::invalid_argument("design row " + std::to_string(i) +
                                  " is all zero");

  auto prior_llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(prior_cov_);
  if (prior_llt->info() != Eigen::Success)
    throw NumericError("Cholesky factorization of prior_cov failed");
  prior_chol_ = std::move(prior_llt);

  noise_diagonal_ = is_diagonal(noise_cov_);
  if (noise_diagonal_) {
    noise_sqrt_diag_ = noise_cov_.diagonal().cwiseSqrt();
  } else {
    auto noise_llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(noise_cov_);
    if (noise_llt->info() != Eigen::Success)
      throw NumericError("Cholesky factorization of noise_cov failed");
    noise_chol_ = std::move(noise_llt);
  }
}

bool ProbitProblem::noise_isotropic(double* sigma_w_sq) const {
  if (!noise_diagonal_) return false;
  const double first = noise_cov_(0, 0);
  for (Eigen::Index i = 1; i < noise_cov_.rows(); ++i) {
    if (std::abs(noise_cov_(i, i) - first) > 1e-12 * std::abs(first))
      return false;
  }
  if (sigma_w_sq) *sigma_w_sq = first;
  return true;
}

Eigen::VectorXd ProbitProblem::sample_noise(RandomStream& rng) const {
  Eigen::VectorXd g(m());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.gaussian();
  if (noise_diagonal_) return noise_sqrt_diag_.cwiseProduct(g);
  return noise_chol_->matrixL() * g;
}

double SyntheticConfig::sigma_w_sq() const {
  return sigma_x_sq * std::pow(10.0, -snr_db / 10.0);
}

void SyntheticConfig::validate() const {
  if (m < 1 || n < 1)
    throw std::invalid_argument("m and n must be positive");
  if (!(sigma_x_sq > 0.0) || !std::isfinite(sigma_x_sq))
    throw std::invalid_argument("sigma_x_sq must be a positive real");
  if (!std::isfinite(snr_db))
    throw std::invalid_argument("snr_db must be finite");
  const double sw = sigma_w_sq();
  if (!(sw > 0.0) || !std::isfinite(sw))
    throw std::invalid_argument(
        "derived noise variance is not strictly positive");
}

Eigen::MatrixXd generate_design(int m, int n, RandomStream& rng) {
  if (m < 1 || n < 1) throw std::invalid_argument("m and n must be positive");
  Eigen::MatrixXd design(m, n);
  for (Eigen::Index i = 0; i < design.rows(); ++i)
    for (Eigen::Index j = 0; j < design.cols(); ++j)
      design(i, j) = rng.gaussian();
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    double norm = design.row(i).norm();
    while (norm == 0.0) {  // probability zero, but keep the contract exact
      for (Eigen::Index j = 0; j < design.cols(); ++j)
        design(i, j) = rng.gaussian();
      norm = design.row(i).norm();
    }
    design.row(i) /= norm;
  }
  return design;
}

ProbitProblem make_synthetic_problem(const SyntheticConfig& config,
                                     const Eigen::MatrixXd& design) {
  config.validate();
  if (design.rows() != config.m || design.cols() != config.n)
    throw std::invalid_argument("design dimensions do not match config");
  Eigen::MatrixXd prior =
      config.sigma_x_sq * Eigen::MatrixXd::Identity(config.n, config.n);
  Eigen::MatrixXd noise =
      config.sigma_w_sq() * Eigen::MatrixXd::Identity(config.m, config.m);
  return ProbitProblem(design, std::move(prior), std::move(noise), 0.0);
}

std::pair<Eigen::VectorXd, ObservationVector> sample_instance(
    const ProbitProblem& problem, RandomStream& rng) {
  Eigen::VectorXd g(problem.n());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.gaussian();
  Eigen::VectorXd signal = problem.prior_chol().matrixL() * g;

  Eigen::VectorXd z = problem.design() * signal + problem.sample_noise(rng);

  if (problem.smoothing() == 0.0) {
    Eigen::VectorXd y(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) y[i] = z[i] >= 0.0 ? 1.0 : -1.0;
    return {std::move(signal), ObservationVector::binary(std::move(y))};
  }
  return {std::move(signal), ObservationVector::smoothed(smooth_forward(
                                 z, problem.smoothing()))};
}

Eigen::VectorXd smooth_forward(const Eigen::VectorXd& z, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument(
        "smooth_forward requires sigma > 0; use the sign path for sigma = 0");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out[i] = 2.0 * normal_cdf(z[i] / sigma) - 1.0;
  return out;
}

}  // namespace linprobit
