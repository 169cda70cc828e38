#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <utility>

#include "linprobit/rng.hpp"

namespace linprobit {

enum class ObservationKind { Binary, Smoothed };

/// Vector of binary (+-1) or smoothed ([-1, 1]) measurements.
class ObservationVector {
 public:
  static ObservationVector binary(Eigen::VectorXd values);
  static ObservationVector smoothed(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  ObservationKind kind() const { return kind_; }
  Eigen::Index size() const { return values_.size(); }

 private:
  ObservationVector(Eigen::VectorXd values, ObservationKind kind)
      : values_(std::move(values)), kind_(kind) {}

  Eigen::VectorXd values_;
  ObservationKind kind_;
};

/// The (smoothed) probit measurement model: observations arise as
/// sign(design * x + w) for smoothing = 0 and as the sigmoid-transformed
/// image otherwise, with x ~ N(0, prior_cov) and w ~ N(0, noise_cov).
///
/// Immutable after construction; both covariances are validated to be
/// symmetric and safely positive definite (near-singular inputs are
/// rejected, not regularized). Cholesky factors are cached for reuse.
class ProbitProblem {
 public:
  ProbitProblem(Eigen::MatrixXd design, Eigen::MatrixXd prior_cov,
                Eigen::MatrixXd noise_cov, double smoothing = 0.0);

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::MatrixXd& prior_cov() const { return prior_cov_; }
  const Eigen::MatrixXd& noise_cov() const { return noise_cov_; }
  double smoothing() const { return smoothing_; }
  Eigen::Index m() const { return design_.rows(); }
  Eigen::Index n() const { return design_.cols(); }

  const Eigen::LLT<Eigen::MatrixXd>& prior_chol() const { return *prior_chol_; }

  /// True when noise_cov is diagonal; MAP/ML/Logit-MAP whitening requires it.
  bool noise_diagonal() const { return noise_diagonal_; }
  /// True when noise_cov = sigma_w^2 * I; the Gibbs sampler requires it.
  bool noise_isotropic(double* sigma_w_sq = nullptr) const;

  /// Draws an M-vector from N(0, noise_cov).
  Eigen::VectorXd sample_noise(RandomStream& rng) const;

 private:
  Eigen::MatrixXd design_;
  Eigen::MatrixXd prior_cov_;
  Eigen::MatrixXd noise_cov_;
  double smoothing_;
  bool noise_diagonal_ = false;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> prior_chol_;
  // Dense factor kept only for non-diagonal noise.
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> noise_chol_;
  Eigen::VectorXd noise_sqrt_diag_;
};

/// Synthetic experiment configuration: C_x = sigma_x_sq * I_n and isotropic
/// noise with variance derived from the SNR in dB.
struct SyntheticConfig {
  int m = 50;
  int n = 5;
  double sigma_x_sq = 1.0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;

  double sigma_w_sq() const;
  void validate() const;
};

/// i.i.d. standard normal matrix with each row scaled to unit l2-norm.
Eigen::MatrixXd generate_design(int m, int n, RandomStream& rng);

/// Row-normalized design for `config` plus isotropic covariances; the sign
/// model (smoothing = 0).
ProbitProblem make_synthetic_problem(const SyntheticConfig& config,
                                     const Eigen::MatrixXd& design);

/// Draws (x, y) from the generative model. Binary observations for
/// smoothing = 0 (sign(0) = +1), smoothed observations otherwise.
std::pair<Eigen::VectorXd, ObservationVector> sample_instance(
    const ProbitProblem& problem, RandomStream& rng);

/// Elementwise 2*Phi(z/sigma) - 1; requires sigma > 0.
Eigen::VectorXd smooth_forward(const Eigen::VectorXd& z, double sigma);

}  // namespace linprobit
