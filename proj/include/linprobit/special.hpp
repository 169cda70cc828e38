#pragma once

namespace linprobit {

/// Standard normal density.
double normal_pdf(double t);

/// Standard normal CDF Phi(t).
double normal_cdf(double t);

/// log Phi(t), stable over the full double range. Deep-tail arguments
/// (t < -30) are evaluated through the asymptotic expansion of the scaled
/// complementary error function so no intermediate underflows.
double log_normal_cdf(double t);

/// Inverse Mills ratio phi(t)/Phi(t), evaluated in log space so it neither
/// overflows for t << 0 nor loses precision for t >> 0.
double inverse_mills(double t);

/// Quantile of the standard normal distribution. Accurate to ~1e-15 via the
/// Acklam rational approximation plus one Halley refinement.
double normal_quantile(double p);

/// log(1 + exp(u)) without overflow.
double softplus(double u);

/// Logistic function 1 / (1 + exp(-u)).
double logistic(double u);

}  // namespace linprobit
