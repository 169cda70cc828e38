#include "linprobit/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace linprobit {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t - kLogSqrt2Pi);
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / kSqrt2); }

double log_normal_cdf(double t) {
  if (t >= 6.0) {
    // Phi(t) = 1 - eps; keep precision through log1p.
    return std::log1p(-0.5 * std::erfc(t / kSqrt2));
  }
  if (t >= -30.0) {
    // erfc stays normal down to t = -30, so the direct form is exact here.
    return std::log(0.5 * std::erfc(-t / kSqrt2));
  }
  // Asymptotic expansion of Phi(t) = phi(t)/(-t) * (1 - 1/t^2 + 3/t^4 - ...),
  // equivalent to erfcx applied in the far tail.
  const double t2 = t * t;
  const double series =
      ((105.0 / t2 - 15.0) / t2 + 3.0) / (t2 * t2) - 1.0 / t2;
  return -0.5 * t2 - kLogSqrt2Pi - std::log(-t) + std::log1p(series);
}

double inverse_mills(double t) {
  const double log_pdf = -0.5 * t * t - kLogSqrt2Pi;
  return std::exp(log_pdf - log_normal_cdf(t));
}

namespace {

// Acklam's rational approximation to the normal quantile.
double acklam(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double q = std::sqrt(-2.0 * std::log1p(-p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("normal_quantile: p must lie in [0, 1]");
  }
  double x = acklam(p);
  // One Halley step against the exact CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double softplus(double u) {
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace linprobit
