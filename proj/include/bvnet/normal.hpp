#ifndef BVNET_NORMAL_HPP
#define BVNET_NORMAL_HPP

// Standard normal density, distribution, log-distribution, inverse Mills
// ratio and quantile, evaluated so that the probit likelihood and its score
// stay finite and accurate far into both tails.

#include <cmath>
#include <limits>
#include <numbers>

namespace bvnet::normal {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double pdf(double z) {
  return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

inline double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

/// Phi(z). erfc keeps relative accuracy in the lower tail.
inline double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

/// 1 - Phi(z) without cancellation.
inline double ccdf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

namespace detail {

// Mills ratio R(x) = (1 - Phi(x)) / phi(x) for large positive x, by the
// continued fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))) (modified Lentz).
inline double mills_ratio_cf(double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + k / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return 1.0 / f;
}

inline constexpr double kTailSwitch = -10.0;

}  // namespace detail

/// log Phi(z), finite for every finite z.
inline double log_cdf(double z) {
  if (z > 5.0) return std::log1p(-ccdf(z));
  if (z >= detail::kTailSwitch) return std::log(cdf(z));
  return log_pdf(z) + std::log(detail::mills_ratio_cf(-z));
}

/// log(1 - Phi(z)).
inline double log_ccdf(double z) { return log_cdf(-z); }

/// Inverse Mills ratio phi(z) / Phi(z). Tends to -z as z -> -inf and to 0
/// as z -> +inf.
inline double inv_mills(double z) {
  if (z >= detail::kTailSwitch) return pdf(z) / cdf(z);
  return 1.0 / detail::mills_ratio_cf(-z);
}

/// Phi^{-1}(p) for p in (0, 1). Acklam's rational approximation
/// (relative error below 1.2e-9) followed by one Halley refinement step,
/// which brings the result to near machine precision.
inline double quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley step on Phi(x) - p; the upper branch works with 1 - p to keep
  // the residual relative.
  const double e = x <= 0.0 ? cdf(x) - p : (1.0 - p) - ccdf(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace bvnet::normal

#endif  // BVNET_NORMAL_HPP
