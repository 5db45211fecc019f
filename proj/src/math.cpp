#include "accel/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace accel {

double normal_prob_between(double a, double b) {
  if (!(a <= b)) return 0.0;
  // Work in whichever tail keeps erfc arguments positive: erfc decays instead
  // of saturating at 1, so the subtraction below never cancels to noise.
  if (a >= 0.0) {
    return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  }
  if (b <= 0.0) {
    return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  }
  // Straddles zero; both CDF values are moderate.
  return normal_cdf(b) - normal_cdf(a);
}

namespace {

// log(1 - Phi(x)) for x >= 0; switches to the asymptotic series once erfc underflows.
double log_normal_sf(double x) {
  double e = std::erfc(x * kInvSqrt2);
  if (e > 0.0) return std::log(0.5 * e);
  double x2 = x * x;
  return -0.5 * x2 - std::log(x) - kLogSqrt2Pi +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

}  // namespace

double log_normal_prob_between(double a, double b) {
  if (!(a < b)) return -kInf;
  if (a >= 0.0) {
    // P = sf(a) - sf(b), with sf(a) >= sf(b).
    double la = log_normal_sf(a);
    if (b == kInf) return la;
    double lb = log_normal_sf(b);
    return la + log1mexp(la - lb);
  }
  if (b <= 0.0) return log_normal_prob_between(-b, -a);
  return std::log(normal_prob_between(a, b));
}

double logsumexp(std::span<const double> v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

namespace {

// Acklam's rational approximation to the inverse normal CDF (~1.15e-9 rel).
double quantile_seed(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  double x = quantile_seed(p);
  // Two Halley steps; each roughly cubes the error of the seed.
  for (int i = 0; i < 2; ++i) {
    double err = normal_cdf(x) - p;
    double pdf = normal_pdf(x);
    if (pdf <= 0.0) break;
    double u = err / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace accel
