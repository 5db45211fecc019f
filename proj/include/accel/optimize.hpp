#pragma once

// Bracketed 1-D maximization used by every MLE and cross-entropy update.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace accel {

struct OptimSettings {
  double tolerance = 1e-8;   // absolute tolerance on the argument
  int max_expansions = 200;  // bracket growth steps before giving up
};

namespace detail {

inline constexpr double kGolden = 0.61803398874989484820;

/// Golden-section maximization of a unimodal f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Maximize a unimodal objective around an initial guess. The bracket grows
/// outward from `center` in units of `step` until both edges drop below an
/// interior point, then golden section polishes to `settings.tolerance`.
template <typename F>
double maximize_unimodal(F&& f, double center, double step, const OptimSettings& settings,
                         double lo_limit = -1e308, double hi_limit = 1e308) {
  double lo = center - step;
  double hi = center + step;
  lo = std::fmax(lo, lo_limit);
  hi = std::fmin(hi, hi_limit);
  double fc = f(center);
  double flo = f(lo), fhi = f(hi);
  int n = 0;
  while (flo >= fc && lo > lo_limit) {
    hi = center;
    fhi = fc;
    center = lo;
    fc = flo;
    step *= 2.0;
    lo = std::fmax(center - step, lo_limit);
    flo = f(lo);
    if (++n > settings.max_expansions)
      throw std::runtime_error("maximize_unimodal: no interior maximum (lower bracket)");
  }
  while (fhi >= fc && hi < hi_limit) {
    lo = center;
    flo = fc;
    center = hi;
    fc = fhi;
    step *= 2.0;
    hi = std::fmin(center + step, hi_limit);
    fhi = f(hi);
    if (++n > settings.max_expansions)
      throw std::runtime_error("maximize_unimodal: no interior maximum (upper bracket)");
  }
  return detail::golden_max(f, lo, hi, settings.tolerance);
}

}  // namespace accel
