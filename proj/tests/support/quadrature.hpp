#pragma once

// Test-side adaptive Simpson quadrature. Used as the independent oracle for
// density normalization and tilt-identity checks; deliberately knows nothing
// about the library's distribution internals beyond a callable density.

#include <cmath>
#include <functional>
#include <limits>

namespace testsupport {

namespace detail {

inline double simpson(const std::function<double(double)>&, double a, double b, double fa,
                      double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, m, fa, flm, fm);
  double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Integral of f over [a, b] with absolute tolerance tol.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-11) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = detail::simpson(f, a, b, fa, fm, fb);
  return detail::adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

/// Integral over [a, inf): maps the tail through x = a + t/(1-t).
inline double integrate_to_inf(const std::function<double(double)>& f, double a,
                               double tol = 1e-11) {
  auto g = [&](double t) {
    double u = 1.0 - t;
    double x = a + t / u;
    return f(x) / (u * u);
  };
  return integrate(g, 0.0, 1.0 - 1e-12, tol);
}

}  // namespace testsupport
