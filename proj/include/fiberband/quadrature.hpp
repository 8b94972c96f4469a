#pragma once

#include <cmath>
#include <cstdlib>

#include "fiberband/errors.hpp"

namespace fiberband {

namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double m, double b, double fa,
                            double fm, double fb, double whole, double tol,
                            int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || (m - a) < 1e-14 * (1.0 + std::abs(m)))
    return left + right + delta / 15.0;
  if (depth <= 0)
    throw NumericalError("adaptive quadrature: recursion depth exhausted");
  return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson integral of f over [a,b], absolute tolerance tol.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10,
                 int max_depth = 60) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, m, b, fa, fm, fb, whole,
                                      std::abs(tol), max_depth);
}

// 5-point Gauss-Legendre rule on [a,b]; used for short smooth cells where the
// error is far below rounding.
template <class F>
double gauss5(const F& f, double a, double b) {
  constexpr double xg[5] = {0.0, 0.5384693101056831, -0.5384693101056831,
                            0.9061798459386640, -0.9061798459386640};
  constexpr double wg[5] = {0.5688888888888889, 0.4786286704993665,
                            0.4786286704993665, 0.2369268850561891,
                            0.2369268850561891};
  const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += wg[i] * f(c + hl * xg[i]);
  return s * hl;
}

// Integral of f over [x0, +infinity) for |f| eventually decreasing and
// integrable: the horizon doubles until the last chunk falls below tol.
// tail_bound (optional) receives a crude estimate of the neglected tail.
// The budget accommodates heavy power tails (x^-1.25 from scale one still
// reaches 1e-14 within ~190 doublings); only non-L1 integrands exhaust it.
template <class F>
double integrate_to_infinity(const F& f, double x0, double tol = 1e-12,
                             double* tail_bound = nullptr,
                             int max_doublings = 192) {
  double total = 0.0, x = x0, len = 1.0;
  for (int k = 0; k < max_doublings; ++k) {
    const double chunk = integrate(f, x, x + len, 0.25 * tol);
    total += chunk;
    x += len;
    len *= 2.0;
    const double edge = std::abs(f(x));
    if (std::abs(chunk) < tol && edge * len < tol) {
      if (tail_bound) *tail_bound = std::abs(chunk) + edge * len;
      return total;
    }
  }
  throw NumericalError("tail quadrature did not converge (integrand not L1?)");
}

}  // namespace fiberband
