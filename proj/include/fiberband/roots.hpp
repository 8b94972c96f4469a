#pragma once

#include <algorithm>
#include <cmath>

#include "fiberband/errors.hpp"

namespace fiberband {

// Root of f in a bracket with f(lo), f(hi) of opposite sign. Newton steps from
// the analytic derivative, falling back to bisection whenever a step leaves
// the bracket (classic safeguarded scheme). Terminates on |f| <= f_tol or on
// bracket width <= x_tol * (1 + |x|).
template <class F, class DF>
double newton_bisect(const F& f, const DF& df, double lo, double hi,
                     double x_tol, double f_tol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw NumericalError("newton_bisect: root not bracketed");
  // xl has f < 0, xh has f > 0 (positions may be unordered).
  double xl = flo < 0.0 ? lo : hi;
  double xh = flo < 0.0 ? hi : lo;
  double x = 0.5 * (xl + xh);
  for (int it = 0; it < max_iter; ++it) {
    const double fx = f(x);
    if (std::abs(fx) <= f_tol) return x;
    if (fx < 0.0)
      xl = x;
    else
      xh = x;
    const double d = df(x);
    double xn = d != 0.0 ? x - fx / d : 0.5 * (xl + xh);
    const double lo2 = std::min(xl, xh), hi2 = std::max(xl, xh);
    if (!(xn > lo2 && xn < hi2)) xn = 0.5 * (xl + xh);
    if (std::abs(xn - x) <= x_tol * (1.0 + std::abs(xn))) return xn;
    x = xn;
  }
  throw NumericalError("newton_bisect: no convergence");
}

}  // namespace fiberband
