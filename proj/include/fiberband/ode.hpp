#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>

#include "fiberband/errors.hpp"

namespace fiberband {

// Two complex components: either an oscillator amplitude pair or (psi, psi').
using State2 = std::array<std::complex<double>, 2>;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  double first_step = 0.0;  // 0: derived from the interval
  std::size_t max_steps = 2000000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double error_sum = 0.0;  // sum of accepted local error estimates
};

// Dormand-Prince 5(4) with the first-same-as-last evaluation. Integrates
// y' = f(x, y) from x0 to x1 in either direction; observer fires on the
// initial point and every accepted step.
inline State2 integrate_dp54(
    const std::function<State2(double, const State2&)>& f, State2 y, double x0,
    double x1, const OdeOptions& opt = {}, OdeStats* stats = nullptr,
    const std::function<void(double, const State2&)>& observer = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  // The 5th-order weights double as the last stage row (FSAL).
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  if (x0 == x1) {
    if (observer) observer(x0, y);
    return y;
  }
  const double dir = (x1 > x0) ? 1.0 : -1.0;
  double x = x0;
  double h = opt.first_step > 0.0 ? opt.first_step : std::abs(x1 - x0) / 100.0;
  h = std::min(h, std::abs(x1 - x0)) * dir;

  if (observer) observer(x, y);
  State2 k1 = f(x, y);
  std::size_t steps = 0;
  while ((x1 - x) * dir > 0.0) {
    if (++steps > opt.max_steps)
      throw NumericalError("ode integration exceeded the step budget");
    if ((x + h - x1) * dir > 0.0) h = x1 - x;
    if (std::abs(h) < 8.0 * 2.220446049250313e-16 * (std::abs(x) + 1.0))
      throw NumericalError("ode step size underflow");

    State2 k2, k3, k4, k5, k6, k7, yt, y5;
    for (int i = 0; i < 2; ++i) yt[i] = y[i] + h * (a21 * k1[i]);
    k2 = f(x + c2 * h, yt);
    for (int i = 0; i < 2; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(x + c3 * h, yt);
    for (int i = 0; i < 2; ++i)
      yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(x + c4 * h, yt);
    for (int i = 0; i < 2; ++i)
      yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(x + c5 * h, yt);
    for (int i = 0; i < 2; ++i)
      yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                          a64 * k4[i] + a65 * k5[i]);
    k6 = f(x + h, yt);
    for (int i = 0; i < 2; ++i)
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                          b6 * k6[i]);
    k7 = f(x + h, y5);

    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const std::complex<double> de =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
               e6 * k6[i] + e7 * k7[i]);
      const double sc =
          opt.abs_tol +
          opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double r = std::abs(de) / sc;
      err += r * r;
    }
    err = std::sqrt(0.5 * err);

    if (err <= 1.0) {
      x += h;
      y = y5;
      k1 = k7;
      if (stats) {
        ++stats->accepted;
        stats->error_sum += err;
      }
      if (observer) observer(x, y);
    } else if (stats) {
      ++stats->rejected;
    }
    const double fac =
        std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-16),
                                                   -0.2)));
    h *= fac;
  }
  return y;
}

}  // namespace fiberband
