#pragma once

#include <complex>
#include <cstddef>
#include <optional>

#include "fiberband/field_profile.hpp"
#include "fiberband/ode.hpp"

namespace fiberband {

// Asymptotic amplitudes of one solution on a short-range side: past the cut,
// psi(x) ~ a e^{i omega x} + b e^{-i omega x} (or a + b x when omega = 0,
// with a the constant term and b the slope).
struct JostCoefficients {
  std::complex<double> a{0.0, 0.0};
  std::complex<double> b{0.0, 0.0};
  double omega = 0.0;
  double x_cut = 0.0;       // signed endpoint of the integration on the axis
  double tail_bound = 0.0;  // coupling integral neglected past the cut
  double rk_error = 0.0;    // accumulated local-error estimate of the solver
  std::size_t steps = 0;
  bool gronwall_ok = true;   // amplitude never beat its a-priori envelope
  double gronwall_max = 0.0;  // max ratio ||V|| / envelope over the run
};

// Integrates the fiber equation psi'' = (V - lambda) psi from the origin out
// to the short-range side `side` (+1 right, -1 left) with the given initial
// data, in the oscillator-amplitude variables that stay O(1), and returns the
// asymptotic amplitudes at the cut. The side's flux limit must be finite and
// lambda must sit at or above the propagation threshold (xi - phi)^2.
// x_cut = 0 picks the cut automatically from the flux tail.
JostCoefficients volterra_coefficients(const FieldProfile& profile, double xi,
                                       double lambda, int side,
                                       std::complex<double> psi0,
                                       std::complex<double> dpsi0,
                                       const OdeOptions& opt = {},
                                       double x_cut = 0.0);

// Wronskian of two solutions recovered from their asymptotic amplitudes;
// equals psi1 psi2' - psi2 psi1' (constant in x).
std::complex<double> asymptotic_wronskian(const JostCoefficients& j1,
                                          const JostCoefficients& j2);

struct ExclusionReport {
  double xi = 0.0;
  double lambda = 0.0;
  int side = 0;               // side carrying the certificate
  double omega = 0.0;
  double sigma_min_sq = 0.0;  // smallest singular value squared of the map J
  double error_budget = 0.0;
  double det_drift = 0.0;     // relative defect of det J against i/(2 omega)
  bool gronwall_ok = true;
  bool excluded = false;
  JostCoefficients j1, j2;  // runs with (psi, psi')(0) = (1,0) and (0,1)
  // When the opposite side is classically forbidden, the unique decaying
  // solution is integrated back to the origin and its amplitude norm on the
  // certificate side is reported (0 would be an embedded eigenvalue).
  bool opposite_forbidden = false;
  double decaying_norm = 0.0;
};

// Certifies that lambda (inside the essential spectrum of the fiber at xi)
// is not an eigenvalue: on a short-range oscillatory side the map from
// initial data to asymptotic amplitudes is uniformly invertible, so no
// nonzero solution is square-integrable there.
ExclusionReport embedded_exclusion(const FieldProfile& profile, double xi,
                                   double lambda, const OdeOptions& opt = {});

}  // namespace fiberband
