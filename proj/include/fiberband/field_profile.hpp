#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fiberband/extended_real.hpp"

namespace fiberband {

// Transverse magnetic field profile b(x) together with its primitive
//   a(x) = a0 + \int_0^x b(t) dt
// and the derived quantities the spectral layer needs: flux limits
// a(+-inf), tail fluxes, turning points of a, and the local field
// strength.
//
// Closed-form profiles evaluate a(x) cancellation-safely (erf/expm1 forms
// in the tails); the one profile without a closed-form primitive caches
// panel integrals between fixed anchors so values never depend on the
// order of evaluation.
class FieldProfile {
 public:
  virtual ~FieldProfile() = default;

  virtual std::string name() const = 0;

  virtual double b(double x) const = 0;
  virtual double db(double x) const = 0;   // b'(x)
  virtual double a(double x) const = 0;    // gauge-fixed primitive

  // \int_{x1}^{x2} b, evaluated without forming a(x2) - a(x1) when a
  // cancellation-free form exists.
  virtual double flux_between(double x1, double x2) const;

  // Limits a(-inf), a(+inf); either may be infinite.
  virtual ExtendedReal flux_lower() const = 0;
  virtual ExtendedReal flux_upper() const = 0;

  // Remaining flux beyond x in the given direction (+1: toward +inf),
  // i.e. |a(+-inf) - a(x)|. Throws if that limit is infinite.
  virtual double flux_tail(double x, int direction) const;

  // Smallest-|x| solution of a(x) = value. Default: two-sided expanding
  // bracket search refined by safeguarded Newton; closed-form profiles
  // override. Throws if the level is never attained.
  virtual double turning_point(double value) const;

  // True when b never changes sign, so a is monotone and its range is
  // exactly the interval between the flux limits. Enables the analytic
  // potential floor dist(xi, [flux_lo, flux_hi])^2.
  virtual bool monotone_flux() const { return true; }

  // Gauge shift: identical field with a0 replaced by a0 + delta.
  virtual std::unique_ptr<FieldProfile> with_gauge(double delta) const = 0;

  virtual std::unique_ptr<FieldProfile> clone() const = 0;

  double a0() const { return a0_; }

  // True when b has unbounded support captured only approximately
  // (tabulated data truncated at the sample hull).
  virtual bool tail_flagged() const { return false; }

 protected:
  explicit FieldProfile(double a0) : a0_(a0) {}
  double a0_ = 0.0;
};

using ProfilePtr = std::unique_ptr<FieldProfile>;

// b(x) = b0 everywhere. a(x) = a0 + b0 x.
ProfilePtr make_constant_field(double b0, double a0 = 0.0);

// b(x) = exp(-x^2)/sqrt(pi); a(x) = a0 + (1 + erf x)/2. Unit total flux.
ProfilePtr make_gaussian_field(double a0 = 0.0);

// Power-law field concentrated on x >= 0.
//  alpha > 0 (plain core):   b(x) = c1 x^alpha for x >= 0, 0 for x < 0.
//  regularized (any alpha < 1, mandatory for alpha <= 0):
//    b(x) = c1 (1+x^2)^{alpha/2} sigma(x), sigma(x) = (1 + x/sqrt(1+x^2))/2,
//  smooth and matching c1 x^alpha as x -> +inf.
// The upper flux is +inf for alpha >= -1.
ProfilePtr make_power_law_field(double c1, double alpha, double a0 = 0.0,
                                bool regularized = false);

// Smoothed step between asymptotic slopes b- and b+ over width w:
//   b(x) = b- + (b+ - b-) S(x/w), S(t) = (1 + erf t)/2.
ProfilePtr make_step_field(double b_minus, double b_plus, double width,
                           double a0 = 0.0);

// Piecewise-linear interpolation of sampled field values; b = 0 outside
// the sample hull so both flux limits are finite. tail_flagged() is true.
ProfilePtr make_tabulated_field(std::vector<double> xs, std::vector<double> bs,
                                double a0 = 0.0);

// b at the turning point of the level: the effective velocity of the
// harmonic approximation. Throws if b(x_level) <= 0.
double effective_velocity(const FieldProfile& profile, double level);

// Closed interval spanned by the finite part of the flux range, as
// [min(flux limits), max(flux limits)] with infinities kept.
struct FluxRange {
  ExtendedReal lo, hi;
};
FluxRange flux_range(const FieldProfile& profile);

// Squared distance from xi to the closure of the range of a. Zero inside.
// Valid as a pointwise lower bound for (xi - a(x))^2 only when
// monotone_flux() holds.
double potential_floor(const FieldProfile& profile, double xi);

}  // namespace fiberband
