#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fiberband/errors.hpp"
#include "fiberband/field_profile.hpp"
#include "fiberband/ode.hpp"
#include "fiberband/scattering.hpp"

using namespace fiberband;

namespace {
using cplx = std::complex<double>;
const cplx I{0.0, 1.0};

double cnorm(cplx z) { return std::abs(z); }
}  // namespace

TEST_SUITE("scattering") {

TEST_CASE("dormand-prince core integrates the circle") {
  const auto f = [](double, const State2& y) {
    return State2{y[1], -y[0]};
  };
  OdeOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  OdeStats stats;
  std::size_t observed = 0;
  const State2 y = integrate_dp54(f, {cplx(1.0), cplx(0.0)}, 0.0,
                                  std::numbers::pi, opt, &stats,
                                  [&](double, const State2&) { ++observed; });
  CHECK(cnorm(y[0] - cplx(-1.0)) < 1e-9);
  CHECK(cnorm(y[1]) < 1e-9);
  CHECK(stats.accepted > 0);
  CHECK(observed >= stats.accepted);

  OdeOptions tiny;
  tiny.max_steps = 3;
  CHECK_THROWS_AS((void)integrate_dp54(f, {cplx(1.0), cplx(0.0)}, 0.0, 100.0, tiny),
                  NumericalError);
}

TEST_CASE("free field: plane waves pass through unchanged") {
  // b = 0 everywhere: the equation is psi'' = -lambda psi on both sides
  const ProfilePtr zero = make_tabulated_field({-1.0, 1.0}, {0.0, 0.0});

  const JostCoefficients r1 =
      volterra_coefficients(*zero, 0.0, 1.0, +1, cplx(1.0), I);
  CHECK(cnorm(r1.a - cplx(1.0)) < 1e-8);   // e^{ix} is pure a
  CHECK(cnorm(r1.b) < 1e-8);
  CHECK(r1.omega == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r1.gronwall_ok);
  CHECK(r1.tail_bound < 1e-12);

  const JostCoefficients r2 =
      volterra_coefficients(*zero, 0.0, 1.0, +1, cplx(1.0), cplx(0.0));
  CHECK(cnorm(r2.a - cplx(0.5)) < 1e-8);   // cos x splits evenly
  CHECK(cnorm(r2.b - cplx(0.5)) < 1e-8);

  // omega scales out
  const JostCoefficients r4 =
      volterra_coefficients(*zero, 0.0, 4.0, +1, cplx(1.0), 2.0 * I);
  CHECK(cnorm(r4.a - cplx(1.0)) < 1e-8);
  CHECK(cnorm(r4.b) < 1e-8);

  // W(e^{ix}, cos x) = -i, recovered from amplitudes alone
  const cplx w = asymptotic_wronskian(r1, r2);
  CHECK(cnorm(w - (-I)) < 1e-8);
}

TEST_CASE("wronskian is conserved through a real potential") {
  const ProfilePtr g = make_gaussian_field();
  const JostCoefficients j1 =
      volterra_coefficients(*g, 0.5, 0.3, +1, cplx(1.0), cplx(0.0));
  const JostCoefficients j2 =
      volterra_coefficients(*g, 0.5, 0.3, +1, cplx(0.0), cplx(1.0));
  CHECK(j1.gronwall_ok);
  CHECK(j2.gronwall_ok);
  // W(psi1, psi2)(0) = 1, and the asymptotic amplitudes must reproduce it
  const cplx w = asymptotic_wronskian(j1, j2);
  CHECK(cnorm(w - cplx(1.0)) < 1e-8);
  CHECK(j1.omega == doctest::Approx(std::sqrt(0.05)).epsilon(1e-12));

  CHECK_THROWS_AS((void)asymptotic_wronskian(
                      j1, volterra_coefficients(*g, 0.5, 1.0, +1, cplx(1.0),
                                                cplx(0.0))),
                  NumericalError);
}

TEST_CASE("bump potential matches direct plane-wave matching") {
  const ProfilePtr bump = make_tabulated_field({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  const double xi = 0.5;
  const double lambda = 0.4;
  const double cut = 6.0;
  const double omega = std::sqrt(lambda);  // xi equals the right flux limit

  OdeOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  const JostCoefficients jv = volterra_coefficients(
      *bump, xi, lambda, +1, cplx(1.0), cplx(0.2, 0.7), opt, cut);
  CHECK(jv.omega == doctest::Approx(omega).epsilon(1e-12));

  // direct integration in (psi, psi') variables, then match at the cut
  const auto f = [&](double t, const State2& y) {
    const double c = xi - bump->a(t);
    return State2{y[1], (c * c - lambda) * y[0]};
  };
  const State2 end =
      integrate_dp54(f, {cplx(1.0), cplx(0.2, 0.7)}, 0.0, cut, opt);
  const cplx ad =
      0.5 * (end[0] + end[1] / (I * omega)) * std::exp(-I * omega * cut);
  const cplx bd =
      0.5 * (end[0] - end[1] / (I * omega)) * std::exp(I * omega * cut);
  CHECK(cnorm(jv.a - ad) < 1e-6);
  CHECK(cnorm(jv.b - bd) < 1e-6);
}

TEST_CASE("exclusion certificate on the symmetric embedded level") {
  const ProfilePtr g = make_gaussian_field();
  const ExclusionReport r = embedded_exclusion(*g, 0.5, 0.3);
  CHECK(r.excluded);
  CHECK(r.gronwall_ok);
  CHECK(r.det_drift < 1e-8);
  CHECK(r.sigma_min_sq > 1e-2);
  CHECK(r.sigma_min_sq > 1e3 * r.error_budget);
  CHECK(std::abs(r.side) == 1);
  CHECK_FALSE(r.opposite_forbidden);  // both sides oscillate at this level
  CHECK(r.omega == doctest::Approx(std::sqrt(0.05)).epsilon(1e-10));
}

TEST_CASE("one oscillatory side plus a forbidden side") {
  const ProfilePtr g = make_gaussian_field();
  const ExclusionReport r = embedded_exclusion(*g, 0.2, 0.1);
  CHECK(r.excluded);
  CHECK(r.side == -1);  // only the lower-flux side propagates
  CHECK(r.det_drift < 1e-8);  // det J = i/(2 omega) holds on the left too
  CHECK(r.opposite_forbidden);
  CHECK(r.decaying_norm > 1e-4);  // the decaying solution is not L2 on the left
}

TEST_CASE("left side reports amplitudes in the axis convention") {
  // b = 0: psi = e^{i omega x} must look like pure a seen from either end
  const ProfilePtr zero = make_tabulated_field({-1.0, 1.0}, {0.0, 0.0});
  const JostCoefficients l1 =
      volterra_coefficients(*zero, 0.0, 1.0, -1, cplx(1.0), I);
  CHECK(cnorm(l1.a - cplx(1.0)) < 1e-8);
  CHECK(cnorm(l1.b) < 1e-8);
  CHECK(l1.x_cut < 0.0);

  // threshold energy: psi = x keeps its axis slope +1 seen from the left
  const JostCoefficients lt =
      volterra_coefficients(*zero, 0.0, 0.0, -1, cplx(0.0), cplx(1.0));
  CHECK(lt.omega == 0.0);
  CHECK(cnorm(lt.a) < 1e-8);
  CHECK(cnorm(lt.b - cplx(1.0)) < 1e-8);

  // W(psi1, psi2)(0) = 1 recovered from two left-side runs
  const ProfilePtr g = make_gaussian_field();
  const JostCoefficients j1 =
      volterra_coefficients(*g, 0.5, 0.3, -1, cplx(1.0), cplx(0.0));
  const JostCoefficients j2 =
      volterra_coefficients(*g, 0.5, 0.3, -1, cplx(0.0), cplx(1.0));
  const cplx w = asymptotic_wronskian(j1, j2);
  CHECK(cnorm(w - cplx(1.0)) < 1e-8);

  // the two ends oscillate at the same frequency here, yet amplitudes taken
  // at opposite ends never combine into one Wronskian
  const JostCoefficients r1 =
      volterra_coefficients(*g, 0.5, 0.3, +1, cplx(1.0), cplx(0.0));
  CHECK_THROWS_WITH_AS((void)asymptotic_wronskian(j1, r1),
                       doctest::Contains("opposite sides"), NumericalError);
}

TEST_CASE("misuse is rejected") {
  const ProfilePtr g = make_gaussian_field();
  CHECK_THROWS_AS((void)embedded_exclusion(*g, 0.5, 0.1), NumericalError);
  CHECK_THROWS_AS((void)volterra_coefficients(*g, 0.2, 0.1, +1, cplx(1.0),
                                              cplx(0.0)),
                  NumericalError);
  CHECK_THROWS_AS((void)volterra_coefficients(*g, 0.5, 0.3, 0, cplx(1.0),
                                              cplx(0.0)),
                  NumericalError);
  const ProfilePtr c = make_constant_field(1.0);
  CHECK_THROWS_AS((void)embedded_exclusion(*c, 0.0, 1.0), NumericalError);
  CHECK_THROWS_AS((void)volterra_coefficients(*c, 0.0, 1.0, +1, cplx(1.0),
                                              cplx(0.0)),
                  NumericalError);
}

}  // TEST_SUITE
