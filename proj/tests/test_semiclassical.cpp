#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fiberband/errors.hpp"
#include "fiberband/field_profile.hpp"
#include "fiberband/semiclassical.hpp"
#include "fiberband/spectral.hpp"

using namespace fiberband;

namespace {
constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;
}

TEST_SUITE("semiclassical") {

TEST_CASE("harmonic ladder") {
  const std::vector<double> lv = harmonic_levels(2.0, 0.1, 3);
  REQUIRE(lv.size() == 3);
  CHECK(lv[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(lv[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(lv[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)harmonic_levels(-1.0, 0.1, 2), NumericalError);
  CHECK_THROWS_AS((void)harmonic_levels(1.0, 0.0, 2), NumericalError);
}

TEST_CASE("harmonic comparison sharpens as h shrinks") {
  const ProfilePtr g = make_gaussian_field();
  GridPolicy pol;
  Tolerances tol;
  const HarmonicComparison hc = compare_harmonic(*g, 0.5, {0.1, 0.03}, 2, 0.0,
                                                 pol, tol, ExecPolicy::serial());
  CHECK(hc.v_theta == doctest::Approx(kInvSqrtPi).epsilon(1e-10));
  CHECK(hc.eta == doctest::Approx(0.125).epsilon(1e-12));  // half the threshold

  // h = 0.1 only fits n = 1 under the window; h = 0.03 fits both bands
  double err_h1 = -1.0, err_h2 = -1.0;
  std::size_t n_entries_h1 = 0;
  for (const auto& e : hc.entries) {
    CHECK(e.lambda >= 0.5 * e.h * hc.v_theta);  // ground level lower bound
    CHECK(e.budget > 0.0);
    CHECK(e.rel_err == doctest::Approx(std::abs(e.lambda - e.harmonic) /
                                       ((2.0 * double(e.n) - 1.0) * e.h)));
    if (e.h == 0.1) {
      ++n_entries_h1;
      if (e.n == 1) err_h1 = e.rel_err;
    }
    if (e.h == 0.03 && e.n == 1) err_h2 = e.rel_err;
  }
  CHECK(n_entries_h1 == 1);
  REQUIRE(err_h1 > 0.0);
  REQUIRE(err_h2 > 0.0);
  CHECK(err_h2 < err_h1);
  CHECK(err_h1 < 0.2);

  CHECK_THROWS_AS((void)compare_harmonic(*g, 0.5, {}, 2, 0.0, pol, tol,
                                         ExecPolicy::serial()),
                  NumericalError);
}

TEST_CASE("counting bound at the strongest fiber") {
  const ProfilePtr g = make_gaussian_field();
  GridPolicy pol;
  Tolerances tol;
  const CountingCheck cc = counting_check(*g, 0.002, 0.02, pol, tol);
  CHECK(cc.v_plus == doctest::Approx(kInvSqrtPi).epsilon(1e-9));
  CHECK(cc.theta_star == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(cc.bound == 4);  // ceil(0.02 / (4 v+ h) - 1)
  CHECK(cc.observed >= cc.bound);
  CHECK(cc.observed >= 8);  // roughly eta / (2 v+ h) levels fit
  CHECK(cc.pass);
  CHECK(cc.regime_flagged);  // eta |ln h|^6 is far above 1 here
  CHECK_THROWS_AS((void)counting_check(*g, -0.1, 0.02, pol, tol), NumericalError);
  CHECK_THROWS_AS((void)counting_check(*g, 0.002, 0.0, pol, tol), NumericalError);
}

TEST_CASE("weighted identity: flat weight reproduces the eigen-residual") {
  const ProfilePtr g = make_gaussian_field();
  GridPolicy pol;
  pol.stencil = Stencil::order2;
  Tolerances tol;
  const SliceResult r = compute_slice(*g, 0.5, 0.01, pol, tol, 1);
  REQUIRE(r.count() == 1);
  const FiberOperator op = slice_operator(*g, r, Stencil::order2);
  const EigenPair pair = eigenvector(op, r.lambda_coarse[0], tol);

  const auto zero = [](double) { return 0.0; };
  CHECK(std::abs(agmon_identity_residual(op, pair, zero, zero)) <= 1e-9);
}

TEST_CASE("weighted identity: Lipschitz weight converges at first order") {
  const ProfilePtr g = make_gaussian_field();
  Tolerances tol;
  GridPolicy pol;
  pol.stencil = Stencil::order2;
  const SliceResult r = compute_slice(*g, 0.5, 0.01, pol, tol, 1);
  REQUIRE(r.count() == 1);

  const auto w = [](double x) { return 0.3 * std::abs(x); };
  const auto dw = [](double x) { return x >= 0.0 ? 0.3 : -0.3; };

  EigenSolveTols et;
  et.abs_tol = 1e-13;
  et.rel_tol = 1e-15;
  const auto residual_on = [&](const Grid& grid) {
    const FiberOperator op = assemble(*g, 0.5, 0.01, grid, Stencil::order2);
    const double lam = eigenvalues_below(op.pencil, r.e_solve, et, 1).at(0);
    const EigenPair pair = eigenvector(op, lam, tol);
    return std::abs(agmon_identity_residual(op, pair, w, dw));
  };

  const double coarse = residual_on(r.grid);
  const double fine = residual_on(r.grid.refined());
  REQUIRE(coarse > 1e-13);  // above the noise floor, the ratio is meaningful
  const double order = std::log2(coarse / fine);
  CHECK(order >= 0.8);

  // contract checks
  const FiberOperator op4 = slice_operator(*g, r, Stencil::order4);
  EigenSolveTols et4;
  const double lam4 = eigenvalues_below(op4.pencil, r.e_solve, et4, 1).at(0);
  const EigenPair pair4 = eigenvector(op4, lam4, tol);
  CHECK_THROWS_AS(
      (void)agmon_identity_residual(op4, pair4, w, dw), NumericalError);
}

TEST_CASE("exponential localization check and its negative control") {
  const ProfilePtr g = make_gaussian_field();
  GridPolicy pol;
  Tolerances tol;
  const AgmonCheck ok =
      agmon_decay_check(*g, 0.5, 0.01, 1, std::nullopt, pol, tol);
  CHECK(ok.pass);
  CHECK(ok.stable);
  CHECK(ok.gamma > 0.0);
  CHECK(ok.kappa > 0.0);
  CHECK(ok.kappa < 1.0);
  CHECK(ok.ratio <= ok.cap);
  CHECK(ok.threshold == doctest::Approx(0.25));

  // a rate faster than the spectral gap allows must fail the weighted bound
  const double gamma_bad =
      2.0 * std::sqrt(ok.lambda) * std::sqrt(ok.threshold - ok.lambda) / 0.01;
  const AgmonCheck bad =
      agmon_decay_check(*g, 0.5, 0.01, 1, gamma_bad, pol, tol);
  CHECK_FALSE(bad.pass);
  CHECK(bad.gamma == doctest::Approx(gamma_bad));
  CHECK(bad.kappa == 0.0);

  CHECK_THROWS_AS((void)agmon_decay_check(*g, 0.5, 0.01, 0, std::nullopt, pol, tol),
                  NumericalError);
  CHECK_THROWS_AS(
      (void)agmon_decay_check(*g, 0.5, 0.01, 99, std::nullopt, pol, tol),
      NumericalError);
}

TEST_CASE("rescaled fiber: structure at the well") {
  const ProfilePtr g = make_gaussian_field();
  const RescaledFiber rf = make_rescaled(*g, 0.7);
  const double x0 = g->turning_point(0.7);
  CHECK(rf.x0 == doctest::Approx(x0).epsilon(1e-12));
  CHECK(rf.h == doctest::Approx(1.0 / (0.7 * x0)).epsilon(1e-12));
  CHECK(rf.scale == doctest::Approx(0.49).epsilon(1e-14));
  CHECK(rf.v0 == doctest::Approx(x0 * g->b(x0) / 0.7).epsilon(1e-12));

  // the rescaled profile puts the well at s = 0 with field strength v0
  REQUIRE(rf.profile != nullptr);
  CHECK(rf.profile->a(0.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
  CHECK(rf.profile->b(0.0) == doctest::Approx(rf.v0).epsilon(1e-12));
  CHECK(std::abs(rf.profile->turning_point(0.0)) < 1e-10);
  CHECK(rf.profile->flux_lower().value() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rf.profile->flux_upper().value() ==
        doctest::Approx((1.0 - 0.7) / 0.7).epsilon(1e-12));
  CHECK(rf.profile->name().find("rescaled") != std::string::npos);

  CHECK_THROWS_AS((void)make_rescaled(*g, -0.2), NumericalError);
  CHECK_THROWS_AS((void)make_rescaled(*g, 2.0), NumericalError);
}

TEST_CASE("rescaled and direct solves agree through the unitary identity") {
  const ProfilePtr p = make_power_law_field(1.0, 1.0, 0.0, false);
  const double xi = 500.0;
  GridPolicy pol;
  Tolerances tol;

  const RescaledFiber rf = make_rescaled(*p, xi);
  CHECK(rf.v0 == doctest::Approx(2.0).epsilon(1e-12));
  Tolerances tr = tol;
  tr.eigen_abs = 0.0;  // the rescaled levels are ~1e-4, keep bisection relative
  const SliceResult rs = compute_slice(*rf.profile, 0.0, rf.h, pol, tr, 2,
                                       4.0 * rf.h * rf.v0);
  const double x0 = rf.x0;
  const SliceResult rd =
      compute_slice(*p, xi, 1.0, pol, tol, 2, 4.0 * p->b(x0));
  REQUIRE(rs.count() == 2);
  REQUIRE(rd.count() == 2);
  for (std::size_t n = 0; n < 2; ++n) {
    const double back = rf.scale * rs.lambda[n];
    const double tol_n =
        3.0 * (rf.scale * rs.error_budget[n] + rd.error_budget[n]);
    CHECK(std::abs(back - rd.lambda[n]) <= tol_n);
  }
}

TEST_CASE("power-law slope and coefficient closed forms") {
  CHECK(power_law_slope(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(power_law_slope(-0.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(power_law_slope(0.0) == doctest::Approx(0.0).scale(1.0));
  CHECK(power_law_coeff(1.0, 1.0, 1) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(power_law_coeff(1.0, 1.0, 2) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(power_law_coeff(1.0, -0.5, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)power_law_slope(-1.0), NumericalError);
  CHECK_THROWS_AS((void)power_law_slope(-1.5), NumericalError);
}

TEST_CASE("asymptotic fit recovers the power-law growth") {
  const ProfilePtr p = make_power_law_field(1.0, 1.0, 0.0, false);
  GridPolicy pol;
  Tolerances tol;
  const AsymptoticFit fit = asymptotic_fit(*p, {50.0, 100.0, 200.0}, 1, true,
                                           pol, tol, ExecPolicy::serial());
  CHECK(fit.rescaled);
  REQUIRE(fit.bands.size() == 1);
  const auto& b1 = fit.bands[0];
  REQUIRE(b1.lambdas.size() == 3);
  CHECK(b1.n == 1);
  CHECK(b1.slope == doctest::Approx(0.5).epsilon(0.04));
  CHECK(b1.coeff == doctest::Approx(power_law_coeff(1.0, 1.0, 1)).epsilon(0.03));
  CHECK(b1.lambdas[0] < b1.lambdas[1]);
  CHECK(b1.lambdas[1] < b1.lambdas[2]);

  // the direct path must tell the same story at moderate levels
  const AsymptoticFit direct = asymptotic_fit(*p, {5.0, 10.0, 20.0}, 1, false,
                                              pol, tol, ExecPolicy::serial());
  CHECK_FALSE(direct.rescaled);
  CHECK(direct.bands.at(0).slope == doctest::Approx(0.5).epsilon(0.15));

  CHECK_THROWS_AS((void)asymptotic_fit(*p, {100.0}, 1, true, pol, tol,
                                       ExecPolicy::serial()),
                  NumericalError);
}

}  // TEST_SUITE
