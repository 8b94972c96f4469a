#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "fiberband/errors.hpp"
#include "fiberband/field_profile.hpp"
#include "fiberband/rng.hpp"
#include "fiberband/tridiag.hpp"

using namespace fiberband;

namespace {

// Independent dense oracle for the standard tridiagonal problem.
std::vector<double> oracle_eigs(const SymTridiag& t) {
  const auto n = static_cast<Eigen::Index>(t.diag.size());
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(t.diag.data(), n);
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(t.off.data(), n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

Eigen::MatrixXd dense(const SymTridiag& t) {
  const auto n = static_cast<Eigen::Index>(t.diag.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = t.diag[static_cast<std::size_t>(i)];
    if (i + 1 < n) {
      m(i, i + 1) = m(i + 1, i) = t.off[static_cast<std::size_t>(i)];
    }
  }
  return m;
}

// Dense oracle for the pencil A v = lambda B v.
std::vector<double> oracle_pencil_eigs(const TridiagPencil& p) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      dense(p.A), dense(p.B), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  const auto& ev = ges.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

TridiagPencil random_pencil(std::uint64_t seed, std::size_t n, bool generalized) {
  SplitMix64 rng(seed);
  TridiagPencil p;
  p.A.diag.resize(n);
  p.A.off.resize(n - 1);
  for (auto& v : p.A.diag) v = 2.0 * rng.symmetric();
  for (auto& v : p.A.off) v = rng.symmetric();
  if (generalized) {
    p.B.diag.resize(n);
    p.B.off.resize(n - 1);
    for (auto& v : p.B.diag) v = 1.0 + 0.3 * rng.uniform();
    for (auto& v : p.B.off) v = 0.1 * rng.symmetric();  // diagonally dominant, SPD
  }
  return p;
}

}  // namespace

TEST_SUITE("tridiag") {

TEST_CASE("sturm counts match a dense solver") {
  const TridiagPencil p = random_pencil(20240817, 60, false);
  const std::vector<double> ev = oracle_eigs(p.A);
  for (double e : {-2.5, -0.9, -0.1, 0.0, 0.4, 1.3, 3.0}) {
    const auto expected = std::lower_bound(ev.begin(), ev.end(), e) - ev.begin();
    CHECK(count_below(p, e) == static_cast<int>(expected));
  }
  CHECK(count_below(p, -100.0) == 0);
  CHECK(count_below(p, 100.0) == 60);
}

TEST_CASE("sturm counts match a dense solver, generalized pencil") {
  const TridiagPencil p = random_pencil(777, 48, true);
  const std::vector<double> ev = oracle_pencil_eigs(p);
  for (double e : {-2.0, -0.5, 0.0, 0.3, 1.0, 2.2}) {
    const auto expected = std::lower_bound(ev.begin(), ev.end(), e) - ev.begin();
    CHECK(count_below(p, e) == static_cast<int>(expected));
  }
}

TEST_CASE("bisected eigenvalues match a dense solver") {
  EigenSolveTols tols;
  tols.abs_tol = 1e-12;
  tols.rel_tol = 1e-14;

  const TridiagPencil ps = random_pencil(20240817, 60, false);
  const std::vector<double> evs = oracle_eigs(ps.A);
  const std::vector<double> got = eigenvalues_below(ps, 0.5, tols);
  const auto ns = std::lower_bound(evs.begin(), evs.end(), 0.5) - evs.begin();
  REQUIRE(got.size() == static_cast<std::size_t>(ns));
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(evs[i]).epsilon(1e-9));
  CHECK(std::is_sorted(got.begin(), got.end()));

  // k_max truncates from below
  const std::vector<double> first3 = eigenvalues_below(ps, 0.5, tols, 3);
  REQUIRE(first3.size() == std::min<std::size_t>(3, got.size()));
  for (std::size_t i = 0; i < first3.size(); ++i)
    CHECK(first3[i] == doctest::Approx(got[i]).epsilon(1e-12));

  const TridiagPencil pg = random_pencil(777, 48, true);
  const std::vector<double> evg = oracle_pencil_eigs(pg);
  const std::vector<double> gotg = eigenvalues_below(pg, 0.8, tols);
  const auto ng = std::lower_bound(evg.begin(), evg.end(), 0.8) - evg.begin();
  REQUIRE(gotg.size() == static_cast<std::size_t>(ng));
  for (std::size_t i = 0; i < gotg.size(); ++i)
    CHECK(gotg[i] == doctest::Approx(evg[i]).epsilon(1e-9));
}

TEST_CASE("lower bound really bounds the spectrum") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const TridiagPencil p = random_pencil(seed, 40, seed % 2 == 0);
    const std::vector<double> ev =
        p.generalized() ? oracle_pencil_eigs(p) : oracle_eigs(p.A);
    const double lb = eigenvalue_lower_bound(p);
    CHECK(lb <= ev.front() + 1e-12);
    CHECK(lb > ev.front() - 10.0);  // not absurdly loose
    CHECK(count_below(p, lb) == 0);
  }
}

TEST_CASE("exact-shift pivots are clamped, counts stay consistent") {
  TridiagPencil p;
  p.A.diag = {1.0, 2.0, 3.0};
  p.A.off = {0.0, 0.0};
  CHECK(count_below(p, 2.0) == 1);      // strictly below
  CHECK(count_below(p, 2.0 + 1e-9) == 2);
  CHECK(count_below(p, 0.999999999) == 0);
}

TEST_CASE("inverse iteration: residual, normalization, sign") {
  const TridiagPencil p = random_pencil(991, 80, true);
  EigenSolveTols tols;
  const std::vector<double> ev = eigenvalues_below(p, 1.0, tols, 4);
  REQUIRE(ev.size() >= 2);
  for (double lambda : ev) {
    const TridiagVector r = inverse_iteration(p, lambda, 1e-8, 42);
    CHECK(r.residual <= 1e-8);

    // residual definition: ||A v - lambda B v|| / pencil_norm
    const auto n = static_cast<Eigen::Index>(p.size());
    Eigen::Map<const Eigen::VectorXd> v(r.v.data(), n);
    const Eigen::VectorXd resid = dense(p.A) * v - lambda * dense(p.B) * v;
    CHECK(resid.norm() / pencil_norm(p, lambda) ==
          doctest::Approx(r.residual).epsilon(1e-6).scale(1.0));

    CHECK(v.dot(dense(p.B) * v) == doctest::Approx(1.0).epsilon(1e-10));
    const auto imax = std::max_element(
        r.v.begin(), r.v.end(),
        [](double x, double y) { return std::abs(x) < std::abs(y); });
    CHECK(*imax > 0.0);
  }
}

TEST_CASE("harmonic oscillator on a plain grid") {
  // constant unit field at xi = 0 gives V = x^2 exactly
  const ProfilePtr field = make_constant_field(1.0);
  const FiberOperator op =
      assemble(*field, 0.0, 1.0, Grid(-12.0, 12.0, 4001), Stencil::order2);
  CHECK(count_below(op.pencil, 6.0) == 3);

  EigenSolveTols tols;
  const std::vector<double> ev = eigenvalues_below(op.pencil, 6.0, tols);
  REQUIRE(ev.size() == 3);
  CHECK(ev[0] == doctest::Approx(1.0).epsilon(5e-5));
  CHECK(ev[1] == doctest::Approx(3.0).epsilon(2e-4));
  CHECK(ev[2] == doctest::Approx(5.0).epsilon(5e-4));
  CHECK(op.potential_floor == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}

TEST_CASE("stencil convergence orders on the oscillator") {
  const ProfilePtr field = make_constant_field(1.0);
  EigenSolveTols tols;
  tols.abs_tol = 1e-13;
  tols.rel_tol = 1e-15;
  const auto ground = [&](std::size_t n, Stencil s, double half) {
    const FiberOperator op = assemble(*field, 0.0, 1.0, Grid(-half, half, n), s);
    return eigenvalues_below(op.pencil, 2.0, tols, 1).at(0);
  };

  const double e2c = std::abs(ground(1001, Stencil::order2, 12.0) - 1.0);
  const double e2f = std::abs(ground(2001, Stencil::order2, 12.0) - 1.0);
  const double slope2 = std::log2(e2c / e2f);
  CHECK(slope2 > 1.8);
  CHECK(slope2 < 2.2);

  const double e4c = std::abs(ground(201, Stencil::order4, 10.0) - 1.0);
  const double e4f = std::abs(ground(401, Stencil::order4, 10.0) - 1.0);
  const double slope4 = std::log2(e4c / e4f);
  CHECK(slope4 > 3.5);
  CHECK(slope4 < 4.6);
  CHECK(e4c < e2c);
}

TEST_CASE("assemble writes the field term exactly") {
  const ProfilePtr field = make_constant_field(2.0, 0.3);
  const Grid g(-1.0, 1.0, 11);
  const FiberOperator op = assemble(*field, 1.1, 0.5, g, Stencil::order2);
  REQUIRE(op.c.size() == g.n);
  double floor = 1e300;
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(op.c[i] == doctest::Approx(0.8 - 2.0 * g.point(i)).epsilon(1e-13));
    if (i > 0 && i + 1 < g.n) floor = std::min(floor, op.c[i] * op.c[i]);
  }
  CHECK(op.potential_floor == doctest::Approx(floor).epsilon(1e-13));
  CHECK(op.interior() == g.n - 2);
  CHECK(op.pencil.A.diag.size() == g.n - 2);
}

TEST_CASE("eigenvector helper returns a normalized grid function") {
  const ProfilePtr field = make_constant_field(1.0);
  const FiberOperator op =
      assemble(*field, 0.0, 1.0, Grid(-10.0, 10.0, 801), Stencil::order4);
  EigenSolveTols tols;
  const double lambda = eigenvalues_below(op.pencil, 2.0, tols, 1).at(0);
  Tolerances tol;
  const EigenPair pair = eigenvector(op, lambda, tol);
  REQUIRE(pair.psi.size() == op.grid.n);
  CHECK(pair.psi.front() == 0.0);
  CHECK(pair.psi.back() == 0.0);
  CHECK(pair.residual < 1e-7);

  // ground state of x^2: psi ~ exp(-x^2/2) up to normalization, no nodes
  const double mid = pair.psi[op.grid.n / 2];
  CHECK(mid > 0.0);
  for (double v : pair.psi) CHECK(v >= -1e-10 * mid);
  // discrete L2 normalization in the pencil's B-weighted inner product
  double mass = 0.0;
  if (op.pencil.generalized()) {
    const std::size_t m = op.interior();
    const auto& B = op.pencil.B;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = pair.psi[i + 1];
      mass += B.diag[i] * u * u;
      if (i + 1 < m) mass += 2.0 * B.off[i] * u * pair.psi[i + 2];
    }
  } else {
    for (double v : pair.psi) mass += v * v;
  }
  mass *= op.spacing();
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("auto_domain covers the classical region and respects policy") {
  const ProfilePtr field = make_gaussian_field();
  GridPolicy pol;
  const double e_solve = 0.2;
  const Grid g = auto_domain(*field, 0.5, 0.1, e_solve, e_solve, pol);
  const double tp_lo = field->turning_point(0.5 - std::sqrt(e_solve));
  const double tp_hi = field->turning_point(0.5 + std::sqrt(e_solve));
  CHECK(g.x_min < tp_lo);
  CHECK(g.x_max > tp_hi);
  CHECK(g.n >= pol.min_points);
  const double ell = well_length_scale(*field, 0.5, 0.1);
  CHECK(g.spacing() <= 1.2 * ell / pol.points_per_length);

  // cutoff at or above an asymptotic flux level: no Dirichlet truncation works
  CHECK_THROWS_WITH_AS((void)auto_domain(*field, 0.5, 0.1, 0.3, 0.3, pol),
                       doctest::Contains("flux level"), NumericalError);
  // fiber whose classical window misses the range of a entirely
  CHECK_THROWS_WITH_AS((void)auto_domain(*field, 2.0, 0.1, 0.25, 0.2, pol),
                       doctest::Contains("classically allowed"), NumericalError);
}

TEST_CASE("well length scale") {
  const ProfilePtr field = make_gaussian_field();
  CHECK(well_length_scale(*field, 0.5, 0.04) ==
        doctest::Approx(std::sqrt(0.04 * std::sqrt(std::numbers::pi))).epsilon(1e-12));
}

}  // TEST_SUITE
