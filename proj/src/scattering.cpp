#include "fiberband/scattering.hpp"

#include <algorithm>
#include <cmath>

#include "fiberband/errors.hpp"
#include "fiberband/quadrature.hpp"
#include "fiberband/spectral.hpp"

namespace fiberband {

namespace {

double sq(double x) { return x * x; }

// Signed short-range coupling w = V - (xi - phi)^2 at distance t along the
// side, written as u (2(xi - phi) + u) with u = phi - a so the flux tail is
// used instead of a difference of squares.
struct Coupling {
  const FieldProfile* profile;
  double xi, phi;
  int side;
  double operator()(double t) const {
    const double x = double(side) * t;
    const double mag = profile->flux_tail(x, side);
    const double u = (phi - profile->a(x) >= 0.0) ? mag : -mag;
    return u * (2.0 * (xi - phi) + u);
  }
};

double auto_cut(const FieldProfile& profile, int side, double scale) {
  double cut = 4.0;
  while (cut < 64.0 &&
         profile.flux_tail(double(side) * cut, side) * scale > 1e-16)
    cut *= 1.5;
  return std::min(cut, 64.0);
}

}  // namespace

JostCoefficients volterra_coefficients(const FieldProfile& profile, double xi,
                                       double lambda, int side,
                                       std::complex<double> psi0,
                                       std::complex<double> dpsi0,
                                       const OdeOptions& opt, double x_cut) {
  if (side != 1 && side != -1)
    throw NumericalError("volterra_coefficients: side must be +1 or -1");
  const ExtendedReal phiE =
      side > 0 ? profile.flux_upper() : profile.flux_lower();
  if (!phiE.finite())
    throw NumericalError("volterra_coefficients: side carries infinite flux");
  const double phi = phiE.value();
  const double k2 = lambda - sq(xi - phi);
  if (k2 < -1e-12 * (1.0 + std::abs(lambda)))
    throw NumericalError(
        "volterra_coefficients: level below the propagation threshold");
  const double omega = std::sqrt(std::max(0.0, k2));
  const Coupling w{&profile, xi, phi, side};

  JostCoefficients jc;
  jc.omega = omega;
  double cut = std::abs(x_cut);
  if (!(cut > 0.0)) cut = auto_cut(profile, side, 1.0 + std::abs(xi - phi));
  jc.x_cut = double(side) * cut;

  // Work in the distance variable t >= 0: chi(t) = psi(side * t) satisfies
  // the same equation with the coupling above and chi'(0) = side * psi'(0).
  const std::complex<double> chi0 = psi0;
  const std::complex<double> dchi0 = double(side) * dpsi0;

  OdeStats stats;
  double vmax = 0.0;

  if (omega > 0.0) {
    const std::complex<double> iw(0.0, 1.0);
    State2 v0{0.5 * chi0 + dchi0 / (2.0 * iw * omega),
              0.5 * chi0 - dchi0 / (2.0 * iw * omega)};
    auto rhs = [&](double t, const State2& v) -> State2 {
      const std::complex<double> m(0.0, -w(t) / (2.0 * omega));
      const std::complex<double> sum = v[0] + v[1];
      return State2{iw * omega * v[0] + m * sum,
                    -iw * omega * v[1] - m * sum};
    };

    // Gronwall envelope: ||V(t)|| <= ||V(0)|| exp(int |w|/omega), checked at
    // every accepted step with a Simpson update of the exponent.
    const double n0 = std::sqrt(std::norm(v0[0]) + std::norm(v0[1]));
    double acc = 0.0, prev_t = 0.0, prev_w = std::abs(w(0.0));
    jc.gronwall_max = 0.0;
    auto monitor = [&](double t, const State2& v) {
      const double nv = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
      vmax = std::max(vmax, nv);
      if (t > prev_t) {
        const double wm = std::abs(w(0.5 * (prev_t + t)));
        const double wc = std::abs(w(t));
        acc += (t - prev_t) / 6.0 * (prev_w + 4.0 * wm + wc) / omega;
        prev_t = t;
        prev_w = wc;
      }
      if (n0 > 0.0) {
        const double ratio = nv / (n0 * std::exp(acc));
        jc.gronwall_max = std::max(jc.gronwall_max, ratio);
      }
    };
    const State2 vend = integrate_dp54(rhs, v0, 0.0, cut, opt, &stats, monitor);
    jc.gronwall_ok = jc.gronwall_max <= 1.0 + 1e-9;
    const std::complex<double> ph = std::exp(iw * omega * cut);
    jc.a = vend[0] / ph;
    jc.b = vend[1] * ph;

    double tail_quad = 0.0;
    const double T = integrate_to_infinity(
        [&](double t) { return std::abs(w(t)); }, cut, 1e-14, &tail_quad);
    jc.tail_bound = (T + tail_quad) / omega * std::max(1.0, vmax);
  } else {
    // Threshold energy: psi tends to a + b x; track (chi, chi') directly.
    auto rhs = [&](double t, const State2& u) -> State2 {
      return State2{u[1], w(t) * u[0]};
    };
    State2 u0{chi0, dchi0};
    auto monitor = [&](double, const State2& u) {
      vmax = std::max(vmax, std::sqrt(std::norm(u[0]) + std::norm(u[1])));
    };
    const State2 uend = integrate_dp54(rhs, u0, 0.0, cut, opt, &stats, monitor);
    jc.a = uend[0] - cut * uend[1];
    jc.b = uend[1];
    double tail_quad = 0.0;
    const double T = integrate_to_infinity(
        [&](double t) { return std::abs(w(t)) * (1.0 + t); }, cut, 1e-14,
        &tail_quad);
    jc.tail_bound = (T + tail_quad) * std::max(1.0, vmax);
  }

  // The integration produced amplitudes in the distance variable; on the
  // left side e^{i omega t} = e^{-i omega x}, so restoring the axis
  // convention swaps the pair (and flips the slope at threshold).
  if (side < 0) {
    if (omega > 0.0)
      std::swap(jc.a, jc.b);
    else
      jc.b = -jc.b;
  }

  jc.steps = stats.accepted;
  jc.rk_error = (double(stats.accepted) + 1.0) *
                (opt.rel_tol * std::max(1.0, vmax) + opt.abs_tol);
  return jc;
}

std::complex<double> asymptotic_wronskian(const JostCoefficients& j1,
                                          const JostCoefficients& j2) {
  if (std::abs(j1.omega - j2.omega) > 1e-12 * (1.0 + std::abs(j1.omega)))
    throw NumericalError("asymptotic_wronskian: mismatched frequencies");
  // A symmetric profile gives both sides the same frequency, but amplitudes
  // taken at opposite ends describe different asymptotic regions.
  if (j1.x_cut * j2.x_cut < 0.0)
    throw NumericalError(
        "asymptotic_wronskian: amplitudes live on opposite sides");
  const std::complex<double> d = j1.a * j2.b - j2.a * j1.b;
  if (j1.omega > 0.0)
    return -2.0 * std::complex<double>(0.0, 1.0) * j1.omega * d;
  return d;
}

ExclusionReport embedded_exclusion(const FieldProfile& profile, double xi,
                                   double lambda, const OdeOptions& opt) {
  ExclusionReport rep;
  rep.xi = xi;
  rep.lambda = lambda;

  const ExtendedReal thr = ess_threshold(profile, xi);
  if (!thr.finite())
    throw NumericalError(
        "embedded_exclusion: the essential spectrum of this fiber is empty");
  if (lambda < thr.value())
    throw NumericalError(
        "embedded_exclusion: level below the essential spectrum, nothing to "
        "exclude");

  double best = -1.0;
  int side = 0;
  for (const int s : {+1, -1}) {
    const ExtendedReal phi =
        s > 0 ? profile.flux_upper() : profile.flux_lower();
    if (!phi.finite()) continue;
    const double k2 = lambda - sq(xi - phi.value());
    if (k2 >= 0.0 && k2 > best) {
      best = k2;
      side = s;
    }
  }
  if (side == 0)
    throw NumericalError(
        "embedded_exclusion: no oscillatory short-range side at this level");
  rep.side = side;
  rep.omega = std::sqrt(best);

  rep.j1 = volterra_coefficients(profile, xi, lambda, side, 1.0, 0.0, opt);
  rep.j2 = volterra_coefficients(profile, xi, lambda, side, 0.0, 1.0, opt);
  rep.gronwall_ok = rep.j1.gronwall_ok && rep.j2.gronwall_ok;

  // J maps (psi, psi')(0) to the amplitudes; its smallest singular value
  // bounds from below the asymptotic size of every unit-data solution.
  const std::complex<double> det = rep.j1.a * rep.j2.b - rep.j2.a * rep.j1.b;
  const double fro = std::norm(rep.j1.a) + std::norm(rep.j1.b) +
                     std::norm(rep.j2.a) + std::norm(rep.j2.b);
  const double d2 = std::norm(det);
  const double disc = std::sqrt(std::max(0.0, fro * fro - 4.0 * d2));
  rep.sigma_min_sq = (fro + disc > 0.0) ? 2.0 * d2 / (fro + disc) : 0.0;

  const std::complex<double> expected =
      rep.omega > 0.0
          ? std::complex<double>(0.0, 1.0) / (2.0 * rep.omega)
          : std::complex<double>(1.0, 0.0);
  rep.det_drift = std::abs(det - expected) / std::abs(expected);

  rep.error_budget = rep.j1.rk_error + rep.j2.rk_error + rep.j1.tail_bound +
                     rep.j2.tail_bound + 1e-12;
  rep.excluded =
      rep.gronwall_ok && rep.sigma_min_sq > 1e3 * rep.error_budget;

  // Diagnostic: when the opposite side is forbidden, the only candidate
  // eigenfunction is its decaying solution; report how large it stays.
  const int other = -side;
  const ExtendedReal phiO =
      other > 0 ? profile.flux_upper() : profile.flux_lower();
  if (phiO.finite()) {
    const double kap2 = sq(xi - phiO.value()) - lambda;
    if (kap2 > 0.0) {
      rep.opposite_forbidden = true;
      const double kap = std::sqrt(kap2);
      double far = auto_cut(profile, other, 1.0 + std::abs(xi - phiO.value()));
      far = std::min(far, std::max(20.0 / kap, 2.0));
      const Coupling wo{&profile, xi, phiO.value(), other};
      auto rhs = [&](double t, const State2& u) -> State2 {
        return State2{u[1], (wo(t) + kap2) * u[0]};
      };
      State2 u0{1.0, -kap};
      const State2 uat0 = integrate_dp54(rhs, u0, far, 0.0, opt);
      const double nrm =
          std::sqrt(std::norm(uat0[0]) + std::norm(uat0[1]));
      if (nrm > 0.0) {
        const std::complex<double> p0 = uat0[0] / nrm;
        const std::complex<double> dp0 = double(other) * uat0[1] / nrm;
        const JostCoefficients jd =
            volterra_coefficients(profile, xi, lambda, side, p0, dp0, opt);
        rep.decaying_norm = std::sqrt(std::norm(jd.a) + std::norm(jd.b));
      }
    }
  }
  return rep;
}

}  // namespace fiberband
