#include "fiberband/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "fiberband/errors.hpp"
#include "fiberband/log.hpp"

namespace fiberband {

std::vector<double> harmonic_levels(double v_theta, double h,
                                    std::size_t n_max) {
  if (!(v_theta > 0.0) || !(h > 0.0))
    throw NumericalError("harmonic_levels: scales must be positive");
  std::vector<double> out(n_max);
  for (std::size_t n = 1; n <= n_max; ++n)
    out[n - 1] = (2.0 * double(n) - 1.0) * h * v_theta;
  return out;
}

HarmonicComparison compare_harmonic(const FieldProfile& profile, double theta,
                                    const std::vector<double>& hs,
                                    std::size_t n_max, double eta,
                                    const GridPolicy& policy,
                                    const Tolerances& tol,
                                    const ExecPolicy& exec) {
  if (hs.empty() || n_max < 1)
    throw NumericalError("compare_harmonic: nothing to compare");
  HarmonicComparison hc;
  hc.theta = theta;
  hc.v_theta = effective_velocity(profile, theta);
  const ExtendedReal thr = ess_threshold(profile, theta);
  if (!(eta > 0.0)) {
    if (thr.finite()) {
      eta = 0.5 * thr.value();
    } else {
      const double hmax = *std::max_element(hs.begin(), hs.end());
      eta = (2.0 * double(n_max) + 1.0) * hmax * hc.v_theta;
    }
  }
  hc.eta = eta;
  if (!(eta > 0.0))
    throw NumericalError("compare_harmonic: empty energy window");

  std::vector<SliceResult> slices(hs.size());
  parallel_for(hs.size(), exec, [&](std::size_t i) {
    slices[i] = compute_slice(profile, theta, hs[i], policy, tol,
                              static_cast<long long>(n_max), eta);
  });

  for (std::size_t i = 0; i < hs.size(); ++i) {
    const SliceResult& s = slices[i];
    const std::size_t avail = std::min<std::size_t>(n_max, s.count());
    for (std::size_t n = 1; n <= avail; ++n) {
      const double level = (2.0 * double(n) - 1.0) * hs[i] * hc.v_theta;
      if (level >= eta) continue;  // ladder step outside the trusted window
      HarmonicComparison::Entry e;
      e.h = hs[i];
      e.n = n;
      e.lambda = s.lambda[n - 1];
      e.harmonic = level;
      e.rel_err = std::abs(e.lambda - level) / ((2.0 * double(n) - 1.0) * hs[i]);
      e.budget = s.error_budget[n - 1];
      hc.entries.push_back(e);
    }
  }
  return hc;
}

CountingCheck counting_check(const FieldProfile& profile, double h, double eta,
                             const GridPolicy& policy, const Tolerances& tol) {
  if (!(h > 0.0) || !(eta > 0.0))
    throw NumericalError("counting_check: h and eta must be positive");
  CountingCheck cc;
  cc.h = h;
  cc.eta = eta;

  // Strongest fiber over the central 80 percent of the flux window.
  const FluxRange fr = flux_range(profile);
  double lo = fr.lo.finite() ? fr.lo.value() : profile.a(-8.0);
  double hi = fr.hi.finite() ? fr.hi.value() : profile.a(8.0);
  if (lo > hi) std::swap(lo, hi);
  const double w = hi - lo;
  lo += 0.1 * w;
  hi -= 0.1 * w;
  for (int i = 0; i <= 80; ++i) {
    const double th = (w > 0.0) ? lo + (hi - lo) * double(i) / 80.0 : lo;
    try {
      const double v = effective_velocity(profile, th);
      if (v > cc.v_plus) {
        cc.v_plus = v;
        cc.theta_star = th;
      }
    } catch (const NumericalError&) {
      // level not attained; skip
    }
    if (w <= 0.0) break;
  }
  if (!(cc.v_plus > 0.0))
    throw NumericalError(
        "counting_check: no fiber with positive field strength in the window");

  cc.bound = static_cast<long long>(
      std::ceil(eta / (4.0 * cc.v_plus * h) - 1.0));
  if (cc.bound < 0) cc.bound = 0;

  const SliceResult s =
      compute_slice(profile, cc.theta_star, h, policy, tol, -1, eta);
  cc.observed = static_cast<long long>(s.count());
  cc.regime_flagged = eta * std::pow(std::abs(std::log(h)), 6.0) > 1.0;
  if (cc.regime_flagged)
    log::info("counting_check: eta |ln h|^6 = %.4g > 1, the lower bound is "
              "used outside its asymptotic regime",
              eta * std::pow(std::abs(std::log(h)), 6.0));
  cc.pass = cc.observed >= cc.bound;
  return cc;
}

// ---------------------------------------------------------------------------

double agmon_identity_residual(const FiberOperator& op, const EigenPair& pair,
                               const std::function<double(double)>& weight,
                               const std::function<double(double)>& dweight) {
  if (op.stencil != Stencil::order2)
    throw NumericalError("weighted identity requires the plain stencil");
  const std::size_t n = op.grid.n;
  if (pair.psi.size() != n)
    throw NumericalError("weighted identity: eigenvector does not match the grid");
  const double dx = op.grid.spacing();
  const double te = (op.h * op.h) / dx;  // edge weight h^2/dx
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(weight(op.grid.point(i))) * pair.psi[i];
  double s1 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = g[i + 1] - g[i];
    s1 += te * d * d;
  }
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = op.c[i] * op.c[i];
    const double dw = dweight(op.grid.point(i));
    s2 += (v - op.h * op.h * dw * dw - pair.lambda) * g[i] * g[i] * dx;
  }
  return s1 + s2;
}

AgmonCheck agmon_decay_check(const FieldProfile& profile, double xi, double h,
                             std::size_t band,
                             std::optional<double> gamma_override,
                             const GridPolicy& policy, const Tolerances& tol) {
  if (band < 1) throw NumericalError("agmon: band index is 1-based");
  AgmonCheck ac;
  const SliceResult probe =
      compute_slice(profile, xi, h, policy, tol, static_cast<long long>(band));
  if (probe.status != SliceStatus::ok || probe.count() < band)
    throw NumericalError("agmon: requested band not found below the cutoff");
  const double lam = probe.lambda[band - 1];
  ac.lambda = lam;
  ac.threshold = probe.threshold.finite()
                     ? probe.threshold.value()
                     : std::numeric_limits<double>::infinity();
  const double c = profile.turning_point(xi);

  if (gamma_override) {
    ac.gamma = *gamma_override;
  } else {
    // Pick the decay rate from the best fraction kappa of the gap: on the
    // region {V < (1+2 kappa) lambda} the potential dominates c_E s^2, and
    // the rate sqrt(kappa c_E)/2 keeps the weighted form coercive there.
    double best = -1.0, best_kappa = 0.0;
    const double v0 = profile.b(c);
    for (int ik = 1; ik <= 19; ++ik) {
      const double kappa = 0.05 * double(ik);
      const double cap = (1.0 + 2.0 * kappa) * lam;
      if (probe.threshold.finite() &&
          !(cap < probe.threshold.value() * (1.0 - 1e-6)))
        break;
      double t1, t2;
      try {
        t1 = profile.turning_point(xi - std::sqrt(cap));
        t2 = profile.turning_point(xi + std::sqrt(cap));
      } catch (const NumericalError&) {
        break;
      }
      const double slo = std::min(t1, t2) - c;
      const double shi = std::max(t1, t2) - c;
      double ce = v0 * v0;  // s -> 0 limit of V / s^2
      for (int i = 0; i <= 2000; ++i) {
        const double s = slo + (shi - slo) * double(i) / 2000.0;
        if (std::abs(s) < 1e-12 * (1.0 + std::abs(shi) + std::abs(slo)))
          continue;
        const double cc = xi - profile.a(c + s);
        const double v = cc * cc;
        if (v < cap) ce = std::min(ce, v / (s * s));
      }
      if (!(ce > 0.0)) continue;
      if (kappa * ce > best) {
        best = kappa * ce;
        best_kappa = kappa;
      }
    }
    if (!(best > 0.0))
      throw NumericalError(
          "agmon: level too close to the essential threshold for a decay rate");
    ac.kappa = best_kappa;
    ac.gamma = 0.5 * std::sqrt(best);
  }

  auto ratio_on = [&](const GridPolicy& pol) {
    const SliceResult r =
        compute_slice(profile, xi, h, pol, tol, static_cast<long long>(band));
    if (r.status != SliceStatus::ok || r.count() < band)
      throw NumericalError("agmon: band lost while re-solving");
    const FiberOperator op = slice_operator(profile, r, Stencil::order2);
    const EigenPair ep = eigenvector(op, r.lambda_coarse[band - 1], tol);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < op.grid.n; ++i)
      if (std::abs(ep.psi[i]) > std::abs(ep.psi[peak])) peak = i;
    // The computed tail bottoms out at the linear-solve noise floor instead
    // of following the true decay, and the far-field weight amplifies that
    // junk without bound. Only the contiguous stretch around the peak that
    // stays above a residual-tied floor carries decay information.
    const double trust =
        std::abs(ep.psi[peak]) * std::max(100.0 * ep.residual, 1e-12);
    std::size_t lo = peak, hi = peak;
    while (lo > 0 && std::abs(ep.psi[lo - 1]) >= trust) --lo;
    while (hi + 1 < op.grid.n && std::abs(ep.psi[hi + 1]) >= trust) ++hi;
    double num = 0.0, den = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
      const double x = op.grid.point(i);
      const double wgt =
          std::exp(2.0 * ac.gamma * std::abs(x - c) / std::sqrt(lam));
      num += wgt * ep.psi[i] * ep.psi[i];
      den += ep.psi[i] * ep.psi[i];
    }
    return num / den;
  };
  GridPolicy base = policy;
  base.stencil = Stencil::order2;
  ac.ratio = ratio_on(base);
  GridPolicy wide = base;
  wide.margin_scale *= 2.0;
  ac.ratio_doubled = ratio_on(wide);
  ac.stable = ac.ratio_doubled < 2.0 * ac.ratio + 1e-12;
  ac.pass = ac.ratio <= ac.cap && ac.stable;
  return ac;
}

// ---------------------------------------------------------------------------

namespace {

class RescaledProfile final : public FieldProfile {
 public:
  RescaledProfile(std::unique_ptr<FieldProfile> base, double x0, double xi,
                  double a0)
      : FieldProfile(a0), base_(std::move(base)), x0_(x0), xi_(xi) {}

  std::string name() const override { return base_->name() + "(rescaled)"; }

  double b(double s) const override {
    return (x0_ / xi_) * base_->b(x0_ * (1.0 + s));
  }
  double db(double s) const override {
    return (x0_ * x0_ / xi_) * base_->db(x0_ * (1.0 + s));
  }
  double a(double s) const override {
    return a0() + base_->flux_between(x0_, x0_ * (1.0 + s)) / xi_;
  }
  double flux_between(double s1, double s2) const override {
    return base_->flux_between(x0_ * (1.0 + s1), x0_ * (1.0 + s2)) / xi_;
  }
  ExtendedReal flux_lower() const override {
    const ExtendedReal phi = base_->flux_lower();
    if (!phi.finite()) return phi;
    return ExtendedReal(a0() + (phi.value() - xi_) / xi_);
  }
  ExtendedReal flux_upper() const override {
    const ExtendedReal phi = base_->flux_upper();
    if (!phi.finite()) return phi;
    return ExtendedReal(a0() + (phi.value() - xi_) / xi_);
  }
  double flux_tail(double s, int direction) const override {
    return base_->flux_tail(x0_ * (1.0 + s), direction) / xi_;
  }
  double turning_point(double value) const override {
    const double x = base_->turning_point(xi_ * (1.0 + value - a0()));
    return x / x0_ - 1.0;
  }
  bool monotone_flux() const override { return base_->monotone_flux(); }
  bool tail_flagged() const override { return base_->tail_flagged(); }
  std::unique_ptr<FieldProfile> with_gauge(double delta) const override {
    return std::unique_ptr<FieldProfile>(
        new RescaledProfile(base_->clone(), x0_, xi_, a0() + delta));
  }
  std::unique_ptr<FieldProfile> clone() const override {
    return std::unique_ptr<FieldProfile>(
        new RescaledProfile(base_->clone(), x0_, xi_, a0()));
  }

 private:
  std::unique_ptr<FieldProfile> base_;
  double x0_, xi_;
};

}  // namespace

RescaledFiber make_rescaled(const FieldProfile& profile, double xi) {
  if (!(xi > 0.0) || !std::isfinite(xi))
    throw NumericalError("rescaling requires a positive finite level");
  const double x0 = profile.turning_point(xi);
  if (!(x0 > 0.0))
    throw NumericalError("rescaling requires the level on the increasing side");
  const double bx = profile.b(x0);
  if (!(bx > 0.0))
    throw NumericalError("rescaling requires a positive field at the turning point");
  RescaledFiber rf;
  rf.profile = std::unique_ptr<FieldProfile>(
      new RescaledProfile(profile.clone(), x0, xi, 0.0));
  rf.x0 = x0;
  rf.h = 1.0 / (xi * x0);
  rf.v0 = x0 * bx / xi;
  rf.scale = xi * xi;
  return rf;
}

double power_law_slope(double alpha) {
  if (!(alpha > -1.0))
    throw NumericalError("power-law growth needs exponent above -1");
  return alpha / (1.0 + alpha);
}

double power_law_coeff(double c1, double alpha, std::size_t n) {
  if (!(c1 > 0.0) || !(alpha > -1.0) || n < 1)
    throw NumericalError("power_law_coeff: invalid parameters");
  const double c0 = c1 / (1.0 + alpha);
  return (2.0 * double(n) - 1.0) * c1 * std::pow(c0, -alpha / (1.0 + alpha));
}

AsymptoticFit asymptotic_fit(const FieldProfile& profile,
                             const std::vector<double>& xis, std::size_t n_max,
                             bool rescaled, const GridPolicy& policy,
                             const Tolerances& tol, const ExecPolicy& exec) {
  if (xis.size() < 2)
    throw NumericalError("asymptotic_fit needs at least two levels");
  if (n_max < 1) throw NumericalError("asymptotic_fit: n_max must be positive");
  AsymptoticFit fit;
  fit.xis = xis;
  fit.rescaled = rescaled;

  std::vector<std::vector<double>> lam(xis.size());
  parallel_for(xis.size(), exec, [&](std::size_t i) {
    const double xi = xis[i];
    SliceResult s;
    double scale = 1.0;
    if (rescaled) {
      const RescaledFiber rf = make_rescaled(profile, xi);
      Tolerances trel = tol;
      trel.eigen_abs = 0.0;  // rescaled levels shrink like 1/(xi x0)
      const double emax = 2.0 * double(n_max) * rf.h * rf.v0;
      s = compute_slice(*rf.profile, 0.0, rf.h, policy, trel,
                        static_cast<long long>(n_max), emax);
      scale = rf.scale;
    } else {
      const double v = effective_velocity(profile, xi);
      const double emax = 2.0 * double(n_max) * v;
      s = compute_slice(profile, xi, 1.0, policy, tol,
                        static_cast<long long>(n_max), emax);
    }
    if (s.count() < n_max)
      throw NumericalError("asymptotic_fit: band above the energy cap at xi=" +
                           std::to_string(xi));
    lam[i].resize(n_max);
    for (std::size_t n = 0; n < n_max; ++n) lam[i][n] = scale * s.lambda[n];
  });

  for (std::size_t n = 1; n <= n_max; ++n) {
    AsymptoticFit::BandFit bf;
    bf.n = n;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(xis.size());
    for (std::size_t i = 0; i < xis.size(); ++i) {
      const double l = lam[i][n - 1];
      if (!(l > 0.0))
        throw NumericalError("asymptotic_fit: nonpositive eigenvalue breaks the log fit");
      const double x = std::log(xis[i]);
      const double y = std::log(l);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      bf.lambdas.push_back(l);
    }
    const double denom = m * sxx - sx * sx;
    if (!(std::abs(denom) > 0.0))
      throw NumericalError("asymptotic_fit: degenerate abscissae");
    bf.slope = (m * sxy - sx * sy) / denom;
    bf.intercept = (sy - bf.slope * sx) / m;
    bf.coeff = std::exp(bf.intercept);
    fit.bands.push_back(std::move(bf));
  }
  return fit;
}

}  // namespace fiberband
