#include "fiberband/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "fiberband/errors.hpp"
#include "fiberband/log.hpp"

namespace fiberband {

ExtendedReal ess_threshold(const FieldProfile& profile, double xi) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (ExtendedReal phi : {profile.flux_lower(), profile.flux_upper()}) {
    if (!phi.finite()) continue;
    any = true;
    const double d = xi - phi.value();
    best = std::min(best, d * d);
  }
  return any ? ExtendedReal(best) : ExtendedReal::plus_infinity();
}

SigmaSet sigma_lambda(const FieldProfile& profile, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw NumericalError("sigma_lambda: level must be nonnegative and finite");
  const double r = std::sqrt(lambda);
  std::vector<std::pair<double, double>> blocks;
  for (ExtendedReal phi : {profile.flux_lower(), profile.flux_upper()})
    if (phi.finite()) blocks.push_back({phi.value() - r, phi.value() + r});
  std::sort(blocks.begin(), blocks.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& b : blocks) {
    if (!merged.empty() && b.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, b.second);
    else
      merged.push_back(b);
  }
  SigmaSet out;
  out.lambda = lambda;
  if (merged.empty()) {
    out.components.push_back(
        {ExtendedReal::minus_infinity(), ExtendedReal::plus_infinity()});
    return out;
  }
  out.components.push_back(
      {ExtendedReal::minus_infinity(), ExtendedReal(merged.front().first)});
  for (std::size_t i = 1; i < merged.size(); ++i)
    out.components.push_back(
        {ExtendedReal(merged[i - 1].second), ExtendedReal(merged[i].first)});
  out.components.push_back(
      {ExtendedReal(merged.back().second), ExtendedReal::plus_infinity()});
  return out;
}

// ---------------------------------------------------------------------------

SliceResult compute_slice(const FieldProfile& profile, double xi, double h,
                          const GridPolicy& policy, const Tolerances& tol,
                          long long k_max, std::optional<double> e_max) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw NumericalError("compute_slice: field scale h must be positive and finite");
  SliceResult r;
  r.xi = xi;
  r.h = h;
  r.threshold = ess_threshold(profile, xi);

  // The threshold standoff is frozen from the pre-solve spacing estimate so
  // the cutoff does not move between the base and the refined grid.
  const double ell = well_length_scale(profile, xi, h);
  const double dx_est =
      std::isfinite(ell) ? ell / policy.points_per_length : 0.0;
  r.buffer = 10.0 * dx_est * dx_est + 1e-6;

  double e_solve;
  if (r.threshold.finite()) {
    e_solve = r.threshold.value() - r.buffer;
    if (e_max && *e_max < e_solve) e_solve = *e_max;
  } else {
    e_solve = e_max ? *e_max : policy.e_cap;
  }
  r.e_solve = e_solve;
  // The limit-based floor is a true potential minimum only for fields of a
  // single sign; otherwise zero is the only cheap certainty.
  r.floor = profile.monotone_flux() ? potential_floor(profile, xi) : 0.0;
  if (e_solve <= 0.0 || r.floor >= e_solve) {
    r.status = SliceStatus::empty;
    return r;
  }

  double e_ref = e_solve;
  if (r.threshold.finite()) {
    const double protect = r.threshold.value() - 2.0 * r.buffer;
    if (protect > 0.0 && protect < e_ref) e_ref = protect;
  }

  r.grid = auto_domain(profile, xi, h, e_solve, e_ref, policy);
  const FiberOperator op = assemble(profile, xi, h, r.grid, policy.stencil);
  const EigenSolveTols et{tol.eigen_abs * std::max(1.0, e_solve),
                          tol.eigen_rel};
  std::vector<double> lc = eigenvalues_below(op.pencil, e_solve, et, k_max);

  const double tol_lambda = et.abs_tol;
  if (!policy.refine) {
    r.lambda = lc;
    r.lambda_coarse = std::move(lc);
    r.error_budget.resize(r.lambda.size());
    r.near_threshold.resize(r.lambda.size());
    for (std::size_t i = 0; i < r.lambda.size(); ++i) {
      // Without the refinement pass the budget cannot see discretization
      // error; it only covers truncation and the eigenvalue tolerance.
      r.error_budget[i] = policy.epsilon_trunc * (1.0 + std::abs(r.lambda[i])) +
                          tol_lambda + tol.eigen_rel * std::abs(r.lambda[i]);
      r.near_threshold[i] =
          r.threshold.finite() &&
          r.lambda[i] > r.threshold.value() - 2.0 * r.buffer;
    }
    return r;
  }

  const FiberOperator op2 =
      assemble(profile, xi, h, r.grid.refined(), policy.stencil);
  std::vector<double> lf = eigenvalues_below(op2.pencil, e_solve, et, k_max);
  const std::size_t k = std::min(lc.size(), lf.size());
  if (lc.size() != lf.size())
    log::debug("slice xi=%.9g: %zu coarse vs %zu refined eigenvalues below cutoff",
               xi, lc.size(), lf.size());

  r.lambda.resize(k);
  r.lambda_coarse.assign(lc.begin(), lc.begin() + k);
  r.error_budget.resize(k);
  r.near_threshold.resize(k);
  const bool o2 = policy.stencil == Stencil::order2;
  for (std::size_t i = 0; i < k; ++i) {
    const double extr = o2 ? (4.0 * lf[i] - lc[i]) / 3.0
                           : (16.0 * lf[i] - lc[i]) / 15.0;
    r.lambda[i] = extr;
    r.error_budget[i] = 2.0 * std::abs(lc[i] - lf[i]) +
                        policy.epsilon_trunc * (1.0 + std::abs(extr)) +
                        tol_lambda + tol.eigen_rel * std::abs(extr);
    r.near_threshold[i] =
        r.threshold.finite() && extr > r.threshold.value() - 2.0 * r.buffer;
  }
  return r;
}

FiberOperator slice_operator(const FieldProfile& profile, const SliceResult& r,
                             Stencil stencil) {
  if (r.status != SliceStatus::ok)
    throw NumericalError("slice_operator: slice has no spectrum below the cutoff");
  return assemble(profile, r.xi, r.h, r.grid, stencil);
}

BandDiagram sweep_bands(const FieldProfile& profile,
                        const std::vector<double>& xis, double h,
                        const GridPolicy& policy, const Tolerances& tol,
                        long long k_max, const ExecPolicy& exec) {
  BandDiagram d;
  d.h = h;
  d.k_max = k_max;
  d.slices.resize(xis.size());
  parallel_for(xis.size(), exec, [&](std::size_t i) {
    SliceRecord& rec = d.slices[i];
    rec.xi = xis[i];
    try {
      rec.result = compute_slice(profile, xis[i], h, policy, tol, k_max);
      rec.valid = true;
    } catch (const NumericalError& e) {
      rec.valid = false;
      rec.error = e.what();
      log::warn("slice xi=%.9g failed: %s", xis[i], e.what());
    }
  });
  return d;
}

double band_derivative(const FiberOperator& op, const EigenPair& pair) {
  const std::size_t n = op.grid.n;
  if (pair.psi.size() != n)
    throw NumericalError("band_derivative: eigenvector does not match the grid");
  const double dx = op.grid.spacing();
  // d/dxi of the quadratic form; the eigenvector normalization makes the
  // mass form equal to one, so no denominator appears.
  if (op.stencil == Stencil::order2) {
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
      s += 2.0 * op.c[i] * pair.psi[i] * pair.psi[i];
    return s * dx;
  }
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i)
    s += (10.0 / 12.0) * 2.0 * op.c[i] * pair.psi[i] * pair.psi[i];
  for (std::size_t i = 1; i + 2 < n; ++i)
    s += 2.0 * pair.psi[i] * pair.psi[i + 1] *
         (2.0 * op.c[i] + 2.0 * op.c[i + 1]) / 24.0;
  return s * dx;
}

// ---------------------------------------------------------------------------

const char* to_string(FlatVerdict v) {
  switch (v) {
    case FlatVerdict::flat: return "FLAT";
    case FlatVerdict::non_flat_oscillation: return "NON-FLAT(oscillation)";
    case FlatVerdict::non_flat_off_level: return "NON-FLAT(off-level)";
    case FlatVerdict::non_flat_divergence: return "NON-FLAT(divergence)";
    case FlatVerdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

const char* to_string(Excluded e) {
  switch (e) {
    case Excluded::yes: return "yes";
    case Excluded::no: return "no";
    case Excluded::inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

struct Sample {
  double xi = 0.0;
  bool solved = false;
  bool empty = false;
  std::string error;
  double e_solve = 0.0;
  double floor = 0.0;
  std::vector<double> vals, buds;
};

Sample take_sample(const FieldProfile& profile, double xi, double h,
                   const GridPolicy& policy, const Tolerances& tol) {
  Sample s;
  s.xi = xi;
  try {
    SliceResult r = compute_slice(profile, xi, h, policy, tol, -1);
    s.solved = true;
    s.empty = r.status == SliceStatus::empty;
    s.e_solve = r.e_solve;
    s.floor = r.floor;
    s.vals = std::move(r.lambda);
    s.buds = std::move(r.error_budget);
  } catch (const NumericalError& e) {
    s.error = e.what();
  }
  return s;
}

std::vector<double> cheb_nodes(double lo, double hi, std::size_t m) {
  std::vector<double> x(m);
  const double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
  for (std::size_t j = 0; j < m; ++j)
    x[j] = mid + rad * std::cos(std::numbers::pi * (2.0 * double(j) + 1.0) /
                                (2.0 * double(m)));
  std::sort(x.begin(), x.end());
  return x;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Exclusion certificate at one fiber: every band sits ten budgets away from
// the level (the unresolved remainder is above the cutoff). Bands are
// analytic across a spectral-gap component, so a single separated fiber
// rules out a flat band on the whole component.
bool sample_certifies(const Sample& s, double lambda) {
  if (!s.solved) return false;
  // An empty fiber was never discretized: only the analytic potential floor
  // bounds its spectrum.
  if (s.empty) return s.floor > lambda;
  double b = 0.0;
  for (double x : s.buds) b = std::max(b, x);
  const double margin = 10.0 * b;
  if (!(s.e_solve > lambda + margin)) return false;
  for (double v : s.vals)
    if (std::abs(v - lambda) <= margin) return false;
  return true;
}

// True when the fiber pins every band strictly above the level.
bool sample_all_above(const Sample& s, double lambda) {
  if (!s.solved) return false;
  if (s.empty) return s.floor > lambda;
  double b = 0.0;
  for (double x : s.buds) b = std::max(b, x);
  if (!(s.e_solve > lambda + 10.0 * b)) return false;
  for (double v : s.vals)
    if (v <= lambda + 10.0 * b) return false;
  return true;
}

std::vector<Sample> gather(const FieldProfile& profile, double h,
                           const std::vector<double>& nodes,
                           const GridPolicy& policy, const Tolerances& tol,
                           const ExecPolicy& exec) {
  std::vector<Sample> out(nodes.size());
  parallel_for(nodes.size(), exec, [&](std::size_t i) {
    out[i] = take_sample(profile, nodes[i], h, policy, tol);
  });
  return out;
}

// Looks for a band that matches the level at every sample within budget.
// Returns the 1-based index, 0 if none. Requires fully resolved samples.
long long flat_band_index(const std::vector<Sample>& ss, double lambda) {
  std::size_t k = std::numeric_limits<std::size_t>::max();
  double ball = 0.0;
  for (const Sample& s : ss) {
    if (!s.solved || s.empty) return 0;
    k = std::min(k, s.vals.size());
    for (double b : s.buds) ball = std::max(ball, b);
  }
  if (ss.empty() || k == 0) return 0;
  for (std::size_t m = 0; m < k; ++m) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double dev = 0.0;
    for (const Sample& s : ss) {
      lo = std::min(lo, s.vals[m]);
      hi = std::max(hi, s.vals[m]);
      dev = std::max(dev, std::abs(s.vals[m] - lambda));
    }
    if (dev <= ball && hi - lo <= ball) return static_cast<long long>(m + 1);
  }
  return 0;
}

// Verdict for the tracked band from fully resolved samples.
void tracked_verdict(const std::vector<Sample>& ss, double lambda,
                     long long band, ComponentReport& rep) {
  const std::size_t idx = static_cast<std::size_t>(band - 1);
  bool full = !ss.empty();
  bool above = !ss.empty();
  for (const Sample& s : ss) {
    full = full && s.solved && !s.empty && s.vals.size() > idx;
    above = above && sample_all_above(s, lambda);
  }
  if (!full) {
    if (above) {
      rep.verdict = FlatVerdict::non_flat_off_level;
      rep.detail = "band pinned above the level at every sampled fiber";
    } else {
      rep.verdict = FlatVerdict::inconclusive;
      rep.detail = "band not resolved at every sampled fiber";
      for (const Sample& s : ss)
        if (!s.solved) {
          rep.detail = "fiber solve failed: " + s.error;
          break;
        }
    }
    return;
  }

  std::vector<double> t;
  double budget = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double mind = std::numeric_limits<double>::infinity();
  bool sign_change = false;
  for (const Sample& s : ss) {
    const double v = s.vals[idx];
    t.push_back(v);
    budget = std::max(budget, s.buds[idx]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mind = std::min(mind, std::abs(v - lambda));
    if ((v - lambda) * (t.front() - lambda) < 0.0) sign_change = true;
  }
  rep.oscillation = hi - lo;
  rep.median_offset = std::abs(median_of(t) - lambda);
  rep.budget = budget;

  const bool crossing = mind <= 10.0 * budget || sign_change;
  if (!crossing) {
    rep.verdict = FlatVerdict::non_flat_off_level;
    rep.detail = "band never approaches the level";
    return;
  }
  if (rep.oscillation <= budget && rep.median_offset <= budget) {
    rep.verdict = FlatVerdict::flat;
    rep.detail = "band matches the level within budget at every sample";
  } else if (rep.oscillation > 10.0 * budget) {
    rep.verdict = FlatVerdict::non_flat_oscillation;
    rep.detail = "band varies across the component well beyond budget";
  } else if (rep.median_offset > 10.0 * budget) {
    rep.verdict = FlatVerdict::non_flat_off_level;
    rep.detail = "band sits off the level well beyond budget";
  } else {
    rep.verdict = FlatVerdict::inconclusive;
    rep.detail = "band variation lands between budget and the decision margin";
  }
}

}  // namespace

FlatnessReport flatness_test(const FieldProfile& profile, double h,
                             double lambda, const FlatnessOptions& opt,
                             const GridPolicy& policy, const Tolerances& tol,
                             const ExecPolicy& exec) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw NumericalError("flatness_test: level must be nonnegative and finite");
  if (opt.band < 1)
    throw NumericalError("flatness_test: band index is 1-based");
  if (!(opt.samples >= 3))
    throw NumericalError("flatness_test: need at least 3 samples per component");

  FlatnessReport rep;
  rep.lambda = lambda;
  rep.band = opt.band;
  const SigmaSet sig = sigma_lambda(profile, lambda);
  const FluxRange fr = flux_range(profile);
  const std::size_t m = std::max<std::size_t>(opt.samples, 9);

  bool flat_found = false;
  bool all_certified = true;

  for (const SigmaComponent& comp : sig.components) {
    ComponentReport cr;
    cr.component = comp;

    std::vector<Sample> ss;
    bool divergence = false;
    bool window_only = false;

    if (comp.bounded()) {
      ss = gather(profile, h, cheb_nodes(comp.lo.value(), comp.hi.value(), m),
                  policy, tol, exec);
    } else if (comp.lo.finite() != comp.hi.finite() &&
               profile.monotone_flux()) {
      // Half-line component. Beyond the point where the analytic potential
      // floor clears 2*lambda the band provably diverges; sample only the
      // stretch between the component edge and that point.
      const int dir = comp.lo.finite() ? +1 : -1;
      const double c = dir > 0 ? comp.lo.value() : comp.hi.value();
      const ExtendedReal edge = dir > 0 ? fr.hi : fr.lo;
      if (edge.finite()) {
        const double xdiv =
            edge.value() + dir * std::sqrt(2.0 * lambda);
        const double scale = std::max(1.0, std::sqrt(2.0 * lambda));
        bool probes_ok = true;
        double prev = -std::numeric_limits<double>::infinity();
        for (double off : {0.0, 1.0, 2.0, 4.0, 8.0}) {
          const double f = potential_floor(profile, xdiv + dir * off * scale);
          if (f < 2.0 * lambda * (1.0 - 1e-12) || f < prev * (1.0 - 1e-12)) {
            probes_ok = false;
            break;
          }
          prev = f;
        }
        divergence = probes_ok;
        if (divergence && dir * (xdiv - c) > 0.0) {
          const double a = dir > 0 ? c : xdiv;
          const double b = dir > 0 ? xdiv : c;
          ss = gather(profile, h, cheb_nodes(a, b, m), policy, tol, exec);
        }
      }
    }

    if (!divergence && ss.empty()) {
      // No certificate structure: fall back to a finite sampling window.
      const double lo = comp.lo.finite() ? std::max(comp.lo.value(), opt.window_lo)
                                         : opt.window_lo;
      const double hi = comp.hi.finite() ? std::min(comp.hi.value(), opt.window_hi)
                                         : opt.window_hi;
      if (comp.bounded()) {
        // already handled above; unreachable
      } else if (lo < hi) {
        window_only = true;
        ss = gather(profile, h, cheb_nodes(lo, hi, m), policy, tol, exec);
      }
    }

    cr.samples = ss.size();
    for (const Sample& s : ss)
      cr.certified = cr.certified || sample_certifies(s, lambda);

    if (divergence) {
      // All-empty or all-above prefixes keep the divergence label; a band
      // meeting the level on the prefix still disproves flatness, since the
      // floor drives it away further out.
      bool prefix_clear = true;
      for (const Sample& s : ss)
        prefix_clear = prefix_clear && sample_all_above(s, lambda);
      if (ss.empty() || prefix_clear) {
        cr.verdict = FlatVerdict::non_flat_divergence;
        cr.detail = "potential floor exceeds twice the level beyond the "
                    "sampled stretch; band diverges";
        cr.certified = cr.certified || ss.empty();
      } else {
        const long long fb = flat_band_index(ss, lambda);
        if (fb != 0) {
          cr.verdict = FlatVerdict::inconclusive;
          cr.detail = "sampled band hugs the level although the floor "
                      "forces divergence; budgets look inconsistent";
          cr.certified = false;
          log::warn("flatness: contradictory evidence on a divergent component"
                    " at lambda=%.9g", lambda);
        } else {
          tracked_verdict(ss, lambda, opt.band, cr);
          if (cr.verdict == FlatVerdict::flat ||
              cr.verdict == FlatVerdict::inconclusive) {
            cr.verdict = FlatVerdict::non_flat_oscillation;
            cr.detail = "band meets the level on a bounded stretch but "
                        "diverges beyond it";
          } else {
            cr.verdict = FlatVerdict::non_flat_divergence;
            cr.detail += "; band diverges beyond the sampled stretch";
          }
        }
      }
    } else if (ss.empty()) {
      cr.verdict = FlatVerdict::inconclusive;
      cr.detail = "sampling window does not reach the component";
      cr.certified = false;
    } else {
      tracked_verdict(ss, lambda, opt.band, cr);
      const long long fb = flat_band_index(ss, lambda);
      if (fb != 0) {
        flat_found = true;
        if (fb != opt.band)
          cr.detail += "; band " + std::to_string(fb) +
                       " matches the level across the samples";
      }
      if (window_only) {
        cr.detail += " (finite sampling window)";
        if (cr.verdict == FlatVerdict::flat) flat_found = true;
      }
    }

    all_certified = all_certified && cr.certified;
    if (cr.verdict == FlatVerdict::flat) flat_found = true;
    rep.components.push_back(std::move(cr));
  }

  if (flat_found)
    rep.excluded = Excluded::no;
  else if (all_certified && !rep.components.empty())
    rep.excluded = Excluded::yes;
  else
    rep.excluded = Excluded::inconclusive;
  return rep;
}

}  // namespace fiberband
