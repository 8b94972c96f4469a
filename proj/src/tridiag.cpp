#include "fiberband/tridiag.hpp"

#include <algorithm>
#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "fiberband/errors.hpp"
#include "fiberband/log.hpp"
#include "fiberband/quadrature.hpp"
#include "fiberband/rng.hpp"

namespace fiberband {

namespace {

double shifted_diag(const TridiagPencil& p, std::size_t i, double e) {
  return p.generalized() ? p.A.diag[i] - e * p.B.diag[i] : p.A.diag[i] - e;
}

double shifted_off(const TridiagPencil& p, std::size_t i, double e) {
  return p.generalized() ? p.A.off[i] - e * p.B.off[i] : p.A.off[i];
}

// y = S x for a symmetric tridiagonal S; identity when S is empty.
void sym_mul(const SymTridiag& s, const std::vector<double>& x,
             std::vector<double>& y) {
  const std::size_t n = x.size();
  y.resize(n);
  if (s.diag.empty()) {
    y = x;
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double v = s.diag[i] * x[i];
    if (i > 0) v += s.off[i - 1] * x[i - 1];
    if (i + 1 < n) v += s.off[i] * x[i + 1];
    y[i] = v;
  }
}

}  // namespace

int count_below(const TridiagPencil& p, double e) {
  const std::size_t n = p.size();
  if (n == 0) return 0;
  // Pivot floor keeps off^2 / pivot representable (LAPACK stebz convention).
  double max_off2 = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double o = shifted_off(p, i, e);
    max_off2 = std::max(max_off2, o * o);
  }
  const double pivmin = std::numeric_limits<double>::min() * max_off2;

  // A vanishing pivot means the shift hits an eigenvalue of a leading
  // minor; resolving it upward keeps the count strict (exact hits are not
  // "below").
  const auto clamp = [pivmin](double d) {
    if (std::abs(d) >= pivmin) return d;
    return d < 0.0 ? -pivmin : pivmin;
  };
  int count = 0;
  double d = clamp(shifted_diag(p, 0, e));
  if (d < 0.0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    const double o = shifted_off(p, i - 1, e);
    const double di = clamp(shifted_diag(p, i, e) - (o * o) / d);
    if (di < 0.0) ++count;
    d = di;
  }
  return count;
}

double eigenvalue_lower_bound(const TridiagPencil& p) {
  const std::size_t n = p.size();
  if (n == 0) return 0.0;
  auto row_lo = [](const SymTridiag& s, std::size_t i, std::size_t n) {
    double r = s.diag[i];
    if (i > 0) r -= std::abs(s.off[i - 1]);
    if (i + 1 < n) r -= std::abs(s.off[i]);
    return r;
  };
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) g = std::min(g, row_lo(p.A, i, n));
  if (!p.generalized()) return g;
  // Pencil eigenvalues are Rayleigh quotients x'Ax / x'Bx, so dividing the
  // A bound by the matching extremal B bound keeps it one-sided.
  double bmin = std::numeric_limits<double>::infinity();
  double bmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double hi = p.B.diag[i];
    if (i > 0) hi += std::abs(p.B.off[i - 1]);
    if (i + 1 < n) hi += std::abs(p.B.off[i]);
    bmax = std::max(bmax, hi);
    bmin = std::min(bmin, row_lo(p.B, i, n));
  }
  if (!(bmin > 0.0))
    throw NumericalError("mass matrix is not verifiably positive definite");
  return g >= 0.0 ? g / bmax : g / bmin;
}

double pencil_norm(const TridiagPencil& p, double lambda) {
  const std::size_t n = p.size();
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::abs(shifted_diag(p, i, lambda));
    if (i > 0) r += std::abs(shifted_off(p, i - 1, lambda));
    if (i + 1 < n) r += std::abs(shifted_off(p, i, lambda));
    norm = std::max(norm, r);
  }
  return std::max(norm, std::numeric_limits<double>::min());
}

std::vector<double> eigenvalues_below(const TridiagPencil& p, double e_max,
                                      const EigenSolveTols& tols,
                                      long long k_max) {
  std::vector<double> out;
  if (p.size() == 0 || !(e_max > -std::numeric_limits<double>::infinity()))
    return out;
  const long long total = count_below(p, e_max);
  const long long want = (k_max < 0) ? total : std::min<long long>(total, k_max);
  if (want <= 0) return out;

  double lo = eigenvalue_lower_bound(p);
  int clo = count_below(p, lo);
  for (int widen = 0; clo > 0 && widen < 64; ++widen) {
    lo -= std::max(1.0, std::abs(lo));
    clo = count_below(p, lo);
  }
  if (clo > 0)
    throw NumericalError("spectral bisection could not bracket the smallest eigenvalue");

  out.assign(static_cast<std::size_t>(want), 0.0);
  struct Iv {
    double lo, hi;
    long long clo, chi;  // eigenvalue indices clo..chi-1 live in (lo, hi]
  };
  std::vector<Iv> work;
  work.push_back({lo, e_max, 0, total});
  const double eps = std::numeric_limits<double>::epsilon();
  while (!work.empty()) {
    Iv iv = work.back();
    work.pop_back();
    if (iv.clo >= want || iv.chi <= iv.clo) continue;
    const double mid = 0.5 * (iv.lo + iv.hi);
    const double stop =
        std::max({tols.abs_tol, tols.rel_tol * std::abs(mid),
                  2.0 * eps * (std::abs(iv.lo) + std::abs(iv.hi)) + DBL_MIN});
    if (iv.hi - iv.lo <= stop) {
      const long long last = std::min(iv.chi, want);
      for (long long j = iv.clo; j < last; ++j)
        out[static_cast<std::size_t>(j)] = mid;
      continue;
    }
    long long cmid = count_below(p, mid);
    cmid = std::clamp(cmid, iv.clo, iv.chi);
    if (cmid > iv.clo) work.push_back({iv.lo, mid, iv.clo, cmid});
    if (cmid < iv.chi) work.push_back({mid, iv.hi, cmid, iv.chi});
  }
  return out;
}

namespace {

// Tridiagonal LU with partial pivoting (gttrf/gtts2 layout). Pivots below
// `floor` are replaced so near-singular shifts stay solvable; that is the
// standard inverse-iteration treatment of an exactly converged shift.
struct TriLU {
  std::vector<double> dl, d, du, du2;
  std::vector<unsigned char> swapped;
  double floor = 0.0;

  void factor() {
    const std::size_t n = d.size();
    swapped.assign(n > 0 ? n - 1 : 0, 0);
    du2.assign(n > 2 ? n - 2 : 0, 0.0);
    auto clamp = [&](double& v) {
      if (std::abs(v) < floor) v = (v < 0.0) ? -floor : floor;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        clamp(d[i]);
        const double m = dl[i] / d[i];
        dl[i] = m;
        d[i + 1] -= m * du[i];
      } else {
        const double m = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = m;
        const double t = du[i];
        du[i] = d[i + 1];
        d[i + 1] = t - m * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -m * du[i + 1];
        }
        swapped[i] = 1;
      }
    }
    if (n > 0) clamp(d[n - 1]);
  }

  // Solves in place. Rescales the whole vector when entries blow up; only
  // the direction of the solution is used by the caller.
  void solve(std::vector<double>& b) const {
    const std::size_t n = d.size();
    auto guard = [&b](double v) {
      if (std::abs(v) > 1e100) {
        for (double& e : b) e *= 1e-100;
      }
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!swapped[i]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double t = b[i];
        b[i] = b[i + 1];
        b[i + 1] = t - dl[i] * b[i];
      }
      guard(b[i + 1]);
    }
    b[n - 1] /= d[n - 1];
    guard(b[n - 1]);
    if (n > 1) {
      b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
      guard(b[n - 2]);
    }
    for (std::size_t k = n; k-- > 2;) {
      const std::size_t i = k - 2;
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
      guard(b[i]);
    }
  }
};

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

TridiagVector inverse_iteration(const TridiagPencil& p, double lambda,
                                double residual_tol, std::uint64_t seed) {
  const std::size_t n = p.size();
  if (n == 0) throw NumericalError("inverse iteration on an empty operator");

  TriLU lu;
  lu.d.resize(n);
  lu.dl.resize(n > 1 ? n - 1 : 0);
  lu.du.resize(n > 1 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) lu.d[i] = shifted_diag(p, i, lambda);
  for (std::size_t i = 0; i + 1 < n; ++i)
    lu.du[i] = lu.dl[i] = shifted_off(p, i, lambda);
  const double anorm = pencil_norm(p, lambda);
  lu.floor = std::max(anorm * std::numeric_limits<double>::epsilon(), DBL_MIN);
  lu.factor();

  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& e : v) e = rng.symmetric();
  {
    const double nv = norm2(v);
    for (double& e : v) e /= nv;
  }

  std::vector<double> rhs, av, bv;
  auto rel_residual = [&](const std::vector<double>& x) {
    sym_mul(p.A, x, av);
    sym_mul(p.B, x, bv);  // identity when standard
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = av[i] - lambda * bv[i];
      s += r * r;
    }
    return std::sqrt(s) / (anorm * norm2(x));
  };

  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 8; ++it) {
    sym_mul(p.B, v, rhs);
    lu.solve(rhs);
    const double nr = norm2(rhs);
    if (!(nr > 0.0) || !std::isfinite(nr))
      throw NumericalError("inverse iteration produced a non-finite vector");
    for (std::size_t i = 0; i < n; ++i) v[i] = rhs[i] / nr;
    res = rel_residual(v);
    if (res <= residual_tol) break;
  }

  // B-normalize and fix the overall sign.
  sym_mul(p.B, v, bv);
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) q += v[i] * bv[i];
  if (!(q > 0.0))
    throw NumericalError("inverse iteration lost positive definiteness of the mass form");
  const double scale = 1.0 / std::sqrt(q);
  std::size_t imax = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
  const double sgn = (v[imax] < 0.0) ? -scale : scale;
  for (double& e : v) e *= sgn;
  return {std::move(v), res};
}

// ---------------------------------------------------------------------------

namespace {

// Well bottom: the turning point when a(x) attains xi, otherwise the
// closest approach over a coarse scan window.
struct WellAnchor {
  double x = 0.0;
  double v = 0.0;  // |b| at the anchor
};

WellAnchor locate_well(const FieldProfile& profile, double xi) {
  WellAnchor w;
  bool found = false;
  try {
    w.x = profile.turning_point(xi);
    found = true;
  } catch (const NumericalError&) {
  }
  if (found) {
    w.v = std::abs(profile.b(w.x));
    if (w.v > 0.0) return w;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 256; ++i) {
    const double x = -16.0 + 32.0 * double(i) / 256.0;
    const double d = std::abs(xi - profile.a(x));
    if (d < best) {
      best = d;
      if (!found) w.x = x;
    }
  }
  if (!found) w.v = std::abs(profile.b(w.x));
  return w;
}

}  // namespace

FiberOperator assemble(const FieldProfile& profile, double xi, double h,
                       const Grid& grid, Stencil stencil) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw NumericalError("assemble: field scale h must be positive and finite");
  const std::size_t n = grid.n;
  const double dx = grid.spacing();

  FiberOperator op;
  op.grid = grid;
  op.h = h;
  op.xi = xi;
  op.stencil = stencil;
  op.c.resize(n);

  // Anchor the flux accumulation at the node nearest the turning point so
  // c stays cancellation-free where it changes sign.
  double xt;
  try {
    xt = profile.turning_point(xi);
  } catch (const NumericalError&) {
    xt = std::abs(xi - profile.a(grid.x_min)) <= std::abs(xi - profile.a(grid.x_max))
             ? grid.x_min
             : grid.x_max;
  }
  const double clamped = std::clamp(xt, grid.x_min, grid.x_max);
  const std::size_t i0 = static_cast<std::size_t>(
      std::llround((clamped - grid.x_min) / dx));
  const std::size_t anchor = std::min(i0, n - 1);

  op.c[anchor] = xi - profile.a(grid.point(anchor));
  auto cell_flux = [&](std::size_t i) {
    // One grid cell of field flux; gauss5 is exact to roundoff at this size.
    return gauss5([&](double x) { return profile.b(x); }, grid.point(i),
                  grid.point(i + 1));
  };
  for (std::size_t i = anchor + 1; i < n; ++i) op.c[i] = op.c[i - 1] - cell_flux(i - 1);
  for (std::size_t i = anchor; i > 0; --i) op.c[i - 1] = op.c[i] + cell_flux(i - 1);

  const std::size_t m = n - 2;
  const double t = (h * h) / (dx * dx);
  auto& A = op.pencil.A;
  A.diag.resize(m);
  A.off.resize(m - 1);
  double floor = std::numeric_limits<double>::infinity();
  if (stencil == Stencil::order2) {
    for (std::size_t j = 0; j < m; ++j) {
      const double vj = op.c[j + 1] * op.c[j + 1];
      A.diag[j] = 2.0 * t + vj;
      floor = std::min(floor, vj);
    }
    for (std::size_t j = 0; j + 1 < m; ++j) A.off[j] = -t;
  } else {
    // Fourth-order compact stencil; the potential coupling is symmetrized,
    // which perturbs rows only at the stencil's own truncation order.
    for (std::size_t j = 0; j < m; ++j) {
      const double vj = op.c[j + 1] * op.c[j + 1];
      A.diag[j] = 2.0 * t + (10.0 / 12.0) * vj;
      floor = std::min(floor, vj);
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double vl = op.c[j + 1] * op.c[j + 1];
      const double vr = op.c[j + 2] * op.c[j + 2];
      A.off[j] = -t + (vl + vr) / 24.0;
    }
    op.pencil.B.diag.assign(m, 10.0 / 12.0);
    op.pencil.B.off.assign(m - 1, 1.0 / 12.0);
  }
  op.potential_floor = floor;
  return op;
}

EigenPair eigenvector(const FiberOperator& op, double lambda,
                      const Tolerances& tol) {
  // Deterministic per-eigenvalue start vector, independent of call order.
  const std::uint64_t seed =
      tol.seed ^ (std::bit_cast<std::uint64_t>(lambda) * 0x9e3779b97f4a7c15ull);
  TridiagVector r = inverse_iteration(op.pencil, lambda, tol.residual, seed);
  if (r.residual > tol.residual)
    throw NumericalError("eigenvector refinement stalled: relative residual " +
                         std::to_string(r.residual));
  EigenPair out;
  out.lambda = lambda;
  out.residual = r.residual;
  out.psi.assign(op.grid.n, 0.0);
  const double s = 1.0 / std::sqrt(op.grid.spacing());
  for (std::size_t j = 0; j < r.v.size(); ++j) out.psi[j + 1] = r.v[j] * s;
  return out;
}

double well_length_scale(const FieldProfile& profile, double xi, double h) {
  const WellAnchor well = locate_well(profile, xi);
  return well.v > 0.0 ? std::sqrt(h / well.v)
                      : std::numeric_limits<double>::infinity();
}

Grid auto_domain(const FieldProfile& profile, double xi, double h,
                 double e_solve, double e_ref, const GridPolicy& policy) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw NumericalError("auto_domain: field scale h must be positive and finite");
  if (!(e_solve > 0.0) || !std::isfinite(e_solve))
    throw NumericalError("auto_domain: energy cutoff must be positive and finite");
  if (!(e_ref > 0.0) || e_ref > e_solve) e_ref = e_solve;

  const WellAnchor well = locate_well(profile, xi);
  const double ell = well.v > 0.0 ? std::sqrt(h / well.v)
                                  : std::numeric_limits<double>::infinity();

  const double root = std::sqrt(e_solve);
  const double level_lo = xi - root;
  const double level_hi = xi + root;
  double edge_lo = well.x;
  double edge_hi = well.x;
  if (profile.monotone_flux()) {
    const FluxRange fr = flux_range(profile);
    if ((fr.lo.finite() && level_hi <= fr.lo.value()) ||
        (fr.hi.finite() && level_lo >= fr.hi.value()))
      throw NumericalError(
          "auto_domain: no classically allowed region below the energy cutoff");
    if ((fr.lo.finite() && fr.lo.value() >= level_lo) ||
        (fr.hi.finite() && fr.hi.value() <= level_hi))
      throw NumericalError(
          "auto_domain: energy cutoff reaches an asymptotic flux level, the "
          "classically allowed region is unbounded");
    const double t1 = profile.turning_point(level_lo);
    const double t2 = profile.turning_point(level_hi);
    edge_lo = std::min(t1, t2);
    edge_hi = std::max(t1, t2);
  }

  const double width = edge_hi - edge_lo;
  double scale = std::min(ell, width > 0.0 ? width : ell);
  if (!std::isfinite(scale) || !(scale > 0.0))
    scale = width > 0.0 ? width : 1.0;

  // March outward until the WKB decay budget int sqrt(V - e_ref)/h passes
  // margin_scale (log(1/eps_trunc) + 2); re-entering the allowed region
  // resets the budget, so side valleys never get truncated.
  const double target =
      policy.margin_scale * (std::log(1.0 / policy.epsilon_trunc) + 2.0);
  const double base_step = scale / 8.0;
  auto march = [&](double x0, int dir) {
    double acc = 0.0;
    double x = x0;
    double step = base_step;
    long iter = 0;
    while (acc < target) {
      ++iter;
      if (iter > 200000 || std::abs(x) > 1e12)
        throw NumericalError(
            "auto_domain: decay margin march did not terminate (potential "
            "does not confine at this energy)");
      if (iter % 16 == 0) step *= 1.25;
      const double xn = x + dir * step;
      const double cm = xi - profile.a(0.5 * (x + xn));
      const double vm = cm * cm;
      if (vm <= e_ref)
        acc = 0.0;
      else
        acc += step * std::sqrt(vm - e_ref) / h;
      x = xn;
    }
    return x;
  };
  const double dom_lo = march(edge_lo, -1);
  const double dom_hi = march(edge_hi, +1);

  double char_len = scale;
  if (!std::isfinite(char_len) || !(char_len > 0.0))
    char_len = (dom_hi - dom_lo) / 8.0;
  const double dx = char_len / policy.points_per_length;
  double pts = std::ceil((dom_hi - dom_lo) / dx) + 1.0;
  if (pts > double(policy.max_points)) {
    log::warn("auto_domain: clamping %.0f grid points to the configured cap %zu",
              pts, policy.max_points);
    pts = double(policy.max_points);
  }
  const std::size_t n = std::max<std::size_t>(policy.min_points,
                                              static_cast<std::size_t>(pts));
  return Grid(dom_lo, dom_hi, n);
}

}  // namespace fiberband
