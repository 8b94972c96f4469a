#pragma once

#include <cstdint>
#include <vector>

#include "fiberband/field_profile.hpp"
#include "fiberband/grid.hpp"

namespace fiberband {

// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiag {
  std::vector<double> diag;
  std::vector<double> off;
};

// Symmetric-definite pencil (A, B). Empty B means B = identity (the plain
// second-order stencil); the fourth-order stencil produces a nontrivial
// diagonally dominant B, and eigenvalue counts below a shift remain valid
// for the pencil because B is positive definite (Sylvester inertia).
struct TridiagPencil {
  SymTridiag A;
  SymTridiag B;

  bool generalized() const { return !B.diag.empty(); }
  std::size_t size() const { return A.diag.size(); }
};

// Number of pencil eigenvalues strictly below e, by counting negative
// pivots of the LDL^T recurrence of A - e B with LAPACK-style pivot
// clamping. Exact for the discrete matrix.
int count_below(const TridiagPencil& p, double e);

// Rigorous lower bound for the smallest pencil eigenvalue.
double eigenvalue_lower_bound(const TridiagPencil& p);

// Infinity-norm scale of A - lambda B, used to normalize residuals.
double pencil_norm(const TridiagPencil& p, double lambda);

// The smallest eigenvalues below e_max, bisected to
// width <= max(abs_tol, rel_tol |mid|); at most k_max of them (k_max < 0:
// all). Sorted ascending.
struct EigenSolveTols {
  double abs_tol = 1e-10;  // multiplied by max(1, |e_max|) by the caller
  double rel_tol = 1e-12;
};
std::vector<double> eigenvalues_below(const TridiagPencil& p, double e_max,
                                      const EigenSolveTols& tols,
                                      long long k_max = -1);

// Inverse iteration at lambda (from eigenvalues_below). The vector is
// B-normalized to unit Euclidean B-norm and sign-fixed (largest-magnitude
// entry positive). residual = ||A v - lambda B v||_2 / pencil_norm.
struct TridiagVector {
  std::vector<double> v;
  double residual = 0.0;
};
TridiagVector inverse_iteration(const TridiagPencil& p, double lambda,
                                double residual_tol, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Fiber discretization: h^2 D^2 + (xi - a(x))^2 with Dirichlet ends.

struct FiberOperator {
  Grid grid;                // includes the two Dirichlet endpoints
  double h = 1.0;
  double xi = 0.0;
  Stencil stencil = Stencil::order2;
  std::vector<double> c;    // xi - a(x_i) at every grid node
  TridiagPencil pencil;     // over the n-2 interior nodes
  double potential_floor = 0.0;  // min over interior V_i = c_i^2

  double spacing() const { return grid.spacing(); }
  std::size_t interior() const { return grid.n - 2; }
};

// Assemble the fiber operator. The field term c_i = xi - a(x_i) is built
// by accumulating per-cell fluxes outward from the grid node nearest the
// turning point (where c vanishes), so the values near the well bottom
// carry no cancellation from large primitives.
FiberOperator assemble(const FieldProfile& profile, double xi, double h,
                       const Grid& grid, Stencil stencil = Stencil::order2);

// Eigenpair on the full grid (zeros at the Dirichlet ends), normalized so
// that sum B psi . psi * dx = 1, i.e. the discrete L2 norm is one.
struct EigenPair {
  double lambda = 0.0;
  std::vector<double> psi;  // grid.n entries
  double residual = 0.0;
};
EigenPair eigenvector(const FiberOperator& op, double lambda,
                      const Tolerances& tol);

// Local quantum length sqrt(h/|b|) at the bottom of the fiber well at xi,
// +infinity when the field vanishes there.
double well_length_scale(const FieldProfile& profile, double xi, double h);

// Truncated solve domain: covers the classically allowed region
// {(xi - a)^2 <= e_solve} and extends outward until the WKB decay budget
// integral(sqrt(V - e_ref)) / h reaches margin_scale (ln(1/eps_trunc)+2),
// with e_ref <= e_solve supplied by the caller (it protects eigenvalues
// up to e_ref from truncation error; states between e_ref and e_solve are
// the near-threshold ones). Spacing is min(sqrt(h/v_est), width) / ppl.
Grid auto_domain(const FieldProfile& profile, double xi, double h,
                 double e_solve, double e_ref, const GridPolicy& policy);

}  // namespace fiberband
