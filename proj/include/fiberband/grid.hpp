#pragma once

#include <cstddef>
#include <cstdint>

#include "fiberband/errors.hpp"

namespace fiberband {

// Uniform spatial grid for the truncated fiber problem (Dirichlet ends).
struct Grid {
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t n = 3;

  Grid() = default;
  Grid(double lo, double hi, std::size_t pts) : x_min(lo), x_max(hi), n(pts) {
    if (!(x_min < x_max) || n < 3) throw NumericalError("Grid: invalid extent");
  }
  double spacing() const { return (x_max - x_min) / double(n - 1); }
  double point(std::size_t i) const { return x_min + spacing() * double(i); }

  // Same extent, spacing halved; nested nodes for refinement studies.
  Grid refined() const { return Grid(x_min, x_max, 2 * n - 1); }
};

enum class Stencil { order2, order4 };

// Discretization policy shared by all solvers.
struct GridPolicy {
  double points_per_length = 32.0;  // grid points per local oscillator length
  double epsilon_trunc = 1e-10;     // target size of the Dirichlet truncation error
  double margin_scale = 1.25;       // safety factor on the decay-rate margin
  std::size_t min_points = 65;
  std::size_t max_points = 4000000;
  Stencil stencil = Stencil::order2;
  bool refine = true;    // re-solve at dx/2 and Richardson-extrapolate
  double e_cap = 12.0;   // solve cutoff when the essential threshold is infinite
};

struct Tolerances {
  double quadrature = 1e-10;  // absolute flux-integral tolerance
  double eigen_abs = 1e-10;   // bisection tolerance, scaled by max(1, E)
  double eigen_rel = 1e-12;   // relative bisection tolerance
  double residual = 1e-8;     // inverse-iteration residual, relative to |T|
  double root = 1e-12;        // potential inversion
  std::uint64_t seed = 0x5eedf1be2badull;
};

}  // namespace fiberband
