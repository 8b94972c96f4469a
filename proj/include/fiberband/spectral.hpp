#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fiberband/extended_real.hpp"
#include "fiberband/field_profile.hpp"
#include "fiberband/grid.hpp"
#include "fiberband/parallel.hpp"
#include "fiberband/tridiag.hpp"

namespace fiberband {

// Bottom of the essential spectrum of the fiber at xi: the smaller of
// (xi - phi)^2 over the finite flux limits phi, +infinity when both limits
// are infinite.
ExtendedReal ess_threshold(const FieldProfile& profile, double xi);

// One open component of the level set, endpoints possibly infinite.
struct SigmaComponent {
  ExtendedReal lo;
  ExtendedReal hi;

  bool bounded() const { return lo.finite() && hi.finite(); }
};

// The xi where the level lambda lies strictly below the essential spectrum:
// the real line minus the closed intervals [phi - sqrt(lambda),
// phi + sqrt(lambda)] around each finite flux limit (touching intervals
// merge). lambda must be nonnegative.
struct SigmaSet {
  double lambda = 0.0;
  std::vector<SigmaComponent> components;
};
SigmaSet sigma_lambda(const FieldProfile& profile, double lambda);

// ---------------------------------------------------------------------------
// Single-fiber solve.

enum class SliceStatus {
  ok,
  empty,  // no spectrum below the usable cutoff (fiber sits at threshold)
};

struct SliceResult {
  double xi = 0.0;
  double h = 1.0;
  SliceStatus status = SliceStatus::ok;
  ExtendedReal threshold;        // essential spectrum bottom at this xi
  double e_solve = 0.0;          // energy cutoff actually used
  double buffer = 0.0;           // threshold standoff, frozen per slice
  double floor = 0.0;            // analytic lower bound for the potential

  // Empty when status == empty; grid is then meaningless.
  std::vector<double> lambda;         // refined values (extrapolated)
  std::vector<double> lambda_coarse;  // base-grid values, shifts for vectors
  std::vector<double> error_budget;   // per eigenvalue, absolute
  std::vector<bool> near_threshold;   // within the trust buffer of ess. spec.
  Grid grid;                          // base grid used for the solve

  std::size_t count() const { return lambda.size(); }
};

// Solves one fiber: picks the domain, assembles, extracts eigenvalues below
// the cutoff (at most k_max of them; k_max < 0 means all), and when
// policy.refine is set re-solves on the half-spacing grid and extrapolates.
// e_max caps the cutoff from above (the threshold standoff still applies).
SliceResult compute_slice(const FieldProfile& profile, double xi, double h,
                          const GridPolicy& policy, const Tolerances& tol,
                          long long k_max = -1,
                          std::optional<double> e_max = std::nullopt);

// Operator on the slice's own base grid, for follow-up eigenvector work.
// Pass lambda_coarse values as inverse-iteration shifts.
FiberOperator slice_operator(const FieldProfile& profile, const SliceResult& r,
                             Stencil stencil);

// ---------------------------------------------------------------------------
// Band diagram.

struct SliceRecord {
  double xi = 0.0;
  bool valid = false;
  std::string error;   // failure message when !valid
  SliceResult result;  // meaningful only when valid
};

struct BandDiagram {
  double h = 1.0;
  long long k_max = -1;
  std::vector<SliceRecord> slices;  // one per requested xi, in order
};

// Solves every fiber in xis. Numerical failures are recorded per slice and
// never abort the sweep; results are deterministic and independent of the
// execution policy.
BandDiagram sweep_bands(const FieldProfile& profile,
                        const std::vector<double>& xis, double h,
                        const GridPolicy& policy, const Tolerances& tol,
                        long long k_max, const ExecPolicy& exec);

// d lambda / d xi for an eigenpair of op, evaluated from the eigenvector
// alone (derivative of the quadratic form in xi).
double band_derivative(const FiberOperator& op, const EigenPair& pair);

// ---------------------------------------------------------------------------
// Flat-band detection at a fixed level.

enum class FlatVerdict {
  flat,
  non_flat_oscillation,
  non_flat_off_level,
  non_flat_divergence,
  inconclusive,
};

const char* to_string(FlatVerdict v);

struct ComponentReport {
  SigmaComponent component;
  FlatVerdict verdict = FlatVerdict::inconclusive;
  std::string detail;
  double oscillation = 0.0;    // spread of the sampled band values
  double median_offset = 0.0;  // |median - lambda|
  double budget = 0.0;         // worst per-sample error budget
  std::size_t samples = 0;
  bool certified = false;  // counts toward an exclusion certificate
};

enum class Excluded { yes, no, inconclusive };

const char* to_string(Excluded e);

struct FlatnessReport {
  double lambda = 0.0;
  long long band = 1;
  std::vector<ComponentReport> components;
  Excluded excluded = Excluded::inconclusive;
};

struct FlatnessOptions {
  long long band = 1;      // which band to test (1-based)
  std::size_t samples = 9;  // per component, Chebyshev-placed
  // Sampling window for unbounded components that admit no divergence
  // certificate (e.g. a field with both flux limits infinite).
  double window_lo = -8.0;
  double window_hi = 8.0;
};

// Tests whether band `band` is identically equal to lambda on each component
// of sigma_lambda. `excluded` is yes only when every component certifies the
// band away from the level, no when any component looks flat, and
// inconclusive otherwise.
FlatnessReport flatness_test(const FieldProfile& profile, double h,
                             double lambda, const FlatnessOptions& opt,
                             const GridPolicy& policy, const Tolerances& tol,
                             const ExecPolicy& exec);

}  // namespace fiberband
