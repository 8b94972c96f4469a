#include "fiberband/field_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include "fiberband/errors.hpp"
#include "fiberband/quadrature.hpp"
#include "fiberband/roots.hpp"

namespace fiberband {

namespace {

constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;

double checked_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw NumericalError(std::string(what) + " must be positive and finite");
  }
  return v;
}

}  // namespace

double FieldProfile::flux_between(double x1, double x2) const {
  // Default: difference of primitives. Overridden where cancellation matters.
  return a(x2) - a(x1);
}

double FieldProfile::flux_tail(double x, int direction) const {
  ExtendedReal lim = direction > 0 ? flux_upper() : flux_lower();
  if (!lim.finite()) throw NumericalError("flux_tail: flux limit is infinite");
  return std::abs(lim.value() - a(x));
}

double FieldProfile::turning_point(double value) const {
  const double f0 = a(0.0) - value;
  if (f0 == 0.0) return 0.0;
  // Expand symmetrically from the origin until a(x) - value changes sign on
  // one side; the nearer side wins ("smallest |x|" for monotone profiles,
  // first hit otherwise).
  double prev[2] = {0.0, 0.0};
  double fprev[2] = {f0, f0};
  double step = 0.5;
  for (int k = 0; k < 220; ++k) {
    for (int side = 0; side < 2; ++side) {
      const double x = side == 0 ? step : -step;
      const double fx = a(x) - value;
      if (fx == 0.0) return x;
      if ((fx < 0.0) != (fprev[side] < 0.0)) {
        const double lo = std::min(prev[side], x);
        const double hi = std::max(prev[side], x);
        return newton_bisect([&](double t) { return a(t) - value; },
                             [&](double t) { return b(t); }, lo, hi, 1e-14,
                             0.0);
      }
      prev[side] = x;
      fprev[side] = fx;
    }
    step *= 1.5;
  }
  throw NumericalError("turning_point: level outside the range of a");
}

// ---------------------------------------------------------------------------
// Constant field

namespace {

class ConstantField final : public FieldProfile {
 public:
  ConstantField(double b0, double a0) : FieldProfile(a0), b0_(b0) {}

  std::string name() const override { return "constant"; }
  double b(double) const override { return b0_; }
  double db(double) const override { return 0.0; }
  double a(double x) const override { return a0_ + b0_ * x; }
  double flux_between(double x1, double x2) const override {
    return b0_ * (x2 - x1);
  }
  ExtendedReal flux_lower() const override {
    if (b0_ == 0.0) return ExtendedReal(a0_);
    return b0_ > 0.0 ? ExtendedReal::minus_infinity()
                     : ExtendedReal::plus_infinity();
  }
  ExtendedReal flux_upper() const override {
    if (b0_ == 0.0) return ExtendedReal(a0_);
    return b0_ > 0.0 ? ExtendedReal::plus_infinity()
                     : ExtendedReal::minus_infinity();
  }
  double turning_point(double value) const override {
    if (b0_ == 0.0) {
      if (value == a0_) return 0.0;
      throw NumericalError("turning_point: zero field never attains level");
    }
    return (value - a0_) / b0_;
  }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<ConstantField>(b0_, a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<ConstantField>(*this);
  }

 private:
  double b0_;
};

// ---------------------------------------------------------------------------
// Gaussian field: b = exp(-x^2)/sqrt(pi), a = a0 + (1 + erf x)/2.

class GaussianField final : public FieldProfile {
 public:
  explicit GaussianField(double a0) : FieldProfile(a0) {}

  std::string name() const override { return "gaussian"; }
  double b(double x) const override { return std::exp(-x * x) * kInvSqrtPi; }
  double db(double x) const override { return -2.0 * x * b(x); }
  double a(double x) const override {
    // erfc split keeps full relative accuracy of the tail distances.
    if (x < 0.0) return a0_ + 0.5 * std::erfc(-x);
    return a0_ + 1.0 - 0.5 * std::erfc(x);
  }
  double flux_between(double x1, double x2) const override {
    if (x1 > x2) return -flux_between(x2, x1);
    if (x1 >= 0.0) return 0.5 * (std::erfc(x1) - std::erfc(x2));
    if (x2 <= 0.0) return 0.5 * (std::erfc(-x2) - std::erfc(-x1));
    return 0.5 * (std::erf(x2) - std::erf(x1));
  }
  ExtendedReal flux_lower() const override { return ExtendedReal(a0_); }
  ExtendedReal flux_upper() const override { return ExtendedReal(a0_ + 1.0); }
  double flux_tail(double x, int direction) const override {
    return direction > 0 ? 0.5 * std::erfc(x) : 0.5 * std::erfc(-x);
  }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<GaussianField>(a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<GaussianField>(*this);
  }
};

// ---------------------------------------------------------------------------
// Power-law field, plain core (alpha > 0): b = c1 x^alpha on x >= 0.

class PowerLawField final : public FieldProfile {
 public:
  PowerLawField(double c1, double alpha, double a0)
      : FieldProfile(a0), c1_(c1), alpha_(alpha), c0_(c1 / (1.0 + alpha)) {}

  std::string name() const override {
    std::ostringstream os;
    os << "power_law(alpha=" << alpha_ << ")";
    return os.str();
  }
  double b(double x) const override {
    return x > 0.0 ? c1_ * std::pow(x, alpha_) : 0.0;
  }
  double db(double x) const override {
    return x > 0.0 ? c1_ * alpha_ * std::pow(x, alpha_ - 1.0) : 0.0;
  }
  double a(double x) const override {
    return x > 0.0 ? a0_ + c0_ * std::pow(x, 1.0 + alpha_) : a0_;
  }
  double flux_between(double x1, double x2) const override {
    if (x1 > x2) return -flux_between(x2, x1);
    x1 = std::max(x1, 0.0);
    x2 = std::max(x2, 0.0);
    if (x1 == x2) return 0.0;
    if (x1 == 0.0) return c0_ * std::pow(x2, 1.0 + alpha_);
    // c0 x1^{1+a} expm1((1+a) log1p((x2-x1)/x1)): stable for x2-x1 << x1.
    const double r = (x2 - x1) / x1;
    return c0_ * std::pow(x1, 1.0 + alpha_) *
           std::expm1((1.0 + alpha_) * std::log1p(r));
  }
  ExtendedReal flux_lower() const override { return ExtendedReal(a0_); }
  ExtendedReal flux_upper() const override {
    return ExtendedReal::plus_infinity();
  }
  double flux_tail(double x, int direction) const override {
    if (direction > 0) throw NumericalError("flux_tail: infinite upper flux");
    return x <= 0.0 ? 0.0 : c0_ * std::pow(x, 1.0 + alpha_);
  }
  double turning_point(double value) const override {
    const double excess = value - a0_;
    if (excess < 0.0) {
      throw NumericalError("turning_point: level below the lower flux limit");
    }
    if (excess == 0.0) return 0.0;
    return std::pow(excess / c0_, 1.0 / (1.0 + alpha_));
  }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<PowerLawField>(c1_, alpha_, a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<PowerLawField>(*this);
  }

 private:
  double c1_, alpha_, c0_;
};

// ---------------------------------------------------------------------------
// Regularized power law: b = c1 (1+x^2)^{alpha/2} sigma(x) with the smooth
// one-sided factor sigma(x) = (1 + x/sqrt(1+x^2))/2. C-infinity for every
// alpha, required for alpha <= 0 where the plain core blows up at 0, and
// asymptotic to c1 x^alpha at +inf. No closed-form primitive: a(x) sums
// cached panel integrals between fixed anchors (0, 1, 2, 4, 8, ... per
// side) plus one partial panel, so each full panel is integrated exactly
// once and the value of a is independent of the order of queries.

class RegularizedPowerLawField final : public FieldProfile {
 public:
  RegularizedPowerLawField(double c1, double alpha, double a0)
      : FieldProfile(a0), c1_(c1), alpha_(alpha) {}

  std::string name() const override {
    std::ostringstream os;
    os << "power_law_regularized(alpha=" << alpha_ << ")";
    return os.str();
  }
  double b(double x) const override {
    return c1_ * std::pow(1.0 + x * x, 0.5 * alpha_) * sigma(x);
  }
  double db(double x) const override {
    const double q = 1.0 + x * x;
    const double p = std::pow(q, 0.5 * alpha_);
    return c1_ * (alpha_ * x * p / q * sigma(x) + p * dsigma(x));
  }
  double a(double x) const override { return a0_ + flux_from_origin(x); }
  double flux_between(double x1, double x2) const override {
    // Direct quadrature of the cell is cancellation-free; the anchored
    // prefix form would subtract two large primitives for far-out cells.
    if (x1 == x2) return 0.0;
    if (std::abs(x2 - x1) <= 0.25 * (1.0 + std::min(std::abs(x1), std::abs(x2)))) {
      return integrate([&](double t) { return b(t); }, x1, x2, 1e-14);
    }
    return flux_from_origin(x2) - flux_from_origin(x1);
  }
  ExtendedReal flux_lower() const override {
    ensure_tails();
    return ExtendedReal(a0_ - lower_tail_);
  }
  ExtendedReal flux_upper() const override {
    // b ~ c1 x^alpha at +inf: integrable only below alpha = -1.
    if (alpha_ >= -1.0) return ExtendedReal::plus_infinity();
    ensure_tails();
    return ExtendedReal(a0_ + upper_tail_);
  }
  double flux_tail(double x, int direction) const override {
    ExtendedReal lim = direction > 0 ? flux_upper() : flux_lower();
    if (!lim.finite())
      throw NumericalError("flux_tail: flux limit is infinite");
    return integrate_to_infinity(
        [&](double t) { return b(direction > 0 ? t : -t); },
        direction > 0 ? x : -x, 1e-14);
  }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<RegularizedPowerLawField>(c1_, alpha_,
                                                      a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<RegularizedPowerLawField>(c1_, alpha_, a0_);
  }

 private:
  static double sigma(double x) {
    // Lower tail rewritten as 1/(2 s (s - x)), s = sqrt(1+x^2), to keep
    // relative accuracy where 1 + x/s cancels.
    const double s = std::sqrt(1.0 + x * x);
    if (x >= 0.0) return 0.5 * (1.0 + x / s);
    return 0.5 / (s * (s - x));
  }
  static double dsigma(double x) {
    const double q = 1.0 + x * x;
    return 0.5 / (q * std::sqrt(q));
  }

  double flux_from_origin(double x) const {
    if (x == 0.0) return 0.0;
    const int sgn = x > 0.0 ? 1 : -1;
    const double ax = std::abs(x);
    double total = 0.0;
    double lo = 0.0, hi = 1.0;
    int k = 0;
    while (hi <= ax) {
      total += panel(sgn, k);
      lo = hi;
      hi *= 2.0;
      ++k;
    }
    if (ax > lo) {
      // Partial panel, oriented outward so its value is nonnegative.
      total += sgn > 0 ? cell(lo, ax) : cell(-ax, -lo);
    }
    // total is the integral over [min(x,0), max(x,0)]; restore orientation.
    return sgn > 0 ? total : -total;
  }

  // Integral over the k-th full panel on the given side, cached under lock.
  // Values depend only on (sgn, k), never on query order, so concurrent
  // sweeps see identical numbers.
  double panel(int sgn, int k) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto& store = sgn > 0 ? panels_pos_ : panels_neg_;
    while (store.size() <= std::size_t(k)) {
      const std::size_t j = store.size();
      const double lo = j == 0 ? 0.0 : std::ldexp(1.0, int(j) - 1);
      const double hi = std::ldexp(1.0, int(j));
      store.push_back(sgn > 0 ? cell(lo, hi) : cell(-hi, -lo));
    }
    return store[std::size_t(k)];
  }

  double cell(double lo, double hi) const {
    return integrate([&](double t) { return b(t); }, lo, hi, 1e-14);
  }

  void ensure_tails() const {
    std::lock_guard<std::mutex> lock(tail_mu_);
    if (tails_ready_) return;
    lower_tail_ =
        integrate_to_infinity([&](double t) { return b(-t); }, 0.0, 1e-14);
    if (alpha_ < -1.0) {
      upper_tail_ =
          integrate_to_infinity([&](double t) { return b(t); }, 0.0, 1e-14);
    }
    tails_ready_ = true;
  }

  double c1_, alpha_;
  mutable std::mutex mu_;
  mutable std::vector<double> panels_pos_, panels_neg_;
  mutable std::mutex tail_mu_;
  mutable bool tails_ready_ = false;
  mutable double lower_tail_ = 0.0, upper_tail_ = 0.0;
};

// ---------------------------------------------------------------------------
// Smoothed step: b = b- + (b+ - b-) S(x/w), S(t) = (1+erf t)/2.
// Primitive of S: T(t) = t/2 + (t erf(t) + (exp(-t^2)-1)/sqrt(pi))/2,
// so a(x) = a0 + b- x + (b+ - b-) w T(x/w).

class StepField final : public FieldProfile {
 public:
  StepField(double bm, double bp, double w, double a0)
      : FieldProfile(a0), bm_(bm), bp_(bp), w_(checked_positive(w, "width")) {}

  std::string name() const override { return "step_like"; }
  double b(double x) const override { return bm_ + (bp_ - bm_) * S(x / w_); }
  double db(double x) const override {
    const double t = x / w_;
    return (bp_ - bm_) * std::exp(-t * t) * kInvSqrtPi / w_;
  }
  double a(double x) const override {
    return a0_ + bm_ * x + (bp_ - bm_) * w_ * T(x / w_);
  }
  ExtendedReal flux_lower() const override { return tail_limit(bm_, -1); }
  ExtendedReal flux_upper() const override { return tail_limit(bp_, +1); }
  bool monotone_flux() const override {
    return (bm_ >= 0.0 && bp_ >= 0.0) || (bm_ <= 0.0 && bp_ <= 0.0);
  }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<StepField>(bm_, bp_, w_, a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<StepField>(*this);
  }

 private:
  static double S(double t) {
    return t >= 0.0 ? 1.0 - 0.5 * std::erfc(t) : 0.5 * std::erfc(-t);
  }
  static double T(double t) {
    return 0.5 * t +
           0.5 * (t * std::erf(t) + (std::exp(-t * t) - 1.0) * kInvSqrtPi);
  }
  ExtendedReal tail_limit(double slope, int direction) const {
    if (slope == 0.0) {
      // T -> -1/(2 sqrt(pi)) at -inf and T(t) - t -> -1/(2 sqrt(pi)) at
      // +inf, so both zero-slope limits land on the same value.
      return ExtendedReal(a0_ - (bp_ - bm_) * w_ * 0.5 * kInvSqrtPi);
    }
    const bool up = (slope > 0.0) == (direction > 0);
    return up ? ExtendedReal::plus_infinity() : ExtendedReal::minus_infinity();
  }

  double bm_, bp_, w_;
};

// ---------------------------------------------------------------------------
// Tabulated field: piecewise-linear b inside the hull, zero outside; a is
// the exact trapezoid cumulative, constant outside the hull.

class TabulatedField final : public FieldProfile {
 public:
  TabulatedField(std::vector<double> xs, std::vector<double> bs, double a0)
      : FieldProfile(a0), xs_(std::move(xs)), bs_(std::move(bs)) {
    if (xs_.size() != bs_.size() || xs_.size() < 2) {
      throw NumericalError("tabulated field needs >= 2 samples");
    }
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      if (!(xs_[i] > xs_[i - 1])) {
        throw NumericalError("tabulated abscissae must be strictly increasing");
      }
    }
    for (double v : bs_) {
      if (!std::isfinite(v)) {
        throw NumericalError("tabulated field values must be finite");
      }
    }
    cum_.resize(xs_.size(), 0.0);
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      cum_[i] =
          cum_[i - 1] + 0.5 * (bs_[i] + bs_[i - 1]) * (xs_[i] - xs_[i - 1]);
    }
    origin_offset_ = cum_at(0.0);
    monotone_ = true;
    for (double v : bs_) {
      if (v < 0.0) monotone_ = false;
    }
    if (!monotone_) {
      bool nonpos = true;
      for (double v : bs_)
        if (v > 0.0) nonpos = false;
      monotone_ = nonpos;
    }
  }

  std::string name() const override { return "tabulated"; }
  double b(double x) const override {
    if (x < xs_.front() || x > xs_.back()) return 0.0;
    const std::size_t i = segment(x);
    const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return bs_[i] + t * (bs_[i + 1] - bs_[i]);
  }
  double db(double x) const override {
    if (x < xs_.front() || x > xs_.back()) return 0.0;
    const std::size_t i = segment(x);
    return (bs_[i + 1] - bs_[i]) / (xs_[i + 1] - xs_[i]);
  }
  double a(double x) const override { return a0_ + cum_at(x) - origin_offset_; }
  ExtendedReal flux_lower() const override {
    return ExtendedReal(a0_ - origin_offset_);
  }
  ExtendedReal flux_upper() const override {
    return ExtendedReal(a0_ + cum_.back() - origin_offset_);
  }
  bool monotone_flux() const override { return monotone_; }
  bool tail_flagged() const override { return true; }
  ProfilePtr with_gauge(double delta) const override {
    return std::make_unique<TabulatedField>(xs_, bs_, a0_ + delta);
  }
  ProfilePtr clone() const override {
    return std::make_unique<TabulatedField>(*this);
  }

 private:
  std::size_t segment(double x) const {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = it == xs_.begin() ? 0 : std::size_t(it - xs_.begin()) - 1;
    return std::min(i, xs_.size() - 2);
  }
  double cum_at(double x) const {
    if (x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return cum_.back();
    const std::size_t i = segment(x);
    return cum_[i] + 0.5 * (bs_[i] + b(x)) * (x - xs_[i]);
  }

  std::vector<double> xs_, bs_, cum_;
  double origin_offset_ = 0.0;
  bool monotone_ = true;
};

}  // namespace

ProfilePtr make_constant_field(double b0, double a0) {
  if (!(std::isfinite(b0) && b0 != 0.0)) {
    throw NumericalError("constant field needs a nonzero finite slope");
  }
  return std::make_unique<ConstantField>(b0, a0);
}

ProfilePtr make_gaussian_field(double a0) {
  return std::make_unique<GaussianField>(a0);
}

ProfilePtr make_power_law_field(double c1, double alpha, double a0,
                                bool regularized) {
  checked_positive(c1, "power-law coefficient");
  if (alpha <= -1.0 && !regularized) {
    throw NumericalError("power-law alpha <= -1 needs the regularized core");
  }
  if (alpha <= 0.0 && !regularized) {
    throw NumericalError(
        "power-law with alpha <= 0 requires the regularized core");
  }
  if (regularized) {
    if (alpha >= 1.0) {
      throw NumericalError("regularized power-law supports alpha < 1 only");
    }
    return std::make_unique<RegularizedPowerLawField>(c1, alpha, a0);
  }
  return std::make_unique<PowerLawField>(c1, alpha, a0);
}

ProfilePtr make_step_field(double b_minus, double b_plus, double width,
                           double a0) {
  return std::make_unique<StepField>(b_minus, b_plus, width, a0);
}

ProfilePtr make_tabulated_field(std::vector<double> xs, std::vector<double> bs,
                                double a0) {
  return std::make_unique<TabulatedField>(std::move(xs), std::move(bs), a0);
}

double effective_velocity(const FieldProfile& profile, double level) {
  const double x = profile.turning_point(level);
  const double v = profile.b(x);
  if (!(v > 0.0)) {
    throw NumericalError("effective velocity: b is not positive at the level");
  }
  return v;
}

FluxRange flux_range(const FieldProfile& profile) {
  ExtendedReal lo = profile.flux_lower();
  ExtendedReal hi = profile.flux_upper();
  if (hi < lo) std::swap(lo, hi);
  return {lo, hi};
}

double potential_floor(const FieldProfile& profile, double xi) {
  const FluxRange r = flux_range(profile);
  double d = 0.0;
  if (r.lo.finite() && xi < r.lo.value()) d = r.lo.value() - xi;
  if (r.hi.finite() && xi > r.hi.value()) d = xi - r.hi.value();
  return d * d;
}

}  // namespace fiberband
