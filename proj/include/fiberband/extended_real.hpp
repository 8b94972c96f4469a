#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace fiberband {

// Real number extended with +/-infinity; totally ordered, never NaN.
// Used for flux limits and essential-spectrum thresholds.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : v_(v) {}  // NOLINT: implicit by design

  static constexpr ExtendedReal plus_infinity() {
    return ExtendedReal(std::numeric_limits<double>::infinity());
  }
  static constexpr ExtendedReal minus_infinity() {
    return ExtendedReal(-std::numeric_limits<double>::infinity());
  }

  bool finite() const { return std::isfinite(v_); }
  double value() const { return v_; }  // +/-inf allowed

  friend bool operator==(ExtendedReal a, ExtendedReal b) { return a.v_ == b.v_; }
  friend bool operator<(ExtendedReal a, ExtendedReal b) { return a.v_ < b.v_; }
  friend bool operator<=(ExtendedReal a, ExtendedReal b) { return a.v_ <= b.v_; }
  friend bool operator>(ExtendedReal a, ExtendedReal b) { return a.v_ > b.v_; }
  friend bool operator>=(ExtendedReal a, ExtendedReal b) { return a.v_ >= b.v_; }

  std::string str() const {
    if (v_ == std::numeric_limits<double>::infinity()) return "+inf";
    if (v_ == -std::numeric_limits<double>::infinity()) return "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v_);
    return buf;
  }

 private:
  double v_ = 0.0;
};

}  // namespace fiberband
