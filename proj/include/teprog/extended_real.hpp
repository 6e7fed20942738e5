#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace teprog {

/// A value in ]-inf, +inf] that keeps a legitimate +inf (a point outside the
/// effective domain) apart from a non-finite result of arithmetic.
class ExtendedReal {
 public:
  enum class Kind { Finite, PlusInfinity, Overflow };

  constexpr ExtendedReal() = default;

  static ExtendedReal finite(double v) {
    if (!std::isfinite(v)) return overflow();
    ExtendedReal r;
    r.kind_ = Kind::Finite;
    r.value_ = v;
    return r;
  }
  static constexpr ExtendedReal plus_infinity() {
    ExtendedReal r;
    r.kind_ = Kind::PlusInfinity;
    r.value_ = std::numeric_limits<double>::infinity();
    return r;
  }
  static constexpr ExtendedReal overflow() {
    ExtendedReal r;
    r.kind_ = Kind::Overflow;
    r.value_ = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_infinite() const { return kind_ == Kind::PlusInfinity; }
  bool is_overflow() const { return kind_ == Kind::Overflow; }

  /// Finite value, +inf, or NaN for overflow.
  double value() const { return value_; }

  std::string to_string() const {
    switch (kind_) {
      case Kind::PlusInfinity:
        return "inf";
      case Kind::Overflow:
        return "overflow";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", value_);
        return buf;
      }
    }
  }

  /// Inverse of to_string().
  static ExtendedReal parse(const std::string& s) {
    if (s == "inf" || s == "+inf") return plus_infinity();
    if (s == "overflow" || s == "nan") return overflow();
    return finite(std::stod(s));
  }

  friend bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.kind_ != b.kind_) return false;
    return a.kind_ != Kind::Finite || a.value_ == b.value_;
  }

 private:
  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const ExtendedReal& v) {
  return os << v.to_string();
}

}  // namespace teprog
