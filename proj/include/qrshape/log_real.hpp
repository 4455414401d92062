#pragma once

#include <cmath>
#include <limits>

namespace qrshape {

/// A signed real stored as sign * exp(log_abs). Zero is sign == 0.
struct LogReal {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static LogReal from_value(double v) {
    if (v == 0.0) return {};
    return {std::log(std::fabs(v)), v > 0 ? 1 : -1};
  }
  static LogReal from_log(double log_abs, int sign = 1) {
    if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity()) return {};
    return {log_abs, sign};
  }

  bool is_zero() const { return sign == 0; }
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

  friend LogReal operator*(LogReal a, LogReal b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return {a.log_abs + b.log_abs, a.sign * b.sign};
  }
  friend LogReal operator/(LogReal a, LogReal b) {
    if (a.sign == 0) return {};
    return {a.log_abs - b.log_abs, a.sign * b.sign};
  }
  friend LogReal operator-(LogReal a) { return {a.log_abs, -a.sign}; }

  // Signed log-sum-exp of two terms.
  friend LogReal operator+(LogReal a, LogReal b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    if (b.log_abs > a.log_abs) std::swap(a, b);
    const double d = std::exp(b.log_abs - a.log_abs);
    if (a.sign == b.sign) return {a.log_abs + std::log1p(d), a.sign};
    if (d == 1.0) return {};
    return {a.log_abs + std::log1p(-d), a.sign};
  }
  LogReal& operator+=(LogReal b) { return *this = *this + b; }
  LogReal& operator*=(LogReal b) { return *this = *this * b; }
};

}  // namespace qrshape
