#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "lpld/error.hpp"

namespace lpld {

/// An exponent in [1, inf]. Infinity is a distinguished value, not a large number.
class PExponent {
 public:
  constexpr PExponent() = default;

  static PExponent finite(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("exponent must be a finite value >= 1, got " + std::to_string(p));
    PExponent e;
    e.value_ = p;
    return e;
  }
  static constexpr PExponent infinity() {
    PExponent e;
    e.value_ = std::numeric_limits<double>::infinity();
    return e;
  }
  /// Accepts "inf"/"infinity" or a decimal number.
  static PExponent parse(std::string_view text);

  constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
  constexpr bool is_finite() const { return !is_infinite(); }

  double value() const {
    if (is_infinite()) throw ConfigError("exponent is infinite");
    return value_;
  }
  /// 1/p with the convention 1/inf = 0.
  constexpr double reciprocal() const { return is_infinite() ? 0.0 : 1.0 / value_; }
  /// Raw double, +inf for the infinite case.
  constexpr double as_double() const { return value_; }

  friend constexpr auto operator<=>(const PExponent& a, const PExponent& b) { return a.value_ <=> b.value_; }
  friend constexpr bool operator==(const PExponent& a, const PExponent& b) { return a.value_ == b.value_; }

  std::string to_string() const;

 private:
  double value_ = 2.0;
};

inline PExponent PExponent::parse(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  if (s == "inf" || s == "infinity" || s == "Infinity" || s == "INF") return infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse exponent '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("cannot parse exponent '" + s + "'");
  return finite(v);
}

inline std::string PExponent::to_string() const {
  if (is_infinite()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

}  // namespace lpld
