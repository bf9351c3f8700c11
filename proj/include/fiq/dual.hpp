#pragma once

#include <cmath>

namespace fiq {

// Second-order forward jet in one variable: value, first and second derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  double dd = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}
  constexpr Dual(double value, double first, double second) : v(value), d(first), dd(second) {}

  static constexpr Dual variable(double x) { return {x, 1.0, 0.0}; }
};

constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d, -a.dd}; }
constexpr Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}

inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  const double qd = (a.d - q * b.d) * inv;
  const double qdd = (a.dd - 2.0 * qd * b.d - q * b.dd) * inv;
  return {q, qd, qdd};
}

inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }
inline Dual& operator/=(Dual& a, const Dual& b) { return a = a / b; }

// Chain rule for a scalar function with known f, f', f'' at a.v.
inline Dual chain(const Dual& a, double f, double f1, double f2) {
  return {f, f1 * a.d, f2 * a.d * a.d + f1 * a.dd};
}

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

inline Dual log(const Dual& a) { return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

// The kink at zero is treated as having zero curvature.
inline Dual abs(const Dual& a) {
  const double sg = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return {std::abs(a.v), sg * a.d, sg * a.dd};
}

inline Dual pow(const Dual& a, double p) {
  if (p == 0.0) return Dual(1.0);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  const double f = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return chain(a, f, f1, f2);
}

inline Dual atan(const Dual& a) {
  const double q = 1.0 / (1.0 + a.v * a.v);
  return chain(a, std::atan(a.v), q, -2.0 * a.v * q * q);
}

}  // namespace fiq
