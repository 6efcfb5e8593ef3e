#pragma once

// Forward-mode dual numbers. Nesting a dual inside a dual
// (Dual<Dual<double>>) yields exact second-order partials from a single
// sweep: seed one variable on the inner level and one on the outer level,
// then read value, both first partials, and the mixed partial.

#include <cmath>
#include <string>
#include <type_traits>

#include "contalg/errors.hpp"

namespace contalg {

template <typename T>
struct Dual {
  T v{};  // value
  T d{};  // derivative along the seeded direction

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T value, T deriv) : v(value), d(deriv) {}
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

/// True when no derivative component is nonzero.
inline bool is_constant(double) { return true; }
template <typename T>
bool is_constant(const Dual<T>& x) {
  return is_constant(x.v) && is_constant(x.d) && primal(x.d) == 0.0;
}

// ---- arithmetic -----------------------------------------------------------

template <typename T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <typename T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <typename T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <typename T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <typename T>
Dual<T> operator*(double a, const Dual<T>& b) {
  return {a * b.v, a * b.d};
}
template <typename T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  if (primal(b.v) == 0.0) throw DomainError("division by zero");
  T inv = T(1.0) / b.v;
  T q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}

// ---- elementary functions -------------------------------------------------
// The double overloads carry the domain checks; the dual overloads apply the
// chain rule and recurse through these, so nested levels are checked once at
// the bottom.

namespace fn {

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tan(double x) {
  if (std::cos(x) == 0.0) throw DomainError("tan at a pole");
  return std::tan(x);
}
inline double exp(double x) { return std::exp(x); }
inline double log(double x) {
  if (!(x > 0.0)) throw DomainError("log of non-positive argument " + std::to_string(x));
  return std::log(x);
}
inline double sqrt(double x) {
  if (x < 0.0) throw DomainError("sqrt of negative argument " + std::to_string(x));
  return std::sqrt(x);
}
inline double abs(double x) { return std::fabs(x); }
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// x^k for integer k. Negative k at x == 0 is a domain error.
inline double ipow(double x, int k) {
  if (k < 0 && x == 0.0) throw DomainError("negative integer power of zero");
  return std::pow(x, k);
}

/// x^y for real y; requires x > 0.
inline double rpow(double x, double y) {
  if (!(x > 0.0)) {
    throw DomainError("non-integer power of non-positive base " + std::to_string(x));
  }
  return std::pow(x, y);
}

// Forward declarations so that the dual overloads can recurse into each
// other at every nesting level.
template <typename T> Dual<T> sin(const Dual<T>& x);
template <typename T> Dual<T> cos(const Dual<T>& x);
template <typename T> Dual<T> tan(const Dual<T>& x);
template <typename T> Dual<T> exp(const Dual<T>& x);
template <typename T> Dual<T> log(const Dual<T>& x);
template <typename T> Dual<T> sqrt(const Dual<T>& x);
template <typename T> Dual<T> abs(const Dual<T>& x);
template <typename T> Dual<T> ipow(const Dual<T>& x, int k);

template <typename T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.v), cos(x.v) * x.d};
}
template <typename T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.v), -(sin(x.v) * x.d)};
}
template <typename T>
Dual<T> tan(const Dual<T>& x) {
  T t = tan(x.v);
  return {t, (T(1.0) + t * t) * x.d};
}
template <typename T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.v);
  return {e, e * x.d};
}
template <typename T>
Dual<T> log(const Dual<T>& x) {
  return {log(x.v), x.d / x.v};
}
template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
  T r = sqrt(x.v);
  if (primal(r) == 0.0) {
    if (is_constant(Dual<T>{T(0.0), x.d})) return {r, T(0.0)};
    throw DomainError("sqrt is not differentiable at 0");
  }
  return {r, x.d / (2.0 * r)};
}
template <typename T>
Dual<T> abs(const Dual<T>& x) {
  // Subgradient 0 at the kink.
  double s = sign(primal(x.v));
  return {abs(x.v), s * x.d};
}
template <typename T>
Dual<T> ipow(const Dual<T>& x, int k) {
  if (k == 0) return {T(1.0), T(0.0)};
  return {ipow(x.v, k), static_cast<double>(k) * (ipow(x.v, k - 1) * x.d)};
}
template <typename T>
Dual<T> rpow(const Dual<T>& x, const Dual<T>& y) {
  // x^y = exp(y log x)
  if (!(primal(x.v) > 0.0)) {
    throw DomainError("non-integer power of non-positive base " + std::to_string(primal(x.v)));
  }
  return exp(y * log(x));
}

}  // namespace fn

}  // namespace contalg
