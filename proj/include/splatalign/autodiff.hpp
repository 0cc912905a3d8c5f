// Minimal forward-mode dual numbers over a fixed parameter count; enough
// for the small smooth objectives optimized in this library.

#pragma once

#include <Eigen/Core>

#include <cmath>

namespace splatalign {

template <int N>
struct Dual {
  double v = 0.0;
  Eigen::Matrix<double, N, 1> d = Eigen::Matrix<double, N, 1>::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constants are intended

  static Dual variable(double value, int index) {
    Dual x(value);
    x.d(index) = 1.0;
    return x;
  }

  Dual operator-() const {
    Dual r;
    r.v = -v;
    r.d = -d;
    return r;
  }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
};

template <int N>
inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  return a += b;
}
template <int N>
inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  return a -= b;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v * b.v;
  r.d = a.v * b.d + b.v * a.d;
  return r;
}
template <int N>
inline Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v / b.v;
  r.d = (a.d - r.v * b.d) / b.v;
  return r;
}

// Mixed scalar operands (template deduction ignores the implicit
// constructor, so these are spelled out).
template <int N>
inline Dual<N> operator+(const Dual<N>& a, double b) {
  Dual<N> r = a;
  r.v += b;
  return r;
}
template <int N>
inline Dual<N> operator+(double a, const Dual<N>& b) {
  return b + a;
}
template <int N>
inline Dual<N> operator-(const Dual<N>& a, double b) {
  Dual<N> r = a;
  r.v -= b;
  return r;
}
template <int N>
inline Dual<N> operator-(double a, const Dual<N>& b) {
  Dual<N> r = -b;
  r.v += a;
  return r;
}
template <int N>
inline Dual<N> operator*(const Dual<N>& a, double b) {
  Dual<N> r;
  r.v = a.v * b;
  r.d = a.d * b;
  return r;
}
template <int N>
inline Dual<N> operator*(double a, const Dual<N>& b) {
  return b * a;
}
template <int N>
inline Dual<N> operator/(const Dual<N>& a, double b) {
  Dual<N> r;
  r.v = a.v / b;
  r.d = a.d / b;
  return r;
}
template <int N>
inline Dual<N> operator/(double a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a / b.v;
  r.d = (-a / (b.v * b.v)) * b.d;
  return r;
}

template <int N>
inline Dual<N> exp(const Dual<N>& a) {
  Dual<N> r;
  r.v = std::exp(a.v);
  r.d = r.v * a.d;
  return r;
}
template <int N>
inline Dual<N> sqrt(const Dual<N>& a) {
  Dual<N> r;
  r.v = std::sqrt(a.v);
  r.d = a.d / (2.0 * r.v);
  return r;
}
template <int N>
inline Dual<N> sin(const Dual<N>& a) {
  Dual<N> r;
  r.v = std::sin(a.v);
  r.d = std::cos(a.v) * a.d;
  return r;
}
template <int N>
inline Dual<N> cos(const Dual<N>& a) {
  Dual<N> r;
  r.v = std::cos(a.v);
  r.d = -std::sin(a.v) * a.d;
  return r;
}
template <int N>
inline Dual<N> acos(const Dual<N>& a) {
  Dual<N> r;
  r.v = std::acos(a.v);
  r.d = -a.d / std::sqrt(1.0 - a.v * a.v);
  return r;
}

inline double value_of(double x) { return x; }
template <int N>
inline double value_of(const Dual<N>& x) {
  return x.v;
}

}  // namespace splatalign
