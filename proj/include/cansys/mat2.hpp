#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <ostream>

namespace cansys {

using Complex = std::complex<double>;

template <typename T>
struct Vec2 {
  T x{}, y{};

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
};

template <typename T> Vec2<T> operator+(Vec2<T> a, const Vec2<T>& b) { return a += b; }
template <typename T> Vec2<T> operator-(Vec2<T> a, const Vec2<T>& b) { return a -= b; }
template <typename T, typename S> auto operator*(S s, const Vec2<T>& v) {
  using R = decltype(s * v.x);
  return Vec2<R>{s * v.x, s * v.y};
}

// 2x2 matrix with entries stored row-major: [[a11, a12], [a21, a22]].
template <typename T>
struct Mat2 {
  T a11{}, a12{}, a21{}, a22{};

  static constexpr Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }

  T det() const { return a11 * a22 - a12 * a21; }
  T trace() const { return a11 + a22; }

  Mat2 transpose() const { return {a11, a21, a12, a22}; }

  Mat2 inverse() const {
    const T d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }

  Mat2& operator+=(const Mat2& o) {
    a11 += o.a11; a12 += o.a12; a21 += o.a21; a22 += o.a22;
    return *this;
  }
  Mat2& operator-=(const Mat2& o) {
    a11 -= o.a11; a12 -= o.a12; a21 -= o.a21; a22 -= o.a22;
    return *this;
  }

  Vec2<T> col1() const { return {a11, a21}; }
  Vec2<T> col2() const { return {a12, a22}; }
};

using Mat2d = Mat2<double>;
using Mat2c = Mat2<Complex>;
using Vec2d = Vec2<double>;
using Vec2c = Vec2<Complex>;

template <typename T> Mat2<T> operator+(Mat2<T> a, const Mat2<T>& b) { return a += b; }
template <typename T> Mat2<T> operator-(Mat2<T> a, const Mat2<T>& b) { return a -= b; }

template <typename T, typename U>
auto operator*(const Mat2<T>& a, const Mat2<U>& b) {
  using R = decltype(a.a11 * b.a11);
  return Mat2<R>{a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                 a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}

template <typename T, typename U>
auto operator*(const Mat2<T>& a, const Vec2<U>& v) {
  using R = decltype(a.a11 * v.x);
  return Vec2<R>{a.a11 * v.x + a.a12 * v.y, a.a21 * v.x + a.a22 * v.y};
}

template <typename T, typename S>
auto operator*(S s, const Mat2<T>& a) {
  using R = decltype(s * a.a11);
  return Mat2<R>{s * a.a11, s * a.a12, s * a.a21, s * a.a22};
}

inline double maxAbs(double v) { return std::abs(v); }
inline double maxAbs(const Complex& v) { return std::abs(v); }

template <typename T>
double maxAbs(const Vec2<T>& v) {
  return std::max(maxAbs(v.x), maxAbs(v.y));
}

template <typename T>
double maxAbs(const Mat2<T>& m) {
  return std::max(std::max(maxAbs(m.a11), maxAbs(m.a12)),
                  std::max(maxAbs(m.a21), maxAbs(m.a22)));
}

template <typename T>
Mat2<Complex> toComplex(const Mat2<T>& m) {
  return {Complex(m.a11), Complex(m.a12), Complex(m.a21), Complex(m.a22)};
}

// Sign matrix of the canonical system, J = ((0, -1), (1, 0)).  Its inverse
// equals its transpose ((0, 1), (-1, 0)).
inline constexpr Mat2d kJ{0.0, -1.0, 1.0, 0.0};
inline constexpr Mat2d kJinv{0.0, 1.0, -1.0, 0.0};

// Rotation Sigma_phi with Sigma_phi * (1, i)^T = e^{i phi} (1, i)^T.
inline Mat2d rotationSigma(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  return {c, s, -s, c};
}

template <typename T>
std::ostream& operator<<(std::ostream& os, const Mat2<T>& m) {
  return os << "[[" << m.a11 << ", " << m.a12 << "], [" << m.a21 << ", "
            << m.a22 << "]]";
}

}  // namespace cansys
