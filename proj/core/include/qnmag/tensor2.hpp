#pragma once

#include <cmath>

namespace qnmag {

/// Plain 2-vector used for h, b and J fields.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// Dense 2x2 matrix, row-major. Permeability tensors are stored in this form.
struct Mat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;

  static constexpr Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }
  static constexpr Mat2 diag(double a, double b) { return {a, 0.0, 0.0, b}; }
  /// a b^T
  static constexpr Mat2 outer(const Vec2& a, const Vec2& b) {
    return {a.x * b.x, a.x * b.y, a.y * b.x, a.y * b.y};
  }

  constexpr Mat2& operator+=(const Mat2& o) {
    xx += o.xx;
    xy += o.xy;
    yx += o.yx;
    yy += o.yy;
    return *this;
  }
  constexpr Mat2& operator-=(const Mat2& o) {
    xx -= o.xx;
    xy -= o.xy;
    yx -= o.yx;
    yy -= o.yy;
    return *this;
  }
  constexpr Mat2& operator*=(double s) {
    xx *= s;
    xy *= s;
    yx *= s;
    yy *= s;
    return *this;
  }

  constexpr Mat2 transposed() const { return {xx, yx, xy, yy}; }
  constexpr double trace() const { return xx + yy; }
  constexpr double det() const { return xx * yy - xy * yx; }

  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
constexpr Mat2 operator-(Mat2 a, const Mat2& b) { return a -= b; }
constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }
constexpr Mat2 operator*(Mat2 a, double s) { return a *= s; }

constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
  return {m.xx * v.x + m.xy * v.y, m.yx * v.x + m.yy * v.y};
}

constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.xx * b.xx + a.xy * b.yx, a.xx * b.xy + a.xy * b.yy,
          a.yx * b.xx + a.yy * b.yx, a.yx * b.xy + a.yy * b.yy};
}

inline double frobenius(const Mat2& m) {
  return std::sqrt(m.xx * m.xx + m.xy * m.xy + m.yx * m.yx + m.yy * m.yy);
}

/// Eigenpairs of a symmetric 2x2 matrix; `lo <= hi`, `v_lo` and `v_hi` orthonormal.
struct SymEigen2 {
  double lo = 0.0;
  double hi = 0.0;
  Vec2 v_lo{1.0, 0.0};
  Vec2 v_hi{0.0, 1.0};
};

/// Closed-form eigen-decomposition; only the symmetric part of `m` is read
/// (`xy` is taken as the off-diagonal entry).
SymEigen2 eigen_sym(const Mat2& m);

}  // namespace qnmag
