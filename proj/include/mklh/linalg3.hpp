#pragma once

// Fixed-size 3-vector / 3x3 matrix algebra used by the colour-transport code.
// Everything here is a value type; no heap allocation.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "mklh/error.hpp"

namespace mklh {

struct Vec3 {
  std::array<double, 3> v{};

  constexpr Vec3() = default;
  constexpr Vec3(double x, double y, double z) : v{x, y, z} {}

  constexpr double x() const { return v[0]; }
  constexpr double y() const { return v[1]; }
  constexpr double z() const { return v[2]; }
  constexpr double operator[](std::size_t i) const { return v[i]; }
  constexpr double& operator[](std::size_t i) { return v[i]; }

  static constexpr Vec3 zero() { return {0.0, 0.0, 0.0}; }
  static constexpr Vec3 constant(double c) { return {c, c, c}; }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
constexpr Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
constexpr double squared_norm(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(squared_norm(a)); }

inline bool is_finite(const Vec3& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

/// Dense 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{};

  constexpr double operator()(std::size_t r, std::size_t c) const { return m[3 * r + c]; }
  constexpr double& operator()(std::size_t r, std::size_t c) { return m[3 * r + c]; }

  static constexpr Mat3 zero() { return {}; }
  static constexpr Mat3 identity() { return diag(1.0, 1.0, 1.0); }
  static constexpr Mat3 diag(double a, double b, double c) {
    Mat3 r;
    r(0, 0) = a;
    r(1, 1) = b;
    r(2, 2) = c;
    return r;
  }
  static constexpr Mat3 diag(const Vec3& d) { return diag(d[0], d[1], d[2]); }
  static constexpr Mat3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i) {
      r(i, 0) = c0[i];
      r(i, 1) = c1[i];
      r(i, 2) = c2[i];
    }
    return r;
  }

  constexpr Vec3 column(std::size_t c) const { return {m[c], m[3 + c], m[6 + c]}; }
  constexpr Vec3 row(std::size_t r) const { return {m[3 * r], m[3 * r + 1], m[3 * r + 2]}; }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
  return r;
}
constexpr Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
  return r;
}
constexpr Mat3 operator*(double s, const Mat3& a) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = s * a.m[i];
  return r;
}
constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
  return r;
}
constexpr Vec3 operator*(const Mat3& a, const Vec3& x) {
  return {a(0, 0) * x[0] + a(0, 1) * x[1] + a(0, 2) * x[2],
          a(1, 0) * x[0] + a(1, 1) * x[1] + a(1, 2) * x[2],
          a(2, 0) * x[0] + a(2, 1) * x[1] + a(2, 2) * x[2]};
}

constexpr Mat3 transpose(const Mat3& a) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = a(j, i);
  return r;
}
constexpr double trace(const Mat3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }
constexpr double determinant(const Mat3& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}
inline double frobenius_norm(const Mat3& a) {
  double s = 0.0;
  for (double x : a.m) s += x * x;
  return std::sqrt(s);
}
inline bool is_finite(const Mat3& a) {
  return std::all_of(a.m.begin(), a.m.end(), [](double x) { return std::isfinite(x); });
}

/// Symmetric 3x3 matrix stored as its six unique entries.
struct SymMat3 {
  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

  constexpr double operator()(std::size_t r, std::size_t c) const {
    if (r > c) std::swap(r, c);
    if (r == 0) return c == 0 ? xx : (c == 1 ? xy : xz);
    if (r == 1) return c == 1 ? yy : yz;
    return zz;
  }

  static constexpr SymMat3 zero() { return {}; }
  static constexpr SymMat3 identity() { return diag(1.0, 1.0, 1.0); }
  static constexpr SymMat3 diag(double a, double b, double c) { return {a, 0, 0, b, 0, c}; }

  /// Upper-triangle order: xx, xy, xz, yy, yz, zz.
  constexpr std::array<double, 6> upper() const { return {xx, xy, xz, yy, yz, zz}; }

  constexpr Mat3 to_mat3() const {
    Mat3 r;
    r(0, 0) = xx; r(0, 1) = xy; r(0, 2) = xz;
    r(1, 0) = xy; r(1, 1) = yy; r(1, 2) = yz;
    r(2, 0) = xz; r(2, 1) = yz; r(2, 2) = zz;
    return r;
  }

  /// Symmetric part (a + aᵀ)/2 of an arbitrary matrix.
  static constexpr SymMat3 from_mat3(const Mat3& a) {
    return {a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), 0.5 * (a(0, 2) + a(2, 0)),
            a(1, 1), 0.5 * (a(1, 2) + a(2, 1)), a(2, 2)};
  }

  constexpr double trace() const { return xx + yy + zz; }

  friend constexpr bool operator==(const SymMat3&, const SymMat3&) = default;
};

constexpr SymMat3 operator+(const SymMat3& a, const SymMat3& b) {
  return {a.xx + b.xx, a.xy + b.xy, a.xz + b.xz, a.yy + b.yy, a.yz + b.yz, a.zz + b.zz};
}
constexpr SymMat3 operator*(double s, const SymMat3& a) {
  return {s * a.xx, s * a.xy, s * a.xz, s * a.yy, s * a.yz, s * a.zz};
}
constexpr double trace(const SymMat3& a) { return a.trace(); }
constexpr double determinant(const SymMat3& a) { return determinant(a.to_mat3()); }
inline bool is_finite(const SymMat3& a) {
  for (double x : a.upper())
    if (!std::isfinite(x)) return false;
  return true;
}

/// Outer product v vᵀ.
constexpr SymMat3 outer(const Vec3& v) {
  return {v[0] * v[0], v[0] * v[1], v[0] * v[2], v[1] * v[1], v[1] * v[2], v[2] * v[2]};
}

/// Eigen-pairs of a symmetric matrix; eigenvalues descending, eigenvectors as
/// the orthonormal columns of `vectors` in the same order.
struct SymEigen {
  Vec3 values;
  Mat3 vectors;
};

namespace detail {

// Unit eigenvector for an isolated eigenvalue: the largest cross product of
// two rows of (m - λI) spans its null space.
inline Vec3 null_vector(const SymMat3& m, double lambda) {
  const Vec3 r0{m.xx - lambda, m.xy, m.xz};
  const Vec3 r1{m.xy, m.yy - lambda, m.yz};
  const Vec3 r2{m.xz, m.yz, m.zz - lambda};
  const Vec3 c01 = cross(r0, r1);
  const Vec3 c02 = cross(r0, r2);
  const Vec3 c12 = cross(r1, r2);
  const double d01 = squared_norm(c01);
  const double d02 = squared_norm(c02);
  const double d12 = squared_norm(c12);
  if (d01 >= d02 && d01 >= d12) return (1.0 / std::sqrt(d01)) * c01;
  if (d02 >= d12) return (1.0 / std::sqrt(d02)) * c02;
  return (1.0 / std::sqrt(d12)) * c12;
}

// Orthonormal pair (u, v) completing the unit vector w to a right-handed basis.
inline void complement_basis(const Vec3& w, Vec3& u, Vec3& v) {
  if (std::abs(w[0]) > std::abs(w[1])) {
    const double inv = 1.0 / std::sqrt(w[0] * w[0] + w[2] * w[2]);
    u = {-w[2] * inv, 0.0, w[0] * inv};
  } else {
    const double inv = 1.0 / std::sqrt(w[1] * w[1] + w[2] * w[2]);
    u = {0.0, w[2] * inv, -w[1] * inv};
  }
  v = cross(w, u);
}

// Second eigenvector, restricted to the plane orthogonal to the first one.
// Works for repeated eigenvalues because the 2x2 reduced problem degrades
// gracefully to "any vector in the plane".
inline Vec3 second_vector(const SymMat3& m, const Vec3& first, double lambda) {
  Vec3 u, v;
  complement_basis(first, u, v);
  const Mat3 full = m.to_mat3();
  const Vec3 mu = full * u;
  const Vec3 mv = full * v;
  double m00 = dot(u, mu) - lambda;
  double m01 = dot(u, mv);
  double m11 = dot(v, mv) - lambda;
  const double a00 = std::abs(m00), a01 = std::abs(m01), a11 = std::abs(m11);
  if (a00 >= a11) {
    if (std::max(a00, a01) > 0.0) {
      if (a00 >= a01) {
        m01 /= m00;
        m00 = 1.0 / std::sqrt(1.0 + m01 * m01);
        m01 *= m00;
      } else {
        m00 /= m01;
        m01 = 1.0 / std::sqrt(1.0 + m00 * m00);
        m00 *= m01;
      }
      return m01 * u - m00 * v;
    }
    return u;
  }
  if (std::max(a11, a01) > 0.0) {
    if (a11 >= a01) {
      m01 /= m11;
      m11 = 1.0 / std::sqrt(1.0 + m01 * m01);
      m01 *= m11;
    } else {
      m11 /= m01;
      m01 = 1.0 / std::sqrt(1.0 + m11 * m11);
      m11 *= m01;
    }
    return m11 * u - m01 * v;
  }
  return u;
}

// One Newton step on det(m - λI); skipped near repeated roots where the
// derivative vanishes and the step would be unstable.
inline double newton_polish(const SymMat3& m, double lambda) {
  const double c2 = m.trace();
  const double c1 = m.xx * m.yy + m.xx * m.zz + m.yy * m.zz - m.xy * m.xy - m.xz * m.xz - m.yz * m.yz;
  const double c0 = determinant(m);
  const double p = ((-lambda + c2) * lambda - c1) * lambda + c0;
  const double dp = (-3.0 * lambda + 2.0 * c2) * lambda - c1;
  if (std::abs(dp) < 1e-4) return lambda;
  const double next = lambda - p / dp;
  return std::abs(next - lambda) < 1e-6 ? next : lambda;
}

// Cleans up a nearly diagonalizing basis v: Jacobi rotations on vᵀ·m·v
// (quadratically convergent from a good start), then eigenvalues from the
// resulting diagonal sorted descending.
inline SymEigen jacobi_refine(const SymMat3& m, Mat3 v) {
  const Mat3 full = m.to_mat3();
  Mat3 b = transpose(v) * full * v;
  for (int sweep = 0; sweep < 3; ++sweep) {
    const double off = b(0, 1) * b(0, 1) + b(0, 2) * b(0, 2) + b(1, 2) * b(1, 2);
    const double diag = b(0, 0) * b(0, 0) + b(1, 1) * b(1, 1) + b(2, 2) * b(2, 2);
    if (off <= 1e-34 * diag) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (b(p, q) == 0.0) continue;
        const double theta = (b(q, q) - b(p, p)) / (2.0 * b(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double vp = v(k, p), vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
        b = transpose(v) * full * v;
      }
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return b(l, l) > b(r, r); });
  return {{b(order[0], order[0]), b(order[1], order[1]), b(order[2], order[2])},
          Mat3::from_columns(v.column(order[0]), v.column(order[1]), v.column(order[2]))};
}

}  // namespace detail

/// Closed-form trigonometric eigen-solve on the scaled matrix, one Newton
/// polish per eigenvalue, cross-product eigenvectors, then a Jacobi clean-up.
inline SymEigen eigh_sym3(const SymMat3& m) {
  if (!is_finite(m)) throw Error(Errc::NonFinite, "eigh_sym3: non-finite matrix entry");

  const auto up = m.upper();
  double scale = 0.0;
  for (double x : up) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return {Vec3::zero(), Mat3::identity()};

  const SymMat3 a = (1.0 / scale) * m;
  const double off = a.xy * a.xy + a.xz * a.xz + a.yz * a.yz;
  const double q = a.trace() / 3.0;
  const double b00 = a.xx - q, b11 = a.yy - q, b22 = a.zz - q;
  const double p = std::sqrt((b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * off) / 6.0);

  if (off == 0.0 || p == 0.0) {
    // Already diagonal: sort the diagonal and permute identity columns.
    std::array<std::pair<double, std::size_t>, 3> d{{{m.xx, 0}, {m.yy, 1}, {m.zz, 2}}};
    std::stable_sort(d.begin(), d.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    const auto e = [](std::size_t i) {
      Vec3 r;
      r[i] = 1.0;
      return r;
    };
    return {{d[0].first, d[1].first, d[2].first}, Mat3::from_columns(e(d[0].second), e(d[1].second), e(d[2].second))};
  }

  const double c00 = b11 * b22 - a.yz * a.yz;
  const double c01 = a.xy * b22 - a.yz * a.xz;
  const double c02 = a.xy * a.yz - b11 * a.xz;
  const double half_det = std::clamp(0.5 * (b00 * c00 - a.xy * c01 + a.xz * c02) / (p * p * p), -1.0, 1.0);
  const double angle = std::acos(half_det) / 3.0;
  const double beta2 = 2.0 * std::cos(angle);
  const double beta0 = 2.0 * std::cos(angle + 2.0 * std::numbers::pi / 3.0);
  const double beta1 = -(beta0 + beta2);

  double lo = detail::newton_polish(a, q + p * beta0);
  double mid = detail::newton_polish(a, q + p * beta1);
  double hi = detail::newton_polish(a, q + p * beta2);

  Vec3 v_lo, v_mid, v_hi;
  if (half_det >= 0.0) {
    // The largest eigenvalue is the best separated one.
    v_hi = detail::null_vector(a, hi);
    v_mid = detail::second_vector(a, v_hi, mid);
    v_lo = cross(v_mid, v_hi);
  } else {
    v_lo = detail::null_vector(a, lo);
    v_mid = detail::second_vector(a, v_lo, mid);
    v_hi = cross(v_lo, v_mid);
  }
  return detail::jacobi_refine(m, Mat3::from_columns(v_hi, v_mid, v_lo));
}

namespace detail {

template <class F>
SymMat3 spectral_map(const SymEigen& e, F&& f) {
  const Vec3 d{f(e.values[0]), f(e.values[1]), f(e.values[2])};
  SymMat3 r;
  for (std::size_t k = 0; k < 3; ++k) r = r + d[k] * outer(e.vectors.column(k));
  return r;
}

}  // namespace detail

/// Eigenvalues below this (absolute) are treated as a PSD violation.
inline constexpr double kPsdTolerance = 1e-9;
/// Default ridge used before inverting a covariance.
inline constexpr double kDefaultRidge = 1e-6;

/// Principal square root of a positive semidefinite matrix.
inline SymMat3 sqrt_spd(const SymMat3& m) {
  const SymEigen e = eigh_sym3(m);
  if (e.values[2] < -kPsdTolerance)
    throw Error(Errc::NotPositiveSemidefinite,
                "sqrt_spd: smallest eigenvalue " + std::to_string(e.values[2]) + " is negative");
  return detail::spectral_map(e, [](double l) { return std::sqrt(std::max(l, 0.0)); });
}

/// (m + eps·I)^{-1/2}.
inline SymMat3 inv_sqrt_spd(const SymMat3& m, double eps = 0.0) {
  if (!(eps >= 0.0)) throw Error(Errc::InvalidArgument, "inv_sqrt_spd: ridge must be non-negative");
  const SymEigen e = eigh_sym3(m + eps * SymMat3::identity());
  if (e.values[2] < 1e-12)
    throw Error(Errc::SingularCovariance,
                "inv_sqrt_spd: smallest eigenvalue " + std::to_string(e.values[2]) + " below 1e-12");
  return detail::spectral_map(e, [](double l) { return 1.0 / std::sqrt(l); });
}

/// Spectral norm (largest singular value).
inline double op_norm(const Mat3& m) {
  if (!is_finite(m)) throw Error(Errc::NonFinite, "op_norm: non-finite matrix entry");
  const SymEigen e = eigh_sym3(SymMat3::from_mat3(transpose(m) * m));
  return std::sqrt(std::max(e.values[0], 0.0));
}

}  // namespace mklh
