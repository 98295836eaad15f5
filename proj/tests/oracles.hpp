#pragma once

// Independent numeric oracles (cyclic Jacobi, Cholesky), random SPD draws and
// constructed corpora shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mklh/mklh.hpp"

namespace testing_support {


using mklh::Mat3;
using mklh::SymMat3;
using mklh::Vec3;

using Dense = std::array<std::array<double, 3>, 3>;

inline Dense dense(const Mat3& m) {
  Dense d{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) d[r][c] = m(r, c);
  return d;
}

inline Mat3 from_dense(const Dense& d) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = d[r][c];
  return m;
}

inline Dense mul(const Dense& a, const Dense& b) {
  Dense out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Dense transposed(const Dense& a) {
  Dense t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
  return t;
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix: a = V diag(w) Vᵀ.
inline void jacobi(Dense a, std::array<double, 3>& w, Dense& v) {
  v = Dense{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-300) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  for (int i = 0; i < 3; ++i) w[i] = a[i][i];
}

/// f applied to the eigenvalues of a symmetric matrix.
template <class F>
Dense spectral(const Dense& a, F f) {
  std::array<double, 3> w{};
  Dense v{};
  jacobi(a, w, v);
  Dense out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) out[i][j] += v[i][k] * f(w[k]) * v[j][k];
  return out;
}

inline Dense cholesky(const Dense& a) {
  Dense l{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = i == j ? std::sqrt(s) : s / l[j][j];
    }
  return l;
}

inline Dense lower_inverse(const Dense& l) {
  Dense inv{};
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) {
      double s = r == c ? 1.0 : 0.0;
      for (int k = 0; k < r; ++k) s -= l[r][k] * inv[k][c];
      inv[r][c] = s / l[r][r];
    }
  return inv;
}

/// Gaussian OT matrix by a different route: with Σ₀ = L Lᵀ,
/// T = L⁻ᵀ (Lᵀ Σ₁ L)^{1/2} L⁻¹ is symmetric PD and satisfies T Σ₀ T = Σ₁.
inline Mat3 mkl_oracle(const SymMat3& s0, const SymMat3& s1) {
  const Dense l = cholesky(dense(s0.to_mat3()));
  const Dense li = lower_inverse(l);
  const Dense m = mul(mul(transposed(l), dense(s1.to_mat3())), l);
  const Dense root = spectral(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  return from_dense(mul(mul(transposed(li), root), li));
}

/// Largest singular value by power iteration on MᵀM.
inline double power_op_norm(const Mat3& m) {
  const Mat3 g = mklh::transpose(m) * m;
  Vec3 x{0.57, 0.61, 0.55};
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const Vec3 y = g * x;
    const double n = mklh::norm(y);
    if (n == 0.0) return 0.0;
    lambda = n;
    x = (1.0 / n) * y;
  }
  return std::sqrt(lambda);
}

/// Random SPD matrix Q diag(λ) Qᵀ with eigenvalues log-uniform in [lo, hi].
inline SymMat3 random_spd(std::mt19937_64& rng, double lo = 1e-3, double hi = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Dense a{};
  for (auto& row : a)
    for (double& x : row) x = g(rng);
  // Gram-Schmidt for a random orthogonal basis.
  std::array<Vec3, 3> q;
  for (int c = 0; c < 3; ++c) {
    Vec3 v{a[0][c], a[1][c], a[2][c]};
    for (int k = 0; k < c; ++k) v = v - mklh::dot(v, q[k]) * q[k];
    q[c] = (1.0 / mklh::norm(v)) * v;
  }
  SymMat3 out;
  for (int k = 0; k < 3; ++k) out = out + std::exp(u(rng)) * mklh::outer(q[k]);
  return out;
}

inline double frobenius(const Mat3& m) { return mklh::frobenius_norm(m); }

inline mklh::Image random_image(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = 0.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<float> u(static_cast<float>(lo), static_cast<float>(hi));
  std::vector<float> data(3 * w * h);
  for (float& v : data) v = u(rng);
  return mklh::Image(w, h, std::move(data));
}

inline mklh::Mask random_mask(std::size_t w, std::size_t h, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  mklh::Mask m(w, h);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) m.set(i, b(rng));
  return m;
}

/// Mask with a centred rectangle covering [x0,x1) x [y0,y1).
inline mklh::Mask box_mask(std::size_t w, std::size_t h, std::size_t x0, std::size_t y0, std::size_t x1,
                           std::size_t y1) {
  mklh::Mask m(w, h);
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) m.set(x, y, true);
  return m;
}

/// Jitter ranges mild enough that no procedural base pixel ever clips.
inline mklh::JitterSpec mild_jitter(std::uint64_t seed) {
  mklh::JitterSpec s;
  s.gain = {{{0.8, 0.9}, {0.8, 0.9}, {0.8, 0.9}}};
  s.shift = {0.01, 0.03};
  s.mixing = {0.0, 0.02};
  s.seed = seed;
  return s;
}

inline std::string item_name(const std::string& prefix, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return prefix + "_" + digits;
}

/// Every item's foreground goes through the same fixed jitter, so the ideal
/// filter is one constant (the jitter's inverse) for the whole corpus.
inline std::vector<mklh::NamedTriplet> constant_filter_corpus(std::size_t count, std::size_t w, std::size_t h,
                                                              std::uint64_t seed = 1) {
  const mklh::JitterSpec spec = mild_jitter(seed);
  std::vector<mklh::NamedTriplet> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed * 7919 + i;
    out.push_back({item_name("const", i),
                   mklh::synth_triplet(mklh::procedural_base(w, h, s), mklh::procedural_mask(w, h, s), spec)});
  }
  return out;
}

/// Composite = the real image with one unclipped jitter applied everywhere:
/// foreground and background obey the same colour relation, so widening the
/// mask into the background does not change the fitted filter.
inline std::vector<mklh::NamedTriplet> matched_statistics_corpus(std::size_t count, std::size_t w, std::size_t h,
                                                                 std::uint64_t seed = 2) {
  std::vector<mklh::NamedTriplet> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed * 7919 + i;
    const mklh::Image base = mklh::procedural_base(w, h, s);
    const mklh::Image comp = mklh::apply_filter(base, mklh::Mask(w, h, true), mklh::jitter_filter(mild_jitter(s)));
    out.push_back({item_name("matched", i), {comp, mklh::procedural_mask(w, h, s), base}});
  }
  return out;
}

/// Foreground colours live in [0.6, 0.9], background colours in [0.05, 0.35];
/// only the foreground is jittered, so background pixels pulled in by a wider
/// mask obey a different colour relation.
inline std::vector<mklh::NamedTriplet> disjoint_range_corpus(std::size_t count, std::size_t w, std::size_t h,
                                                             std::uint64_t seed = 3) {
  std::vector<mklh::NamedTriplet> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed * 7919 + i;
    const mklh::Image pattern = mklh::procedural_base(w, h, s);
    const mklh::Mask mask = mklh::procedural_mask(w, h, s);
    mklh::Image real(w, h);
    for (std::size_t k = 0; k < mask.pixel_count(); ++k) {
      const Vec3 p = pattern.pixel(k);
      const double lo = mask[k] ? 0.6 : 0.05;
      real.set(k, Vec3::constant(lo) + (1.0 / 3.0) * (p - Vec3::constant(0.05)));
    }
    out.push_back({item_name("disjoint", i), mklh::synth_triplet(real, mask, mild_jitter(s))});
  }
  return out;
}

}  // namespace testing_support
