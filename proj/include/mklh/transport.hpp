#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mklh/error.hpp"
#include "mklh/imaging.hpp"
#include "mklh/linalg3.hpp"
#include "mklh/parallel.hpp"

namespace mklh {

/// Affine colour map x -> a·x + s (12 parameters).
struct MklFilter {
  Mat3 a = Mat3::identity();
  Vec3 s = Vec3::zero();

  static MklFilter identity() { return {}; }

  Vec3 operator()(const Vec3& x) const { return a * x + s; }

  /// Parameter vector: a row-major, then s.
  std::array<double, 12> params() const {
    std::array<double, 12> p{};
    std::copy(a.m.begin(), a.m.end(), p.begin());
    p[9] = s[0];
    p[10] = s[1];
    p[11] = s[2];
    return p;
  }

  static MklFilter from_params(std::span<const double> p) {
    if (p.size() != 12) throw Error(Errc::InvalidArgument, "MklFilter: expected 12 parameters");
    MklFilter f;
    std::copy(p.begin(), p.begin() + 9, f.a.m.begin());
    f.s = {p[9], p[10], p[11]};
    return f;
  }

  bool is_finite() const { return mklh::is_finite(a) && mklh::is_finite(s); }

  friend bool operator==(const MklFilter&, const MklFilter&) = default;
};

/// Gaussian optimal-transport map between two colour populations:
/// a = Σ₀^{-1/2} (Σ₀^{1/2} Σ₁ Σ₀^{1/2})^{1/2} Σ₀^{-1/2}, s = μ₁ − a·μ₀.
/// The ridge `eps` is added to Σ₀ only, since only Σ₀ is inverted.
inline MklFilter fit_mkl(const ColorStats& src, const ColorStats& dst, double eps = kDefaultRidge) {
  if (!(eps >= 0.0)) throw Error(Errc::InvalidArgument, "fit_mkl: ridge must be non-negative");
  const SymMat3 s0 = src.cov + eps * SymMat3::identity();
  const SymMat3 s0_half = sqrt_spd(s0);
  const SymMat3 s0_inv_half = inv_sqrt_spd(src.cov, eps);

  const Mat3 h = s0_half.to_mat3();
  const SymMat3 middle = SymMat3::from_mat3(h * dst.cov.to_mat3() * h);
  const Mat3 root = sqrt_spd(middle).to_mat3();
  const Mat3 g = s0_inv_half.to_mat3();

  MklFilter f;
  f.a = SymMat3::from_mat3(g * root * g).to_mat3();
  f.s = dst.mean - f.a * src.mean;
  if (!f.is_finite()) throw Error(Errc::NonFinite, "fit_mkl: non-finite filter");
  return f;
}

/// Component-wise min(1, max(0, z)), the Euclidean projection onto [0,1]³.
constexpr Vec3 clip_gamut(const Vec3& z) {
  return {std::min(1.0, std::max(0.0, z[0])), std::min(1.0, std::max(0.0, z[1])),
          std::min(1.0, std::max(0.0, z[2]))};
}

constexpr bool inside_gamut(const Vec3& z) {
  return z[0] >= 0.0 && z[0] <= 1.0 && z[1] >= 0.0 && z[1] <= 1.0 && z[2] >= 0.0 && z[2] <= 1.0;
}

/// Applies `f` to every foreground pixel and clips; background copied as is.
/// Runs over row ranges on `threads` workers (0 = all cores); the output does
/// not depend on the thread count.
inline Image apply_filter(const Image& img, const Mask& mask, const MklFilter& f, unsigned threads = 1) {
  require_same_shape(img, mask, "apply_filter");
  Image out = img;
  const float* src = img.data().data();
  float* dst = out.mutable_data().data();
  const std::uint8_t* bits = mask.bits().data();
  const auto& m = f.a.m;
  const double s0 = f.s[0], s1 = f.s[1], s2 = f.s[2];
  parallel_for_ranges(img.pixel_count(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!bits[i]) continue;
      const double r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
      const double o0 = m[0] * r + m[1] * g + m[2] * b + s0;
      const double o1 = m[3] * r + m[4] * g + m[5] * b + s1;
      const double o2 = m[6] * r + m[7] * g + m[8] * b + s2;
      dst[3 * i] = static_cast<float>(std::min(1.0, std::max(0.0, o0)));
      dst[3 * i + 1] = static_cast<float>(std::min(1.0, std::max(0.0, o1)));
      dst[3 * i + 2] = static_cast<float>(std::min(1.0, std::max(0.0, o2)));
    }
  });
  return out;
}

/// Fraction of foreground pixels whose unclipped image under `f` leaves [0,1]³.
inline double clip_fraction(const Image& img, const Mask& mask, const MklFilter& f) {
  require_same_shape(img, mask, "clip_fraction");
  std::size_t fg = 0, outside = 0;
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (!mask[i]) continue;
    ++fg;
    if (!inside_gamut(f(img.pixel(i)))) ++outside;
  }
  return fg == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(fg);
}

/// Mean squared colour displacement over the foreground (quadratic Monge cost).
inline double transport_cost(const Image& before, const Image& after, const Mask& mask) {
  require_same_shape(before, after, "transport_cost");
  require_same_shape(before, mask, "transport_cost");
  const auto a = before.data();
  const auto b = after.data();
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (!mask[i]) continue;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = static_cast<double>(b[3 * i + k]) - static_cast<double>(a[3 * i + k]);
      sum += d * d;
    }
    ++n;
  }
  if (n < kMinRegionPixels)
    throw Error(Errc::MaskTooSmall, "transport_cost: foreground has " + std::to_string(n) + " pixels");
  return sum / static_cast<double>(n);
}

inline constexpr double kDefaultEmaBeta = 0.8;

/// Exponential moving average over the 12 parameters: β·prev + (1−β)·current.
inline MklFilter ema_smooth(const MklFilter& prev, const MklFilter& current, double beta = kDefaultEmaBeta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw Error(Errc::InvalidArgument, "ema_smooth: beta must be in [0,1)");
  const auto p = prev.params();
  const auto c = current.params();
  std::array<double, 12> out{};
  for (std::size_t i = 0; i < 12; ++i) out[i] = beta * p[i] + (1.0 - beta) * c[i];
  return MklFilter::from_params(out);
}

/// Smooths a filter sequence; the first element passes through unchanged.
inline std::vector<MklFilter> ema_smooth_sequence(std::span<const MklFilter> seq, double beta = kDefaultEmaBeta) {
  std::vector<MklFilter> out;
  out.reserve(seq.size());
  for (const MklFilter& f : seq) out.push_back(out.empty() ? f : ema_smooth(out.back(), f, beta));
  return out;
}

}  // namespace mklh
