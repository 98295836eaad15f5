#pragma once

// Ground-truth filters, the classical colour-transfer baseline and a
// procedural source of composite/mask/real triplets.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mklh/error.hpp"
#include "mklh/imaging.hpp"
#include "mklh/transport.hpp"

namespace mklh {

struct CompositeTriplet {
  Image composite;
  Mask mask;
  std::optional<Image> real;

  void validate() const {
    require_same_shape(composite, mask, "CompositeTriplet");
    if (real) require_same_shape(composite, *real, "CompositeTriplet");
  }

  const Image& require_real(const char* who) const {
    if (!real) throw Error(Errc::MissingGroundTruth, std::string(who) + ": triplet has no real image");
    return *real;
  }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Distribution of the random affine colour jitter used to fabricate composites.
struct JitterSpec {
  std::array<Range, 3> gain{{{0.6, 1.5}, {0.6, 1.5}, {0.6, 1.5}}};
  Range shift{-0.15, 0.15};
  Range mixing{0.0, 0.1};
  std::uint64_t seed = 0;

  static JitterSpec identity(std::uint64_t seed = 0) {
    JitterSpec s;
    s.gain = {{{1, 1}, {1, 1}, {1, 1}}};
    s.shift = {0, 0};
    s.mixing = {0, 0};
    s.seed = seed;
    return s;
  }

  void validate() const {
    auto check = [](const Range& r, double lo, double hi, const char* what) {
      if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi)
        throw Error(Errc::InvalidArgument, std::string("JitterSpec: ") + what + " range must be ordered within [" +
                                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
    };
    for (const Range& g : gain) check(g, 0.5, 1.8, "gain");
    check(shift, -0.25, 0.25, "shift");
    check(mixing, 0.0, 0.15, "mixing");
  }
};

/// Draws the jitter map for `spec.seed`. The linear part is
/// G^{1/2}(I + M)G^{1/2} with G the diagonal gains and M a symmetric
/// zero-diagonal mixing matrix, so it is symmetric positive definite and an
/// MKL fit between jittered and original colours recovers its inverse exactly.
inline MklFilter jitter_filter(const JitterSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto draw = [&rng](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  Vec3 root_gain;
  for (std::size_t c = 0; c < 3; ++c) root_gain[c] = std::sqrt(draw(spec.gain[c]));
  const double strength = draw(spec.mixing);
  const Range off{-strength, strength};
  const double m01 = draw(off), m02 = draw(off), m12 = draw(off);
  const double shift = draw(spec.shift);

  Mat3 mix = Mat3::identity();
  mix(0, 1) = mix(1, 0) = m01;
  mix(0, 2) = mix(2, 0) = m02;
  mix(1, 2) = mix(2, 1) = m12;
  const Mat3 g = Mat3::diag(root_gain);
  return {g * mix * g, Vec3::constant(shift)};
}

/// Composite = base with the foreground pushed through a random jitter.
inline CompositeTriplet synth_triplet(const Image& base, const Mask& mask, const JitterSpec& spec) {
  require_same_shape(base, mask, "synth_triplet");
  return {apply_filter(base, mask, jitter_filter(spec)), mask, base};
}

/// Ideal linear OT filter: foreground colours of the composite mapped onto the
/// foreground colours of the ground truth.
inline MklFilter fit_ideal(const CompositeTriplet& t, double eps = kDefaultRidge) {
  const Image& real = t.require_real("fit_ideal");
  t.validate();
  return fit_mkl(masked_stats(t.composite, t.mask), masked_stats(real, t.mask), eps);
}

/// Per-channel mean/std transfer from foreground to background, in RGB.
inline MklFilter reinhard_ct(const CompositeTriplet& t) {
  t.validate();
  const ColorStats fg = masked_stats(t.composite, t.mask);
  const ColorStats bg = masked_stats(t.composite, t.mask, true);
  const std::array<double, 3> fg_var{fg.cov.xx, fg.cov.yy, fg.cov.zz};
  const std::array<double, 3> bg_var{bg.cov.xx, bg.cov.yy, bg.cov.zz};
  Vec3 gain;
  for (std::size_t c = 0; c < 3; ++c) {
    const double fg_std = std::sqrt(std::max(fg_var[c], 0.0));
    gain[c] = fg_std > 1e-12 ? std::sqrt(std::max(bg_var[c], 0.0)) / fg_std : 1.0;
  }
  MklFilter f;
  f.a = Mat3::diag(gain);
  f.s = bg.mean - f.a * fg.mean;
  return f;
}

/// Replaces every background pixel of the composite by the real pixel.
inline CompositeTriplet clean_triplet(const CompositeTriplet& t) {
  const Image& real = t.require_real("clean_triplet");
  t.validate();
  CompositeTriplet out = t;
  auto dst = out.composite.mutable_data();
  const auto src = real.data();
  for (std::size_t i = 0; i < t.mask.pixel_count(); ++i) {
    if (t.mask[i]) continue;
    for (std::size_t k = 0; k < 3; ++k) dst[3 * i + k] = src[3 * i + k];
  }
  return out;
}

namespace detail {

inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Smooth colour gradient plus soft colour blobs plus mild noise, clamped
/// to [0.05, 0.95] so a moderate jitter rarely saturates.
inline Image procedural_base(std::size_t width, std::size_t height, std::uint64_t seed) {
  auto rng = detail::seeded_rng(seed, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto rand_vec = [&](double lo, double hi) { return Vec3{uni(lo, hi), uni(lo, hi), uni(lo, hi)}; };

  const Vec3 base = rand_vec(0.3, 0.7);
  const Vec3 grad_x = rand_vec(-0.25, 0.25);
  const Vec3 grad_y = rand_vec(-0.25, 0.25);
  struct Blob {
    double cx, cy, inv_r2;
    Vec3 color;
  };
  std::vector<Blob> blobs(6);
  for (Blob& b : blobs) {
    const double r = uni(0.05, 0.25);
    b = {uni(0.0, 1.0), uni(0.0, 1.0), 1.0 / (r * r), rand_vec(-0.2, 0.2)};
  }
  std::normal_distribution<double> noise(0.0, 0.02);

  Image img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      Vec3 c = base + (u - 0.5) * grad_x + (v - 0.5) * grad_y;
      for (const Blob& b : blobs) {
        const double d2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
        c = c + std::exp(-d2 * b.inv_r2) * b.color;
      }
      c = c + Vec3{noise(rng), noise(rng), noise(rng)};
      for (std::size_t k = 0; k < 3; ++k) c[k] = std::clamp(c[k], 0.05, 0.95);
      img.set(x, y, c);
    }
  }
  return img;
}

/// Rotated ellipse covering roughly 7-28% of the frame.
inline Mask procedural_mask(std::size_t width, std::size_t height, std::uint64_t seed) {
  auto rng = detail::seeded_rng(seed, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double cx = uni(0.3, 0.7), cy = uni(0.3, 0.7);
  const double ax = uni(0.15, 0.3), ay = uni(0.15, 0.3);
  const double theta = uni(0.0, 3.141592653589793);
  const double ct = std::cos(theta), st = std::sin(theta);
  Mask m(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height) - cy;
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width) - cx;
      const double p = (ct * u + st * v) / ax;
      const double q = (-st * u + ct * v) / ay;
      m.set(x, y, p * p + q * q <= 1.0);
    }
  }
  return m;
}

struct NamedTriplet {
  std::string name;
  CompositeTriplet triplet;
};

/// Procedural benchmark: item i uses base/mask/jitter seeds derived from
/// spec.seed + i, so any item can be regenerated on its own.
inline JitterSpec synthetic_item_spec(std::size_t index, const JitterSpec& spec) {
  JitterSpec item_spec = spec;
  item_spec.seed = detail::seeded_rng(spec.seed + index, 3)();
  return item_spec;
}

inline NamedTriplet synthetic_item(std::size_t index, std::size_t width, std::size_t height, const JitterSpec& spec) {
  const std::uint64_t item_seed = spec.seed + index;
  const JitterSpec item_spec = synthetic_item_spec(index, spec);
  char name[32];
  std::snprintf(name, sizeof name, "synth_%04zu", index);
  return {name, synth_triplet(procedural_base(width, height, item_seed), procedural_mask(width, height, item_seed),
                              item_spec)};
}

inline std::vector<NamedTriplet> synthetic_benchmark(std::size_t count = 200, std::size_t width = 256,
                                                     std::size_t height = 256, const JitterSpec& spec = {},
                                                     unsigned threads = 1) {
  spec.validate();
  std::vector<NamedTriplet> items(count);
  parallel_for(count, threads, [&](std::size_t i) { items[i] = synthetic_item(i, width, height, spec); });
  return items;
}

}  // namespace mklh
