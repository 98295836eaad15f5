#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mklh/error.hpp"
#include "mklh/linalg3.hpp"

namespace mklh {

/// Row-major RGB raster, three floats per pixel, every channel in [0,1].
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, Vec3 fill = Vec3::zero())
      : width_(width), height_(height), data_(3 * width * height) {
    if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "Image: empty raster");
    for (std::size_t i = 0; i < pixel_count(); ++i) set(i, fill);
  }
  Image(std::size_t width, std::size_t height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width == 0 || height == 0) throw Error(Errc::InvalidArgument, "Image: empty raster");
    if (data_.size() != 3 * width * height) throw Error(Errc::ShapeMismatch, "Image: buffer size mismatch");
    for (float& c : data_) c = std::clamp(c, 0.0f, 1.0f);
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }
  bool empty() const { return data_.empty(); }

  Vec3 pixel(std::size_t i) const { return {data_[3 * i], data_[3 * i + 1], data_[3 * i + 2]}; }
  Vec3 pixel(std::size_t x, std::size_t y) const { return pixel(y * width_ + x); }

  /// Stores the pixel; channels are clamped to [0,1].
  void set(std::size_t i, const Vec3& c) {
    for (std::size_t k = 0; k < 3; ++k) data_[3 * i + k] = static_cast<float>(std::clamp(c[k], 0.0, 1.0));
  }
  void set(std::size_t x, std::size_t y, const Vec3& c) { set(y * width_ + x, c); }

  std::span<const float> data() const { return data_; }
  std::span<float> mutable_data() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> data_;
};

/// Binary foreground indicator; true marks the region to harmonize.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return bits_.size(); }

  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void set(std::size_t x, std::size_t y, bool v) { set(y * width_ + x, v); }

  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }

  Mask inverted() const {
    Mask r = *this;
    for (auto& b : r.bits_) b = b ? 0 : 1;
    return r;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline void require_same_shape(const Image& img, const Mask& mask, const char* who) {
  if (img.width() != mask.width() || img.height() != mask.height())
    throw Error(Errc::ShapeMismatch, std::string(who) + ": image " + std::to_string(img.width()) + "x" +
                                         std::to_string(img.height()) + " vs mask " + std::to_string(mask.width()) +
                                         "x" + std::to_string(mask.height()));
}

inline void require_same_shape(const Image& a, const Image& b, const char* who) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(Errc::ShapeMismatch, std::string(who) + ": image sizes differ");
}

/// Mean and population covariance of a pixel population.
struct ColorStats {
  Vec3 mean;
  SymMat3 cov;
  std::size_t count = 0;
};

/// Smallest region accepted by the statistical routines.
inline constexpr std::size_t kMinRegionPixels = 16;

/// Statistics of the pixels selected by `mask` (or by its complement when
/// `invert` is set). Two passes: mean first, then centred second moments.
inline ColorStats masked_stats(const Image& img, const Mask& mask, bool invert = false) {
  require_same_shape(img, mask, "masked_stats");
  const auto px = img.data();
  const auto bits = mask.bits();
  const std::uint8_t want = invert ? 0 : 1;

  std::size_t n = 0;
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if ((bits[i] != 0) != (want != 0)) continue;
    s0 += px[3 * i];
    s1 += px[3 * i + 1];
    s2 += px[3 * i + 2];
    ++n;
  }
  if (n < kMinRegionPixels)
    throw Error(Errc::MaskTooSmall, "masked_stats: region has " + std::to_string(n) + " pixels, need " +
                                        std::to_string(kMinRegionPixels));
  const double inv = 1.0 / static_cast<double>(n);
  const Vec3 mean{s0 * inv, s1 * inv, s2 * inv};

  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if ((bits[i] != 0) != (want != 0)) continue;
    const double d0 = px[3 * i] - mean[0];
    const double d1 = px[3 * i + 1] - mean[1];
    const double d2 = px[3 * i + 2] - mean[2];
    xx += d0 * d0;
    xy += d0 * d1;
    xz += d0 * d2;
    yy += d1 * d1;
    yz += d1 * d2;
    zz += d2 * d2;
  }
  return {mean, {xx * inv, xy * inv, xz * inv, yy * inv, yz * inv, zz * inv}, n};
}

/// Statistics of an explicit sample set (population covariance).
inline ColorStats sample_stats(std::span<const Vec3> samples) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "sample_stats: no samples");
  Vec3 mean;
  for (const Vec3& s : samples) mean = mean + s;
  const double inv = 1.0 / static_cast<double>(samples.size());
  mean = inv * mean;
  SymMat3 cov;
  for (const Vec3& s : samples) cov = cov + outer(s - mean);
  return {mean, inv * cov, samples.size()};
}

/// Morphological dilation with a (2r+1)x(2r+1) square; separable, so done as a
/// horizontal pass followed by a vertical pass over prefix counts.
inline Mask dilate_mask(const Mask& mask, std::size_t radius) {
  if (radius == 0 || mask.pixel_count() == 0) return mask;
  const std::size_t w = mask.width(), h = mask.height();
  const auto r = static_cast<std::ptrdiff_t>(radius);

  std::vector<std::uint8_t> horiz(w * h, 0);
  std::vector<std::size_t> prefix(std::max(w, h) + 1);
  for (std::size_t y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (std::size_t x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.at(x, y) ? 1 : 0);
    for (std::size_t x = 0; x < w; ++x) {
      const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(x) - r));
      const auto hi = std::min(w, x + radius + 1);
      horiz[y * w + x] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
    }
  }
  Mask out(w, h);
  for (std::size_t x = 0; x < w; ++x) {
    prefix[0] = 0;
    for (std::size_t y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + horiz[y * w + x];
    for (std::size_t y = 0; y < h; ++y) {
      const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(y) - r));
      const auto hi = std::min(h, y + radius + 1);
      out.set(x, y, prefix[hi] - prefix[lo] > 0);
    }
  }
  return out;
}

}  // namespace mklh
