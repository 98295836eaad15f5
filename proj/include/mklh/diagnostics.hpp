#pragma once

// Harmonization metrics and numeric audits of the linear-map error bound.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <json.hpp>

#include "mklh/error.hpp"
#include "mklh/imaging.hpp"
#include "mklh/linalg3.hpp"
#include "mklh/transport.hpp"

namespace mklh {

/// MSE / fMSE on the 0-255 scale; PSNR in dB.
struct MetricReport {
  double mse = 0.0;
  double psnr = 0.0;
  double fmse = 0.0;
  bool psnr_capped = false;
  std::size_t pixels = 0;
  std::size_t foreground_pixels = 0;
};

inline constexpr double kPsnrCapDb = 100.0;

inline double psnr_from_mse(double mse, bool* capped = nullptr) {
  const bool cap = mse < 255.0 * 255.0 * 1e-10;
  if (capped) *capped = cap;
  return cap ? kPsnrCapDb : 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline MetricReport compute_metrics(const Image& result, const Image& real, const Mask& mask) {
  require_same_shape(result, real, "compute_metrics");
  require_same_shape(result, mask, "compute_metrics");
  const auto a = result.data();
  const auto b = real.data();
  double all = 0.0, fg = 0.0;
  std::size_t fg_count = 0;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    double px = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = 255.0 * (static_cast<double>(a[3 * i + k]) - static_cast<double>(b[3 * i + k]));
      px += d * d;
    }
    all += px;
    if (mask[i]) {
      fg += px;
      ++fg_count;
    }
  }
  MetricReport r;
  r.pixels = mask.pixel_count();
  r.foreground_pixels = fg_count;
  r.mse = all / (3.0 * static_cast<double>(r.pixels));
  r.fmse = fg_count ? fg / (3.0 * static_cast<double>(fg_count)) : 0.0;
  r.psnr = psnr_from_mse(r.mse, &r.psnr_capped);
  return r;
}

inline nlohmann::json to_json(const MetricReport& r) {
  return {{"mse", r.mse},
          {"psnr", r.psnr},
          {"psnr_capped", r.psnr_capped},
          {"fmse", r.fmse},
          {"pixels", r.pixels},
          {"foreground_pixels", r.foreground_pixels}};
}

struct ClipError {
  double e_clip_emp = 0.0;        // mean ‖T(x) − clip(T(x))‖²
  double outside_fraction = 0.0;  // fraction with T(x) outside [0,1]³
  double max_displacement = 0.0;  // max over samples and channels of |z_j − clip(z)_j|
};

/// Empirical clipping error of `f` over `samples`. The tail bound
/// e_clip_emp ≤ 3·outside_fraction follows per sample from
/// |z_j − clip(z)_j| ≤ 1, which holds while every mapped coordinate stays in
/// [−1, 2]; `max_displacement` reports how far the worst sample moved so the
/// caller can tell whether it is in that regime.
inline ClipError clip_error(const MklFilter& f, std::span<const Vec3> samples) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "clip_error: no samples");
  double sum = 0.0, worst = 0.0;
  std::size_t outside = 0;
  for (const Vec3& x : samples) {
    const Vec3 z = f(x);
    const Vec3 d = z - clip_gamut(z);
    sum += squared_norm(d);
    worst = std::max({worst, std::abs(d[0]), std::abs(d[1]), std::abs(d[2])});
    if (!inside_gamut(z)) ++outside;
  }
  const double n = static_cast<double>(samples.size());
  return {sum / n, static_cast<double>(outside) / n, worst};
}

/// An affine reference map x -> a·x + s standing in for the true map.
using AffineMap = MklFilter;

struct BoundReport {
  double bias_b = 0.0;
  double a_op_norm = 0.0;
  double trace_sigma0 = 0.0;
  double lipschitz_l = 0.0;
  double e_clip_emp = 0.0;
  double outside_fraction = 0.0;
  double e_clip_bound = 0.0;
  double max_clip_displacement = 0.0;
  double e_lin_emp = 0.0;
  double e_lin_bound = 0.0;
  double total_bound = 0.0;
  double measured_error = 0.0;

  bool holds(double slack = 1e-9) const { return measured_error <= total_bound + slack; }
  bool clip_bound_holds(double slack = 1e-9) const { return e_clip_emp <= e_clip_bound + slack; }
};

/// Instantiates every term of the bound
///   E ≤ 2·E_clip + 2·E_lin,  E_lin ≤ 2B² + 2(‖A‖_op + L)²·tr Σ₀,  E_clip ≤ 3·P[outside]
/// for filter `f`, source statistics `src`, and an affine true map whose
/// Lipschitz constant is exactly the operator norm of its linear part.
/// `total_bound` combines the empirical clipping error with the linearity bound.
inline BoundReport theorem1_report(const MklFilter& f, const ColorStats& src, const AffineMap& true_map,
                                   std::span<const Vec3> samples) {
  if (samples.empty()) throw Error(Errc::EmptySamples, "theorem1_report: no samples");
  BoundReport r;
  const Vec3 mu1 = f(src.mean);
  r.bias_b = norm(mu1 - true_map(src.mean));
  r.a_op_norm = op_norm(f.a);
  r.lipschitz_l = op_norm(true_map.a);
  r.trace_sigma0 = trace(src.cov);
  r.e_lin_bound = 2.0 * r.bias_b * r.bias_b +
                  2.0 * (r.a_op_norm + r.lipschitz_l) * (r.a_op_norm + r.lipschitz_l) * r.trace_sigma0;

  const ClipError ce = clip_error(f, samples);
  r.e_clip_emp = ce.e_clip_emp;
  r.outside_fraction = ce.outside_fraction;
  r.e_clip_bound = 3.0 * ce.outside_fraction;
  r.max_clip_displacement = ce.max_displacement;

  double measured = 0.0, lin = 0.0;
  for (const Vec3& x : samples) {
    const Vec3 z = f(x);
    const Vec3 t = true_map(x);
    measured += squared_norm(clip_gamut(z) - t);
    lin += squared_norm(z - t);
  }
  const double n = static_cast<double>(samples.size());
  r.measured_error = measured / n;
  r.e_lin_emp = lin / n;
  r.total_bound = 2.0 * r.e_clip_emp + 2.0 * r.e_lin_bound;
  return r;
}

inline nlohmann::json to_json(const BoundReport& r) {
  return {{"bias_b", r.bias_b},
          {"a_op_norm", r.a_op_norm},
          {"trace_sigma0", r.trace_sigma0},
          {"lipschitz_l", r.lipschitz_l},
          {"e_clip_emp", r.e_clip_emp},
          {"outside_fraction", r.outside_fraction},
          {"e_clip_bound", r.e_clip_bound},
          {"max_clip_displacement", r.max_clip_displacement},
          {"e_lin_emp", r.e_lin_emp},
          {"e_lin_bound", r.e_lin_bound},
          {"total_bound", r.total_bound},
          {"measured_error", r.measured_error},
          {"holds", r.holds()},
          {"clip_bound_holds", r.clip_bound_holds()}};
}

inline constexpr double kDefaultDarknessThreshold = 0.08;

/// True when the mean luminance of the region is in the dark gamut corner.
inline bool darkness_flag(const ColorStats& stats, double threshold = kDefaultDarknessThreshold) {
  return (stats.mean[0] + stats.mean[1] + stats.mean[2]) / 3.0 < threshold;
}

}  // namespace mklh
