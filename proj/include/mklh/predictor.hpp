#pragma once

// Filter predictor: fixed-size colour features of (composite, mask) fed to a
// small tanh MLP that regresses the 12 filter parameters. Trained with
// L_total = L_labels + alpha * L_content and plain backpropagation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mklh/error.hpp"
#include "mklh/filter_io.hpp"
#include "mklh/imaging.hpp"
#include "mklh/oracle.hpp"
#include "mklh/parallel.hpp"
#include "mklh/transport.hpp"

namespace mklh {

inline constexpr std::size_t kHistogramBins = 8;
inline constexpr std::size_t kFeatureCount = 67;
inline constexpr std::size_t kOutputCount = 12;

/// Layout: fg mean (3), fg cov upper (6), bg mean (3), bg cov upper (6),
/// fg histograms (3 channels x 8 bins), bg histograms (24), fg area fraction.
struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  static constexpr std::size_t kFgMean = 0;
  static constexpr std::size_t kFgCov = 3;
  static constexpr std::size_t kBgMean = 9;
  static constexpr std::size_t kBgCov = 12;
  static constexpr std::size_t kFgHist = 18;
  static constexpr std::size_t kBgHist = 42;
  static constexpr std::size_t kArea = 66;
};

constexpr std::size_t histogram_bin(double v) {
  const auto b = static_cast<std::size_t>(std::max(0.0, v) * static_cast<double>(kHistogramBins));
  return std::min(b, kHistogramBins - 1);
}

inline FeatureVector extract_features(const Image& composite, const Mask& mask) {
  const ColorStats fg = masked_stats(composite, mask);
  const ColorStats bg = masked_stats(composite, mask, true);
  FeatureVector f;
  auto& v = f.values;
  const auto fg_up = fg.cov.upper();
  const auto bg_up = bg.cov.upper();
  for (std::size_t k = 0; k < 3; ++k) {
    v[FeatureVector::kFgMean + k] = fg.mean[k];
    v[FeatureVector::kBgMean + k] = bg.mean[k];
  }
  for (std::size_t k = 0; k < 6; ++k) {
    v[FeatureVector::kFgCov + k] = fg_up[k];
    v[FeatureVector::kBgCov + k] = bg_up[k];
  }
  std::array<std::size_t, 3 * kHistogramBins> fg_hist{}, bg_hist{};
  const auto px = composite.data();
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    auto& hist = mask[i] ? fg_hist : bg_hist;
    for (std::size_t c = 0; c < 3; ++c) ++hist[c * kHistogramBins + histogram_bin(px[3 * i + c])];
  }
  for (std::size_t k = 0; k < 3 * kHistogramBins; ++k) {
    v[FeatureVector::kFgHist + k] = static_cast<double>(fg_hist[k]) / static_cast<double>(fg.count);
    v[FeatureVector::kBgHist + k] = static_cast<double>(bg_hist[k]) / static_cast<double>(bg.count);
  }
  v[FeatureVector::kArea] = static_cast<double>(fg.count) / static_cast<double>(mask.pixel_count());
  return f;
}

inline FeatureVector extract_features(const CompositeTriplet& t) {
  t.validate();
  return extract_features(t.composite, t.mask);
}

enum class LossNorm { L1, L2 };

/// What the 12 outputs mean. FilterParams: [a row-major, s]. TargetStats:
/// offsets [μ₁ − μ₀, Σ₁ − Σ₀ row-major] from which the filter is fitted.
enum class Parameterization { FilterParams, TargetStats };

inline std::string to_string(LossNorm n) { return n == LossNorm::L1 ? "l1" : "l2"; }
inline std::string to_string(Parameterization p) { return p == Parameterization::FilterParams ? "as" : "stats"; }

inline LossNorm parse_loss_norm(const std::string& s) {
  if (s == "l1" || s == "L1") return LossNorm::L1;
  if (s == "l2" || s == "L2") return LossNorm::L2;
  throw Error(Errc::InvalidArgument, "unknown loss norm '" + s + "'");
}

inline Parameterization parse_parameterization(const std::string& s) {
  if (s == "as") return Parameterization::FilterParams;
  if (s == "stats") return Parameterization::TargetStats;
  throw Error(Errc::InvalidArgument, "unknown parameterization '" + s + "'");
}

struct LossBreakdown {
  double labels = 0.0;
  double content = 0.0;
  double total = 0.0;
  double alpha = 0.0;
};

using Output = std::array<double, kOutputCount>;

namespace detail {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Labels term and its gradient wrt the outputs.
inline double labels_term(const Output& out, const Output& target, LossNorm norm, Output* grad) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kOutputCount; ++i) {
    const double r = out[i] - target[i];
    sum += norm == LossNorm::L1 ? std::abs(r) : r * r;
    if (grad) (*grad)[i] = (norm == LossNorm::L1 ? sign(r) : 2.0 * r) / static_cast<double>(kOutputCount);
  }
  return sum / static_cast<double>(kOutputCount);
}

// Mean absolute per-channel residual of a·x + s against the reference
// pixels; optional gradient wrt the 12 filter parameters.
inline double content_term(const Output& p, std::span<const Vec3> source, std::span<const Vec3> reference,
                           Output* grad) {
  if (source.size() != reference.size() || source.empty())
    throw Error(Errc::InvalidArgument, "content loss needs matching, non-empty pixel sets");
  Output g{};
  double sum = 0.0;
  for (std::size_t n = 0; n < source.size(); ++n) {
    const Vec3& x = source[n];
    for (std::size_t c = 0; c < 3; ++c) {
      const double r = p[3 * c] * x[0] + p[3 * c + 1] * x[1] + p[3 * c + 2] * x[2] + p[9 + c] - reference[n][c];
      sum += std::abs(r);
      if (grad) {
        const double sg = sign(r);
        g[3 * c] += sg * x[0];
        g[3 * c + 1] += sg * x[1];
        g[3 * c + 2] += sg * x[2];
        g[9 + c] += sg;
      }
    }
  }
  const double scale = 1.0 / (3.0 * static_cast<double>(source.size()));
  if (grad)
    for (std::size_t i = 0; i < kOutputCount; ++i) (*grad)[i] = g[i] * scale;
  return sum * scale;
}

inline void foreground_pixels(const CompositeTriplet& t, std::vector<Vec3>& source, std::vector<Vec3>& reference) {
  const Image& real = t.require_real("loss");
  t.validate();
  source.clear();
  reference.clear();
  for (std::size_t i = 0; i < t.mask.pixel_count(); ++i) {
    if (!t.mask[i]) continue;
    source.push_back(t.composite.pixel(i));
    reference.push_back(real.pixel(i));
  }
}

}  // namespace detail

/// Loss of a 12-parameter [a, s] prediction against the ideal filter and the
/// real foreground pixels of the triplet.
inline LossBreakdown loss(const Output& output, const MklFilter& target, const CompositeTriplet& t, double alpha,
                          LossNorm norm = LossNorm::L1) {
  if (!(alpha >= 0.0)) throw Error(Errc::InvalidArgument, "loss: alpha must be non-negative");
  std::vector<Vec3> source, reference;
  detail::foreground_pixels(t, source, reference);
  LossBreakdown r;
  r.alpha = alpha;
  r.labels = detail::labels_term(output, target.params(), norm, nullptr);
  r.content = detail::content_term(output, source, reference, nullptr);
  r.total = r.labels + alpha * r.content;
  return r;
}

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;   // out
};

struct PredictorModel {
  std::vector<DenseLayer> layers;
  std::vector<double> feature_mean = std::vector<double>(kFeatureCount, 0.0);
  std::vector<double> feature_std = std::vector<double>(kFeatureCount, 1.0);
  Parameterization parameterization = Parameterization::FilterParams;
  double eps = kDefaultRidge;
  nlohmann::json config = nlohmann::json::object();

  /// Hidden layers get Xavier-uniform weights; the output layer has zero
  /// weights and a bias equal to the identity filter, so a fresh model
  /// predicts x -> x for every input.
  static PredictorModel create(std::span<const std::size_t> hidden, std::uint64_t seed,
                               Parameterization param = Parameterization::FilterParams) {
    PredictorModel m;
    m.parameterization = param;
    std::mt19937_64 rng(seed);
    std::size_t in = kFeatureCount;
    std::vector<std::size_t> sizes(hidden.begin(), hidden.end());
    sizes.push_back(kOutputCount);
    for (std::size_t li = 0; li < sizes.size(); ++li) {
      DenseLayer l{in, sizes[li], std::vector<double>(in * sizes[li], 0.0), std::vector<double>(sizes[li], 0.0)};
      if (li + 1 < sizes.size()) {
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& w : l.weights) w = u(rng);
      } else {
        const Output id = m.identity_output();
        std::copy(id.begin(), id.end(), l.biases.begin());
      }
      m.layers.push_back(std::move(l));
      in = sizes[li];
    }
    return m;
  }

  Output identity_output() const {
    if (parameterization == Parameterization::FilterParams) return MklFilter::identity().params();
    return Output{};
  }

  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> s{layers.empty() ? kFeatureCount : layers.front().in};
    for (const auto& l : layers) s.push_back(l.out);
    return s;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  /// All weights and biases, layer by layer (weights first).
  std::vector<double> flatten() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers) {
      p.insert(p.end(), l.weights.begin(), l.weights.end());
      p.insert(p.end(), l.biases.begin(), l.biases.end());
    }
    return p;
  }

  void assign(std::span<const double> p) {
    if (p.size() != parameter_count()) throw Error(Errc::InvalidArgument, "assign: parameter count mismatch");
    std::size_t k = 0;
    for (auto& l : layers) {
      for (double& w : l.weights) w = p[k++];
      for (double& b : l.biases) b = p[k++];
    }
  }

  std::vector<double> normalize(const FeatureVector& f) const {
    std::vector<double> z(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) z[i] = (f.values[i] - feature_mean[i]) / feature_std[i];
    return z;
  }

  Output forward(const FeatureVector& f) const {
    std::vector<double> h = normalize(f);
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const DenseLayer& l = layers[li];
      std::vector<double> next(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        double acc = l.biases[o];
        const double* w = &l.weights[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * h[i];
        next[o] = li + 1 < layers.size() ? std::tanh(acc) : acc;
      }
      h = std::move(next);
    }
    Output out{};
    std::copy(h.begin(), h.end(), out.begin());
    return out;
  }
};

/// Converts raw outputs into a filter; TargetStats needs the source colour
/// statistics the offsets are relative to.
inline MklFilter output_to_filter(const Output& out, Parameterization param, const ColorStats& src,
                                  double eps = kDefaultRidge) {
  if (param == Parameterization::FilterParams) return MklFilter::from_params(out);
  ColorStats dst = src;
  dst.mean = src.mean + Vec3{out[0], out[1], out[2]};
  Mat3 delta;
  std::copy(out.begin() + 3, out.end(), delta.m.begin());
  const SymMat3 raw = SymMat3::from_mat3(src.cov.to_mat3() + delta);
  // Project onto the PSD cone before fitting.
  const SymEigen e = eigh_sym3(raw);
  SymMat3 psd;
  for (std::size_t k = 0; k < 3; ++k) psd = psd + std::max(e.values[k], 0.0) * outer(e.vectors.column(k));
  dst.cov = psd;
  return fit_mkl(src, dst, eps);
}

/// Regression target for a triplet under the given parameterization.
inline Output regression_target(const CompositeTriplet& t, Parameterization param, double eps = kDefaultRidge) {
  if (param == Parameterization::FilterParams) return fit_ideal(t, eps).params();
  const Image& real = t.require_real("regression_target");
  const ColorStats src = masked_stats(t.composite, t.mask);
  const ColorStats dst = masked_stats(real, t.mask);
  Output out{};
  for (std::size_t k = 0; k < 3; ++k) out[k] = dst.mean[k] - src.mean[k];
  const Mat3 d = dst.cov.to_mat3() - src.cov.to_mat3();
  std::copy(d.m.begin(), d.m.end(), out.begin() + 3);
  return out;
}

inline MklFilter predict(const PredictorModel& model, const CompositeTriplet& t) {
  const FeatureVector f = extract_features(t);
  const Output out = model.forward(f);
  if (model.parameterization == Parameterization::FilterParams) return MklFilter::from_params(out);
  return output_to_filter(out, model.parameterization, masked_stats(t.composite, t.mask), model.eps);
}

/// Everything the trainer needs from one triplet, precomputed once.
struct TrainingItem {
  FeatureVector features;
  Output target{};
  ColorStats source_stats;
  std::vector<Vec3> source;     // composite foreground pixels (possibly subsampled)
  std::vector<Vec3> reference;  // matching real pixels
};

/// Builds a training item; `max_pixels` > 0 keeps a deterministic evenly
/// strided subset of the foreground for the content term.
inline TrainingItem make_training_item(const CompositeTriplet& t, Parameterization param, double eps,
                                       std::size_t max_pixels = 0) {
  TrainingItem item;
  item.features = extract_features(t);
  item.target = regression_target(t, param, eps);
  item.source_stats = masked_stats(t.composite, t.mask);
  std::vector<Vec3> src, ref;
  detail::foreground_pixels(t, src, ref);
  if (max_pixels == 0 || src.size() <= max_pixels) {
    item.source = std::move(src);
    item.reference = std::move(ref);
  } else {
    for (std::size_t k = 0; k < max_pixels; ++k) {
      const std::size_t i = k * src.size() / max_pixels;
      item.source.push_back(src[i]);
      item.reference.push_back(ref[i]);
    }
  }
  return item;
}

namespace detail {

// Content term and d(content)/d(output) for TargetStats outputs, by central
// differences through the fit (the fit has no cheap closed-form derivative).
inline double stats_content(const Output& out, const TrainingItem& item, double eps, Output* grad) {
  auto eval = [&](const Output& o) {
    return content_term(output_to_filter(o, Parameterization::TargetStats, item.source_stats, eps).params(),
                        item.source, item.reference, nullptr);
  };
  const double value = eval(out);
  if (grad) {
    const double h = 1e-6;
    for (std::size_t i = 0; i < kOutputCount; ++i) {
      Output up = out, down = out;
      up[i] += h;
      down[i] -= h;
      (*grad)[i] = (eval(up) - eval(down)) / (2.0 * h);
    }
  }
  return value;
}

}  // namespace detail

/// Loss of `model` on one item and, when `grad` is given, its gradient wrt
/// model.flatten() (same order), accumulated with weight `weight`.
inline LossBreakdown item_loss(const PredictorModel& model, const TrainingItem& item, double alpha, LossNorm norm,
                               std::vector<double>* grad = nullptr, double weight = 1.0) {
  const std::size_t depth = model.layers.size();
  std::vector<std::vector<double>> acts(depth + 1);
  acts[0] = model.normalize(item.features);
  for (std::size_t li = 0; li < depth; ++li) {
    const DenseLayer& l = model.layers[li];
    acts[li + 1].resize(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double acc = l.biases[o];
      const double* w = &l.weights[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * acts[li][i];
      acts[li + 1][o] = li + 1 < depth ? std::tanh(acc) : acc;
    }
  }
  Output out{};
  std::copy(acts[depth].begin(), acts[depth].end(), out.begin());

  Output g_labels{}, g_content{};
  LossBreakdown r;
  r.alpha = alpha;
  r.labels = detail::labels_term(out, item.target, norm, grad ? &g_labels : nullptr);
  if (alpha > 0.0) {
    r.content = model.parameterization == Parameterization::FilterParams
                    ? detail::content_term(out, item.source, item.reference, grad ? &g_content : nullptr)
                    : detail::stats_content(out, item, model.eps, grad ? &g_content : nullptr);
  }
  r.total = r.labels + alpha * r.content;
  if (!std::isfinite(r.total)) throw Error(Errc::NonFiniteLoss, "loss became non-finite");
  if (!grad) return r;

  // Backward pass; delta holds dL/d(pre-activation) of the current layer.
  std::vector<double> delta(kOutputCount);
  for (std::size_t i = 0; i < kOutputCount; ++i) delta[i] = weight * (g_labels[i] + alpha * g_content[i]);
  std::vector<std::size_t> offset(depth);
  for (std::size_t li = 0, k = 0; li < depth; ++li) {
    offset[li] = k;
    k += model.layers[li].weights.size() + model.layers[li].biases.size();
  }
  for (std::size_t li = depth; li-- > 0;) {
    const DenseLayer& l = model.layers[li];
    double* gw = grad->data() + offset[li];
    double* gb = gw + l.weights.size();
    const std::vector<double>& input = acts[li];
    for (std::size_t o = 0; o < l.out; ++o) {
      gb[o] += delta[o];
      double* row = gw + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) row[i] += delta[o] * input[i];
    }
    if (li == 0) break;
    std::vector<double> prev(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* w = &l.weights[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) prev[i] += w[i] * delta[o];
    }
    for (std::size_t i = 0; i < l.in; ++i) prev[i] *= 1.0 - input[i] * input[i];  // tanh'
    delta = std::move(prev);
  }
  return r;
}

enum class Optimizer { Adam, Sgd };
enum class Schedule { Staged, Constant };

struct TrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  Schedule schedule = Schedule::Staged;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t batch_size = 8;  // 0 = full batch
  double alpha = 10.0;
  LossNorm norm = LossNorm::L1;
  Parameterization parameterization = Parameterization::FilterParams;
  double validation_fraction = 0.1;
  std::size_t content_pixels = 2048;
  double eps = kDefaultRidge;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Staged drops: x0.1 after 25% of the epochs, a further x0.5 after 55%.
  double rate_at(std::size_t epoch) const {
    if (schedule == Schedule::Constant) return learning_rate;
    const double progress = static_cast<double>(epoch) / static_cast<double>(std::max<std::size_t>(epochs, 1));
    if (progress >= 0.55) return learning_rate * 0.05;
    if (progress >= 0.25) return learning_rate * 0.1;
    return learning_rate;
  }

  nlohmann::json to_json() const {
    return {{"hidden", hidden},
            {"epochs", epochs},
            {"learning_rate", learning_rate},
            {"schedule", schedule == Schedule::Staged ? "staged" : "constant"},
            {"optimizer", optimizer == Optimizer::Adam ? "adam" : "sgd"},
            {"batch_size", batch_size},
            {"alpha", alpha},
            {"norm", to_string(norm)},
            {"parameterization", to_string(parameterization)},
            {"validation_fraction", validation_fraction},
            {"content_pixels", content_pixels},
            {"eps", eps},
            {"seed", seed}};
  }
};

struct TrainResult {
  PredictorModel model;
  std::vector<double> train_loss;  // mean total loss on the training split, before each epoch and after the last
  std::vector<double> val_loss;    // same on the validation split
  std::size_t best_epoch = 0;      // index into val_loss of the returned model
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

inline LossBreakdown mean_loss(const PredictorModel& model, std::span<const TrainingItem> items,
                               std::span<const std::size_t> indices, double alpha, LossNorm norm) {
  LossBreakdown sum;
  sum.alpha = alpha;
  for (std::size_t i : indices) {
    const LossBreakdown r = item_loss(model, items[i], alpha, norm);
    sum.labels += r.labels;
    sum.content += r.content;
  }
  const double n = static_cast<double>(std::max<std::size_t>(indices.size(), 1));
  sum.labels /= n;
  sum.content /= n;
  sum.total = sum.labels + alpha * sum.content;
  return sum;
}

/// Trains on precomputed items. A seeded shuffle holds out
/// `validation_fraction` of the items (at least one when there are two or
/// more); the model with the lowest validation loss across epochs is returned.
inline TrainResult train_items(std::span<const TrainingItem> items, const TrainConfig& cfg) {
  if (items.empty()) throw Error(Errc::EmptyDataset, "train: no training items");
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::round(cfg.validation_fraction * static_cast<double>(items.size())));
  if (cfg.validation_fraction > 0.0 && items.size() >= 2) n_val = std::max<std::size_t>(n_val, 1);
  n_val = std::min(n_val, items.size() - 1);
  TrainResult result;
  result.val_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(result.val_indices.begin(), result.val_indices.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());
  // Tiny sets validate on the training items.
  const std::vector<std::size_t>& val = result.val_indices.empty() ? result.train_indices : result.val_indices;

  PredictorModel model = PredictorModel::create(cfg.hidden, rng(), cfg.parameterization);
  model.eps = cfg.eps;
  model.config = cfg.to_json();
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i : result.train_indices) mean += items[i].features.values[k];
    mean /= static_cast<double>(result.train_indices.size());
    for (std::size_t i : result.train_indices) {
      const double d = items[i].features.values[k] - mean;
      sq += d * d;
    }
    const double sd = std::sqrt(sq / static_cast<double>(result.train_indices.size()));
    model.feature_mean[k] = mean;
    model.feature_std[k] = sd > 1e-12 ? sd : 1.0;
  }

  const std::size_t n_params = model.parameter_count();
  std::vector<double> params = model.flatten();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0), grad(n_params);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::size_t step = 0;

  auto evaluate = [&](const PredictorModel& m) {
    result.train_loss.push_back(mean_loss(m, items, result.train_indices, cfg.alpha, cfg.norm).total);
    result.val_loss.push_back(mean_loss(m, items, val, cfg.alpha, cfg.norm).total);
    if (!std::isfinite(result.train_loss.back()) || !std::isfinite(result.val_loss.back()))
      throw Error(Errc::NonFiniteLoss, "training diverged");
  };

  evaluate(model);
  result.initial_val_loss = result.best_val_loss = result.val_loss.back();
  PredictorModel best = model;

  std::vector<std::size_t> batch_order = result.train_indices;
  const std::size_t batch = cfg.batch_size == 0 ? batch_order.size() : std::min(cfg.batch_size, batch_order.size());
  const unsigned workers = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.rate_at(epoch);
    if (cfg.batch_size != 0) std::shuffle(batch_order.begin(), batch_order.end(), rng);
    for (std::size_t start = 0; start < batch_order.size(); start += batch) {
      const std::size_t end = std::min(batch_order.size(), start + batch);
      const std::size_t count = end - start;
      // Per-item gradients, reduced in index order so the sum does not
      // depend on the worker count.
      std::vector<std::vector<double>> partial(count, std::vector<double>(n_params, 0.0));
      parallel_for(count, workers, [&](std::size_t k) {
        item_loss(model, items[batch_order[start + k]], cfg.alpha, cfg.norm, &partial[k],
                  1.0 / static_cast<double>(count));
      });
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const auto& p : partial)
        for (std::size_t j = 0; j < n_params; ++j) grad[j] += p[j];

      ++step;
      if (cfg.optimizer == Optimizer::Adam) {
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (std::size_t j = 0; j < n_params; ++j) {
          m1[j] = beta1 * m1[j] + (1.0 - beta1) * grad[j];
          m2[j] = beta2 * m2[j] + (1.0 - beta2) * grad[j] * grad[j];
          params[j] -= lr * (m1[j] / c1) / (std::sqrt(m2[j] / c2) + adam_eps);
        }
      } else {
        for (std::size_t j = 0; j < n_params; ++j) params[j] -= lr * grad[j];
      }
      model.assign(params);
    }
    evaluate(model);
    if (result.val_loss.back() < result.best_val_loss) {
      result.best_val_loss = result.val_loss.back();
      result.best_epoch = result.val_loss.size() - 1;
      best = model;
    }
  }
  result.model = std::move(best);
  return result;
}

inline std::vector<TrainingItem> make_training_items(std::span<const CompositeTriplet> data, const TrainConfig& cfg) {
  if (data.empty()) throw Error(Errc::EmptyDataset, "train: empty dataset");
  std::vector<TrainingItem> items(data.size());
  parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
    items[i] = make_training_item(data[i], cfg.parameterization, cfg.eps, cfg.content_pixels);
  });
  return items;
}

inline TrainResult train(std::span<const CompositeTriplet> data, const TrainConfig& cfg) {
  const auto items = make_training_items(data, cfg);
  return train_items(items, cfg);
}

// Model files -------------------------------------------------------------

inline constexpr const char* kModelVersion = "mklp-1";

inline nlohmann::json model_to_json(const PredictorModel& m) {
  nlohmann::json weights = nlohmann::json::array(), biases = nlohmann::json::array();
  for (const auto& l : m.layers) {
    weights.push_back(l.weights);
    biases.push_back(l.biases);
  }
  return {{"version", kModelVersion},
          {"layer_sizes", m.layer_sizes()},
          {"activation", "tanh"},
          {"parameterization", to_string(m.parameterization)},
          {"eps", m.eps},
          {"weights", weights},
          {"biases", biases},
          {"feature_mean", m.feature_mean},
          {"feature_std", m.feature_std},
          {"config", m.config}};
}

inline PredictorModel model_from_json(const nlohmann::json& j, const std::string& where = "model") {
  try {
    if (j.at("version").get<std::string>() != kModelVersion)
      throw Error(Errc::ParseError, where + ": unsupported model version");
    if (j.at("activation").get<std::string>() != "tanh") throw Error(Errc::ParseError, where + ": unknown activation");
    PredictorModel m;
    m.parameterization = parse_parameterization(j.at("parameterization").get<std::string>());
    m.eps = j.at("eps").get<double>();
    const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2 || sizes.front() != kFeatureCount || sizes.back() != kOutputCount)
      throw Error(Errc::ParseError, where + ": layer sizes must run from 67 to 12");
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != sizes.size() - 1 || biases.size() != sizes.size() - 1)
      throw Error(Errc::ParseError, where + ": layer count mismatch");
    for (std::size_t li = 0; li + 1 < sizes.size(); ++li) {
      DenseLayer l{sizes[li], sizes[li + 1], weights[li].get<std::vector<double>>(),
                   biases[li].get<std::vector<double>>()};
      if (l.weights.size() != l.in * l.out || l.biases.size() != l.out)
        throw Error(Errc::ParseError, where + ": layer " + std::to_string(li) + " has the wrong number of values");
      m.layers.push_back(std::move(l));
    }
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    if (m.feature_mean.size() != kFeatureCount || m.feature_std.size() != kFeatureCount)
      throw Error(Errc::ParseError, where + ": feature normalization must have 67 entries");
    if (j.contains("config")) m.config = j.at("config");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, where + ": " + e.what());
  }
}

inline void save_model(const PredictorModel& m, const std::filesystem::path& path) {
  detail::write_text_file(path, model_to_json(m).dump(1) + "\n");
}

inline PredictorModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return model_from_json(j, path.string());
}

}  // namespace mklh
