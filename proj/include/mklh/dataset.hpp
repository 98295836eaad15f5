#pragma once

// Dataset directories, batch evaluation, the exposure-bias probe and the
// fit+apply throughput bench.
//
// Layout: ROOT/composites/NAME.{png,jpg}, ROOT/masks/NAME.*, optional
// ROOT/reals/NAME.*, optional ROOT/index.csv with "name,split" rows.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mklh/diagnostics.hpp"
#include "mklh/error.hpp"
#include "mklh/image_io.hpp"
#include "mklh/oracle.hpp"
#include "mklh/parallel.hpp"
#include "mklh/predictor.hpp"
#include "mklh/transport.hpp"

namespace mklh {

namespace fs = std::filesystem;

struct DatasetEntry {
  std::string name;
  fs::path composite;
  fs::path mask;
  std::optional<fs::path> real;
  std::string split;
};

struct DatasetIndex {
  fs::path root;
  std::vector<DatasetEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

namespace detail {

inline bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_image_file(e.path())) continue;
    const std::string stem = e.path().stem().string();
    auto [it, inserted] = out.emplace(stem, e.path());
    if (!inserted) throw Error(Errc::IndexError, "duplicate image stem '" + stem + "' in " + dir.string());
  }
  return out;
}

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace detail

/// Scans a dataset root. Entries are sorted by name; a composite without a
/// mask is an error, a missing real is allowed. When index.csv exists only
/// the names it lists are kept, with their split tags.
inline DatasetIndex scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::IoError, "dataset root '" + root.string() + "' is not a directory");
  const auto composites = detail::images_by_stem(root / "composites");
  const auto masks = detail::images_by_stem(root / "masks");
  const auto reals = detail::images_by_stem(root / "reals");

  std::optional<std::map<std::string, std::string>> manifest;
  if (fs::exists(root / "index.csv")) {
    manifest.emplace();
    std::istringstream in(detail::read_text_file(root / "index.csv"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = detail::trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.find(',');
      const std::string name = detail::trim(line.substr(0, comma));
      const std::string split = comma == std::string::npos ? "" : detail::trim(line.substr(comma + 1));
      if (line_no == 1 && name == "name") continue;
      if (!manifest->emplace(name, split).second)
        throw Error(Errc::IndexError, "index.csv lists '" + name + "' twice");
    }
  }

  DatasetIndex index;
  index.root = root;
  for (const auto& [name, path] : composites) {
    if (manifest && !manifest->contains(name)) continue;
    const auto m = masks.find(name);
    if (m == masks.end()) throw Error(Errc::IndexError, "composite '" + name + "' has no mask");
    DatasetEntry e{name, path, m->second, std::nullopt, manifest ? manifest->at(name) : ""};
    if (const auto r = reals.find(name); r != reals.end()) e.real = r->second;
    index.entries.push_back(std::move(e));
  }
  if (manifest)
    for (const auto& [name, split] : *manifest)
      if (!composites.contains(name)) throw Error(Errc::IndexError, "index.csv names '" + name + "' but no composite");
  return index;
}

inline CompositeTriplet load_triplet(const DatasetEntry& e) {
  CompositeTriplet t{load_image(e.composite), load_mask(e.mask), std::nullopt};
  if (e.real) t.real = load_image(*e.real);
  t.validate();
  return t;
}

/// Writes named triplets in the dataset layout. Images are 16-bit PNG so
/// a reload reproduces 8- and 16-bit sources exactly.
inline void write_dataset(const fs::path& root, std::span<const NamedTriplet> items) {
  fs::create_directories(root / "composites");
  fs::create_directories(root / "masks");
  fs::create_directories(root / "reals");
  for (const auto& it : items) {
    save_png(it.triplet.composite, root / "composites" / (it.name + ".png"), 16);
    save_mask_png(it.triplet.mask, root / "masks" / (it.name + ".png"));
    if (it.triplet.real) save_png(*it.triplet.real, root / "reals" / (it.name + ".png"), 16);
  }
}

/// Loads every entry; per-item failures come back as error strings.
struct LoadedItem {
  std::string name;
  std::optional<CompositeTriplet> triplet;
  std::string error;
};

inline std::vector<LoadedItem> load_dataset(const DatasetIndex& index, unsigned threads = 1) {
  std::vector<LoadedItem> out(index.size());
  parallel_for(index.size(), threads, [&](std::size_t i) {
    out[i].name = index.entries[i].name;
    try {
      out[i].triplet = load_triplet(index.entries[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

// Evaluation ----------------------------------------------------------------

enum class Method { Identity, Ideal, Ct, Predictor };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Identity: return "identity";
    case Method::Ideal: return "ideal";
    case Method::Ct: return "ct";
    case Method::Predictor: return "predictor";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "identity") return Method::Identity;
  if (s == "ideal") return Method::Ideal;
  if (s == "ct") return Method::Ct;
  if (s == "predictor") return Method::Predictor;
  throw Error(Errc::InvalidArgument, "unknown method '" + s + "'");
}

struct MethodSpec {
  Method kind = Method::Identity;
  const PredictorModel* model = nullptr;  // required for Method::Predictor
  double eps = kDefaultRidge;
};

/// Filter chosen by `method` for a triplet under `mask`.
inline MklFilter method_filter(const MethodSpec& method, const CompositeTriplet& t, const Mask& mask) {
  switch (method.kind) {
    case Method::Identity: return MklFilter::identity();
    case Method::Ideal: {
      const Image& real = t.require_real("ideal");
      return fit_mkl(masked_stats(t.composite, mask), masked_stats(real, mask), method.eps);
    }
    case Method::Ct: return reinhard_ct({t.composite, mask, std::nullopt});
    case Method::Predictor:
      if (!method.model) throw Error(Errc::InvalidArgument, "predictor method needs a model");
      return predict(*method.model, {t.composite, mask, std::nullopt});
  }
  throw Error(Errc::InvalidArgument, "unknown method");
}

struct EvalRow {
  std::string name;
  std::string method;
  MetricReport metrics;
  double clip_fraction = 0.0;
  bool dark_flag = false;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct Aggregate {
  double mean = 0.0;
  double sem = 0.0;  // sample std / sqrt(n); 0 for n < 2
};

inline Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  for (double v : values) a.mean += v;
  a.mean /= n;
  if (values.size() < 2) return a;
  double sq = 0.0;
  for (double v : values) sq += (v - a.mean) * (v - a.mean);
  a.sem = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
  return a;
}

struct EvalSummary {
  std::string method;
  std::vector<EvalRow> rows;
  Aggregate mse, psnr, fmse, clip_fraction, dark_flag;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

/// Harmonizes one triplet and scores it against its real image. The
/// darkness flag looks at the composite foreground (the object being processed).
inline EvalRow evaluate_triplet(const std::string& name, const CompositeTriplet& t, const MethodSpec& method,
                                Image* harmonized = nullptr) {
  EvalRow row{name, to_string(method.kind), {}, 0.0, false, {}};
  try {
    const Image& real = t.require_real("evaluate");
    t.validate();
    const MklFilter f = method_filter(method, t, t.mask);
    const Image out = apply_filter(t.composite, t.mask, f);
    row.metrics = compute_metrics(out, real, t.mask);
    row.clip_fraction = clip_fraction(t.composite, t.mask, f);
    row.dark_flag = darkness_flag(masked_stats(t.composite, t.mask));
    if (harmonized) *harmonized = out;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

inline EvalSummary summarize(std::string method, std::vector<EvalRow> rows) {
  EvalSummary s;
  s.method = std::move(method);
  std::vector<double> mse, psnr, fmse, clip, dark;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++s.failed;
      continue;
    }
    ++s.succeeded;
    mse.push_back(r.metrics.mse);
    psnr.push_back(r.metrics.psnr);
    fmse.push_back(r.metrics.fmse);
    clip.push_back(r.clip_fraction);
    dark.push_back(r.dark_flag ? 1.0 : 0.0);
  }
  s.mse = aggregate(mse);
  s.psnr = aggregate(psnr);
  s.fmse = aggregate(fmse);
  s.clip_fraction = aggregate(clip);
  s.dark_flag = aggregate(dark);
  s.rows = std::move(rows);
  return s;
}

/// In-memory evaluation of named triplets, rows in input order.
inline EvalSummary evaluate_triplets(std::span<const NamedTriplet> items, const MethodSpec& method,
                                     unsigned threads = 1) {
  std::vector<EvalRow> rows(items.size());
  parallel_for(items.size(), threads,
               [&](std::size_t i) { rows[i] = evaluate_triplet(items[i].name, items[i].triplet, method); });
  return summarize(to_string(method.kind), std::move(rows));
}

namespace detail {

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace detail

/// CSV with one row per item followed by "mean" and "sem" rows. Aggregates
/// are per-image means over successful items; failed rows carry the error.
inline std::string to_csv(const EvalSummary& s) {
  using detail::csv_number;
  std::string out = "# aggregate rows: per-image mean and standard error of the mean over " +
                    std::to_string(s.succeeded) + " successful items (" + std::to_string(s.failed) + " failed)\n";
  out += "name,method,mse,psnr,fmse,clip_fraction,dark_flag,error\n";
  for (const auto& r : s.rows) {
    out += detail::csv_field(r.name) + "," + r.method + ",";
    if (r.ok())
      out += csv_number(r.metrics.mse) + "," + csv_number(r.metrics.psnr) + "," + csv_number(r.metrics.fmse) + "," +
             csv_number(r.clip_fraction) + "," + (r.dark_flag ? "1" : "0") + ",";
    else
      out += ",,,,," + detail::csv_field(r.error);
    out += "\n";
  }
  auto agg_row = [&](const char* label, double Aggregate::*field) {
    out += std::string(label) + "," + s.method + "," + csv_number(s.mse.*field) + "," + csv_number(s.psnr.*field) +
           "," + csv_number(s.fmse.*field) + "," + csv_number(s.clip_fraction.*field) + "," +
           csv_number(s.dark_flag.*field) + ",\n";
  };
  agg_row("mean", &Aggregate::mean);
  agg_row("sem", &Aggregate::sem);
  return out;
}

/// Evaluates a dataset on disk. With an output directory, harmonized images
/// go to OUT/harmonized/NAME.png and the CSV to OUT/results.csv.
inline EvalSummary evaluate(const DatasetIndex& index, const MethodSpec& method,
                            const std::optional<fs::path>& outputs = std::nullopt, unsigned threads = 1) {
  if (outputs) fs::create_directories(*outputs / "harmonized");
  std::vector<EvalRow> rows(index.size());
  parallel_for(index.size(), threads, [&](std::size_t i) {
    const DatasetEntry& e = index.entries[i];
    try {
      const CompositeTriplet t = load_triplet(e);
      Image out;
      rows[i] = evaluate_triplet(e.name, t, method, outputs ? &out : nullptr);
      if (outputs && rows[i].ok()) save_png(out, *outputs / "harmonized" / (e.name + ".png"));
    } catch (const std::exception& ex) {
      rows[i] = EvalRow{e.name, to_string(method.kind), {}, 0.0, false, ex.what()};
    }
  });
  EvalSummary s = summarize(to_string(method.kind), std::move(rows));
  if (outputs) detail::write_text_file(*outputs / "results.csv", to_csv(s));
  return s;
}

// Exposure-bias probe -------------------------------------------------------

struct BiasProbeItem {
  std::string name;
  double param_l1 = 0.0;    // mean |p_perfect − p_dilated| over the 12 parameters
  double fmse_delta = 0.0;  // fMSE(dilated filter) − fMSE(perfect filter), both under the original mask
  std::string error;

  bool ok() const { return error.empty(); }
};

struct BiasProbeReport {
  std::string method;
  std::size_t radius = 1;
  std::vector<BiasProbeItem> items;
  Aggregate param_l1;
  Aggregate fmse_delta;
};

/// Compares the filter obtained with the pixel-perfect mask against the one
/// obtained with the mask dilated by `radius` (leaking background pixels).
inline BiasProbeItem bias_probe_triplet(const std::string& name, const CompositeTriplet& t, const MethodSpec& method,
                                        std::size_t radius) {
  BiasProbeItem item{name, 0.0, 0.0, {}};
  try {
    if (radius < 1) throw Error(Errc::InvalidArgument, "bias_probe: radius must be at least 1");
    if (method.kind != Method::Ideal && method.kind != Method::Predictor)
      throw Error(Errc::InvalidArgument, "bias_probe supports the ideal and predictor methods");
    const Image& real = t.require_real("bias_probe");
    t.validate();
    const Mask dilated = dilate_mask(t.mask, radius);
    const MklFilter perfect = method_filter(method, t, t.mask);
    const MklFilter leaky = method_filter(method, t, dilated);
    const auto p = perfect.params(), q = leaky.params();
    for (std::size_t k = 0; k < 12; ++k) item.param_l1 += std::abs(p[k] - q[k]);
    item.param_l1 /= 12.0;
    const double f_perfect = compute_metrics(apply_filter(t.composite, t.mask, perfect), real, t.mask).fmse;
    const double f_leaky = compute_metrics(apply_filter(t.composite, t.mask, leaky), real, t.mask).fmse;
    item.fmse_delta = f_leaky - f_perfect;
  } catch (const std::exception& e) {
    item.error = e.what();
  }
  return item;
}

inline BiasProbeReport summarize_probe(const MethodSpec& method, std::size_t radius, std::vector<BiasProbeItem> items) {
  BiasProbeReport r{to_string(method.kind), radius, std::move(items), {}, {}};
  std::vector<double> l1, delta;
  for (const auto& it : r.items) {
    if (!it.ok()) continue;
    l1.push_back(it.param_l1);
    delta.push_back(it.fmse_delta);
  }
  r.param_l1 = aggregate(l1);
  r.fmse_delta = aggregate(delta);
  return r;
}

inline BiasProbeReport bias_probe_triplets(std::span<const NamedTriplet> items, const MethodSpec& method,
                                           std::size_t radius, unsigned threads = 1) {
  if (radius < 1) throw Error(Errc::InvalidArgument, "bias_probe: radius must be at least 1");
  std::vector<BiasProbeItem> out(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    out[i] = bias_probe_triplet(items[i].name, items[i].triplet, method, radius);
  });
  return summarize_probe(method, radius, std::move(out));
}

inline BiasProbeReport bias_probe(const DatasetIndex& index, const MethodSpec& method, std::size_t radius,
                                  unsigned threads = 1) {
  if (radius < 1) throw Error(Errc::InvalidArgument, "bias_probe: radius must be at least 1");
  std::vector<BiasProbeItem> out(index.size());
  parallel_for(index.size(), threads, [&](std::size_t i) {
    const DatasetEntry& e = index.entries[i];
    try {
      out[i] = bias_probe_triplet(e.name, load_triplet(e), method, radius);
    } catch (const std::exception& ex) {
      out[i] = BiasProbeItem{e.name, 0.0, 0.0, ex.what()};
    }
  });
  return summarize_probe(method, radius, std::move(out));
}

inline std::string to_csv(const BiasProbeReport& r) {
  using detail::csv_number;
  std::string out = "# method " + r.method + "; aggregate rows are means and standard errors over successful items\n";
  out += "name,radius,param_l1,fmse_delta,error\n";
  const std::string rad = std::to_string(r.radius);
  for (const auto& it : r.items) {
    out += detail::csv_field(it.name) + "," + rad + ",";
    out += it.ok() ? csv_number(it.param_l1) + "," + csv_number(it.fmse_delta) + "," : ",," + detail::csv_field(it.error);
    out += "\n";
  }
  out += "mean," + rad + "," + csv_number(r.param_l1.mean) + "," + csv_number(r.fmse_delta.mean) + ",\n";
  out += "sem," + rad + "," + csv_number(r.param_l1.sem) + "," + csv_number(r.fmse_delta.sem) + ",\n";
  return out;
}

// Throughput ----------------------------------------------------------------

struct BenchSize {
  std::size_t width = 0;
  std::size_t height = 0;
};

inline std::vector<BenchSize> default_bench_sizes() { return {{256, 256}, {512, 512}, {1024, 2048}, {4096, 4096}}; }

inline BenchSize parse_bench_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    std::size_t used = 0;
    const auto w = std::stoull(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("width");
    const auto h = std::stoull(s.substr(x + 1), &used);
    if (used != s.size() - x - 1) throw std::invalid_argument("height");
    if (w == 0 || h == 0) throw std::invalid_argument("zero");
    return {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad size '" + s + "', expected WIDTHxHEIGHT");
  }
}

struct BenchRow {
  BenchSize size;
  std::size_t repetitions = 0;
  double median = 0.0;  // iterations per second
  double min = 0.0;
  double max = 0.0;
};

struct BenchConfig {
  std::size_t repetitions = 5;
  double min_seconds = 0.05;  // each repetition loops until this much time has passed
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

/// One iteration = foreground and background statistics, fit_mkl, and
/// apply_filter on a random image. Image generation is excluded.
inline BenchRow bench_size(const BenchSize& size, const BenchConfig& cfg) {
  if (cfg.repetitions == 0) throw Error(Errc::InvalidArgument, "bench: repetitions must be positive");
  const std::size_t n = size.width * size.height;
  std::vector<float> data(3 * n);
  auto rng = detail::seeded_rng(cfg.seed, size.width * 100003 + size.height);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : data) v = u(rng);
  const Image img(size.width, size.height, std::move(data));
  Mask mask(size.width, size.height);
  for (std::size_t y = 0; y < size.height; ++y)
    for (std::size_t x = 0; x < size.width; ++x)
      mask.set(x, y, x >= size.width / 4 && x < 3 * size.width / 4 && y >= size.height / 4 && y < 3 * size.height / 4);

  using clock = std::chrono::steady_clock;
  std::vector<double> rates;
  volatile float sink = 0.0f;
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    std::size_t iters = 0;
    const auto start = clock::now();
    double elapsed = 0.0;
    do {
      const ColorStats fg = masked_stats(img, mask);
      const ColorStats bg = masked_stats(img, mask, true);
      const Image out = apply_filter(img, mask, fit_mkl(fg, bg), cfg.threads);
      sink = sink + out.data()[0];
      ++iters;
      elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < cfg.min_seconds);
    rates.push_back(static_cast<double>(iters) / elapsed);
  }
  std::sort(rates.begin(), rates.end());
  const std::size_t m = rates.size();
  const double median = m % 2 ? rates[m / 2] : 0.5 * (rates[m / 2 - 1] + rates[m / 2]);
  return {size, m, median, rates.front(), rates.back()};
}

inline std::vector<BenchRow> bench(std::span<const BenchSize> sizes, const BenchConfig& cfg = {}) {
  if (sizes.empty()) throw Error(Errc::InvalidArgument, "bench: no sizes");
  std::vector<BenchRow> rows;
  for (const auto& s : sizes) rows.push_back(bench_size(s, cfg));
  return rows;
}

inline std::string to_table(std::span<const BenchRow> rows) {
  std::string out = "size,iters_per_sec_median,iters_per_sec_min,iters_per_sec_max\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zux%zu,%.3f,%.3f,%.3f\n", r.size.width, r.size.height, r.median, r.min, r.max);
    out += buf;
  }
  return out;
}

}  // namespace mklh
