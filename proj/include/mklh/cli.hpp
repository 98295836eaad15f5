#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.
// Progress goes to the error stream; data goes to files or the output stream.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mklh/dataset.hpp"
#include "mklh/diagnostics.hpp"
#include "mklh/error.hpp"
#include "mklh/filter_io.hpp"
#include "mklh/image_io.hpp"
#include "mklh/oracle.hpp"
#include "mklh/predictor.hpp"
#include "mklh/transport.hpp"

namespace mklh::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Usage problems found after parsing (missing companion flags and the like).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string composite, mask, real, target, target_mask, image, filter, output, input, dataset, model, bases,
      stats, true_map, history, metrics;
  std::string method = "identity";
  std::string probe_method = "ideal";
  std::string norm = "l1";
  std::string parameterization = "as";
  std::string schedule = "staged";
  std::string optimizer = "adam";
  std::vector<std::string> sizes;
  double eps = kDefaultRidge;
  double alpha = 10.0;
  double beta = kDefaultEmaBeta;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  double min_seconds = 0.05;
  std::uint64_t seed = 0;
  std::size_t radius = 2;
  std::size_t count = 200;
  std::size_t width = 256;
  std::size_t height = 256;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  std::size_t content_pixels = 2048;
  std::size_t samples = 10000;
  std::size_t repetitions = 5;
  int bit_depth = 8;
  unsigned threads = 0;
  bool parallel = false;
};

namespace detail {

inline ColorStats stats_from_json(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(mklh::detail::read_text_file(path));
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("cov").get<std::vector<double>>();
    if (mean.size() != 3 || cov.size() != 9)
      throw Error(Errc::ParseError, path.string() + ": expected \"mean\" (3) and \"cov\" (9, row-major)");
    Mat3 c;
    std::copy(cov.begin(), cov.end(), c.m.begin());
    ColorStats s;
    s.mean = {mean[0], mean[1], mean[2]};
    s.cov = SymMat3::from_mat3(c);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

inline std::vector<Vec3> gaussian_samples(const ColorStats& s, std::size_t n, std::uint64_t seed) {
  const Mat3 root = sqrt_spd(s.cov).to_mat3();
  auto rng = mklh::detail::seeded_rng(seed, 7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec3> out(n);
  for (auto& x : out) x = s.mean + root * Vec3{g(rng), g(rng), g(rng)};
  return out;
}

inline void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    mklh::detail::write_text_file(path, text);
}

inline MethodSpec method_spec(const CliConfig& c, const std::string& method,
                              std::optional<PredictorModel>& storage) {
  MethodSpec m{parse_method(method), nullptr, c.eps};
  if (m.kind == Method::Predictor) {
    if (c.model.empty()) throw UsageError("--method predictor requires --model");
    storage = load_model(c.model);
    m.model = &*storage;
  } else if (!c.model.empty()) {
    throw UsageError("--model is only used with --method predictor");
  }
  return m;
}

}  // namespace detail

/// Builds the full command grammar bound to `c`.
inline std::unique_ptr<CLI::App> make_app(CliConfig& c) {
  auto app = std::make_unique<CLI::App>("Colour harmonization with linear optimal-transport filters", "mklh");
  app->require_subcommand(1);
  app->option_defaults()->always_capture_default();
  app->fallthrough(false);

  auto threads = [&c](CLI::App* s) {
    s->add_option("--threads", c.threads, "Worker threads (0 = all logical cores)");
  };
  auto eps = [&c](CLI::App* s) { s->add_option("--eps", c.eps, "Ridge added to the source covariance")->check(CLI::NonNegativeNumber); };

  auto* fit = app->add_subcommand("fit", "Fit an MKL filter from composite foreground to target colours");
  fit->add_option("--composite", c.composite, "Composite image")->required();
  fit->add_option("--mask", c.mask, "Foreground mask of the composite")->required();
  fit->add_option("--target", c.target, "Image providing the target colours")->required();
  fit->add_option("--target-mask", c.target_mask, "Region of the target to use (default: whole image)");
  fit->add_option("-o,--output", c.output, "Filter file (.json, or .mklf for binary)")->required();
  eps(fit);

  auto* ideal = app->add_subcommand("ideal", "Ideal filter of a triplet plus its metrics");
  ideal->add_option("--composite", c.composite, "Composite image")->required();
  ideal->add_option("--mask", c.mask, "Foreground mask")->required();
  ideal->add_option("--real", c.real, "Ground-truth image")->required();
  ideal->add_option("-o,--output", c.output, "Filter file")->required();
  ideal->add_option("--metrics", c.metrics, "Metrics JSON file (default: standard output)");
  ideal->add_option("--harmonized", c.image, "Also write the harmonized PNG here");
  eps(ideal);

  auto* apply = app->add_subcommand("apply", "Apply a filter to the masked region of an image");
  apply->add_option("--image", c.image, "Input image")->required();
  apply->add_option("--mask", c.mask, "Foreground mask")->required();
  apply->add_option("--filter", c.filter, "Filter file")->required();
  apply->add_option("-o,--output", c.output, "Output PNG")->required();
  apply->add_option("--bit-depth", c.bit_depth, "PNG bit depth")->check(CLI::IsMember({8, 16}));
  threads(apply);

  auto* ct = app->add_subcommand("ct", "Per-channel colour-transfer baseline filter");
  ct->add_option("--composite", c.composite, "Composite image")->required();
  ct->add_option("--mask", c.mask, "Foreground mask")->required();
  ct->add_option("-o,--output", c.output, "Filter file")->required();

  auto* synth = app->add_subcommand("synth", "Write a synthetic affine-jitter dataset");
  synth->add_option("-o,--output", c.output, "Dataset root to create")->required();
  synth->add_option("--bases", c.bases, "Directory of base images (default: procedural bases)");
  synth->add_option("--count", c.count, "Number of procedural items")->check(CLI::PositiveNumber);
  synth->add_option("--width", c.width, "Procedural width")->check(CLI::PositiveNumber);
  synth->add_option("--height", c.height, "Procedural height")->check(CLI::PositiveNumber);
  synth->add_option("--seed", c.seed, "Random seed");
  threads(synth);

  auto* clean = app->add_subcommand("clean", "Copy a dataset with composite backgrounds replaced by the real ones");
  clean->add_option("-i,--input", c.input, "Source dataset root")->required();
  clean->add_option("-o,--output", c.output, "Destination dataset root")->required();
  threads(clean);

  auto* evaluate = app->add_subcommand("evaluate", "Harmonize a dataset and score it");
  evaluate->add_option("--dataset", c.dataset, "Dataset root")->required();
  evaluate->add_option("--method", c.method, "identity | ideal | ct | predictor")
      ->check(CLI::IsMember({"identity", "ideal", "ct", "predictor"}));
  evaluate->add_option("--model", c.model, "Predictor model file (method predictor)");
  evaluate->add_option("-o,--output", c.output, "Output directory for results.csv and harmonized images")->required();
  eps(evaluate);
  threads(evaluate);

  auto* train = app->add_subcommand("train", "Train the filter predictor");
  train->add_option("--dataset", c.dataset, "Dataset root (items need real images)")->required();
  train->add_option("-o,--output", c.output, "Model file")->required();
  train->add_option("--epochs", c.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train->add_option("--lr", c.learning_rate, "Initial learning rate")->check(CLI::PositiveNumber);
  train->add_option("--schedule", c.schedule, "staged | constant")->check(CLI::IsMember({"staged", "constant"}));
  train->add_option("--optimizer", c.optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
  train->add_option("--batch-size", c.batch_size, "Mini-batch size (0 = full batch)");
  train->add_option("--alpha", c.alpha, "Content loss weight")->check(CLI::NonNegativeNumber);
  train->add_option("--norm", c.norm, "Labels loss norm: l1 | l2")->check(CLI::IsMember({"l1", "l2"}));
  train->add_option("--param", c.parameterization, "Output parameterization: as | stats")
      ->check(CLI::IsMember({"as", "stats"}));
  train->add_option("--val-fraction", c.val_fraction, "Held-out validation fraction")->check(CLI::Range(0.0, 0.9));
  train->add_option("--content-pixels", c.content_pixels, "Foreground pixels per item for the content loss (0 = all)");
  train->add_option("--history", c.history, "Write per-epoch losses as CSV");
  train->add_option("--seed", c.seed, "Random seed");
  eps(train);
  threads(train);

  auto* predict_cmd = app->add_subcommand("predict", "Predict a filter with a trained model");
  predict_cmd->add_option("--model", c.model, "Model file")->required();
  predict_cmd->add_option("--composite", c.composite, "Composite image")->required();
  predict_cmd->add_option("--mask", c.mask, "Foreground mask")->required();
  predict_cmd->add_option("-o,--output", c.output, "Filter file")->required();

  auto* smooth = app->add_subcommand("smooth", "Exponential moving average over a filter sequence");
  smooth->add_option("-i,--input", c.input, "JSON array of filters")->required();
  smooth->add_option("-o,--output", c.output, "Smoothed sequence file")->required();
  smooth->add_option("--beta", c.beta, "Weight of the previous smoothed filter")->check(CLI::Range(0.0, 0.999999));

  auto* bound = app->add_subcommand("bound", "Instantiate the linear-map error bound for a filter");
  bound->add_option("--filter", c.filter, "Filter under audit")->required();
  bound->add_option("--true-map", c.true_map, "Affine reference map, as a filter file")->required();
  bound->add_option("--stats", c.stats, "Gaussian source: JSON with \"mean\" (3) and \"cov\" (9)");
  bound->add_option("--image", c.image, "Source image (samples are its masked pixels)");
  bound->add_option("--mask", c.mask, "Mask for --image");
  bound->add_option("--samples", c.samples, "Samples drawn from --stats")->check(CLI::PositiveNumber);
  bound->add_option("--seed", c.seed, "Random seed");
  bound->add_option("-o,--output", c.output, "Report JSON (default: standard output)");

  auto* probe = app->add_subcommand("bias-probe", "Filter drift when the mask leaks background pixels");
  probe->add_option("--dataset", c.dataset, "Dataset root")->required();
  probe->add_option("--method", c.probe_method, "ideal | predictor")->check(CLI::IsMember({"ideal", "predictor"}));
  probe->add_option("--model", c.model, "Predictor model file (method predictor)");
  probe->add_option("--radius", c.radius, "Dilation radius in pixels")->check(CLI::PositiveNumber);
  probe->add_option("-o,--output", c.output, "CSV file (default: standard output)");
  eps(probe);
  threads(probe);

  auto* bench_cmd = app->add_subcommand("bench", "Throughput of statistics + fit + apply");
  bench_cmd->add_option("--sizes", c.sizes, "Sizes as WIDTHxHEIGHT (default: 256x256 512x512 1024x2048 4096x4096)");
  bench_cmd->add_option("--repetitions", c.repetitions, "Timed repetitions per size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--min-seconds", c.min_seconds, "Minimum duration of one repetition");
  bench_cmd->add_flag("--parallel", c.parallel, "Apply on all cores instead of one");
  bench_cmd->add_option("--seed", c.seed, "Random seed");
  bench_cmd->add_option("-o,--output", c.output, "Table file (default: standard output)");
  return app;
}

namespace detail {

using mklh::detail::csv_number;
using mklh::detail::is_image_file;

inline int cmd_fit(const CliConfig& c) {
  const Image comp = load_image(c.composite);
  const Mask mask = load_mask(c.mask);
  require_same_shape(comp, mask, "fit");
  const Image target = load_image(c.target);
  const Mask tmask = c.target_mask.empty() ? Mask(target.width(), target.height(), true) : load_mask(c.target_mask);
  require_same_shape(target, tmask, "fit");
  save_filter(fit_mkl(masked_stats(comp, mask), masked_stats(target, tmask), c.eps), c.output);
  return kExitOk;
}

inline int cmd_ideal(const CliConfig& c, std::ostream& out) {
  const CompositeTriplet t{load_image(c.composite), load_mask(c.mask), load_image(c.real)};
  const MklFilter f = fit_ideal(t, c.eps);
  save_filter(f, c.output);
  const Image harmonized = apply_filter(t.composite, t.mask, f);
  nlohmann::json j = to_json(compute_metrics(harmonized, *t.real, t.mask));
  j["clip_fraction"] = clip_fraction(t.composite, t.mask, f);
  write_or_print(c.metrics, j.dump(2) + "\n", out);
  if (!c.image.empty()) save_png(harmonized, c.image);
  return kExitOk;
}

inline int cmd_apply(const CliConfig& c) {
  const Image img = load_image(c.image);
  const Mask mask = load_mask(c.mask);
  const MklFilter f = load_filter(c.filter);
  save_png(apply_filter(img, mask, f, c.threads), c.output, c.bit_depth);
  return kExitOk;
}

inline int cmd_ct(const CliConfig& c) {
  save_filter(reinhard_ct({load_image(c.composite), load_mask(c.mask), std::nullopt}), c.output);
  return kExitOk;
}

inline int cmd_synth(const CliConfig& c, std::ostream& err) {
  JitterSpec spec;
  spec.seed = c.seed;
  std::vector<NamedTriplet> items;
  if (c.bases.empty()) {
    items = synthetic_benchmark(c.count, c.width, c.height, spec, c.threads);
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(c.bases))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(Errc::EmptyDataset, "no images in '" + c.bases + "'");
    items.resize(files.size());
    parallel_for(files.size(), c.threads, [&](std::size_t i) {
      const Image base = load_image(files[i]);
      const std::uint64_t item_seed = c.seed + i;
      JitterSpec s = spec;
      s.seed = mklh::detail::seeded_rng(item_seed, 3)();
      items[i] = {files[i].stem().string(),
                  synth_triplet(base, procedural_mask(base.width(), base.height(), item_seed), s)};
    });
  }
  write_dataset(c.output, items);
  err << "wrote " << items.size() << " triplets to " << c.output << "\n";
  return kExitOk;
}

inline int cmd_clean(const CliConfig& c, std::ostream& err) {
  const DatasetIndex index = scan_dataset(c.input);
  const fs::path root = c.output;
  fs::create_directories(root / "composites");
  fs::create_directories(root / "masks");
  fs::create_directories(root / "reals");
  std::vector<std::string> errors(index.size());
  parallel_for(index.size(), c.threads, [&](std::size_t i) {
    const DatasetEntry& e = index.entries[i];
    try {
      const CompositeTriplet t = clean_triplet(load_triplet(e));
      save_png(t.composite, root / "composites" / (e.name + ".png"), 16);
      fs::copy_file(e.mask, root / "masks" / e.mask.filename(), fs::copy_options::overwrite_existing);
      fs::copy_file(*e.real, root / "reals" / e.real->filename(), fs::copy_options::overwrite_existing);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  if (fs::exists(fs::path(c.input) / "index.csv"))
    fs::copy_file(fs::path(c.input) / "index.csv", root / "index.csv", fs::copy_options::overwrite_existing);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) {
      ++failed;
      err << index.entries[i].name << ": " << errors[i] << "\n";
    }
  err << "cleaned " << index.size() - failed << " of " << index.size() << " items\n";
  return kExitOk;
}

inline int cmd_evaluate(const CliConfig& c, std::ostream& err) {
  std::optional<PredictorModel> model;
  const MethodSpec method = method_spec(c, c.method, model);
  const DatasetIndex index = scan_dataset(c.dataset);
  const EvalSummary s = evaluate(index, method, fs::path(c.output), c.threads);
  for (const auto& r : s.rows)
    if (!r.ok()) err << r.name << ": " << r.error << "\n";
  err << s.method << ": " << s.succeeded << " items, mean MSE " << s.mse.mean << " +- " << s.mse.sem << "\n";
  return kExitOk;
}

inline int cmd_train(const CliConfig& c, std::ostream& err) {
  TrainConfig cfg;
  cfg.epochs = c.epochs;
  cfg.learning_rate = c.learning_rate;
  cfg.schedule = c.schedule == "constant" ? Schedule::Constant : Schedule::Staged;
  cfg.optimizer = c.optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
  cfg.batch_size = c.batch_size;
  cfg.alpha = c.alpha;
  cfg.norm = parse_loss_norm(c.norm);
  cfg.parameterization = parse_parameterization(c.parameterization);
  cfg.validation_fraction = c.val_fraction;
  cfg.content_pixels = c.content_pixels;
  cfg.eps = c.eps;
  cfg.seed = c.seed;
  cfg.threads = c.threads;

  const DatasetIndex index = scan_dataset(c.dataset);
  std::vector<CompositeTriplet> data;
  for (auto& item : load_dataset(index, c.threads)) {
    if (!item.error.empty()) {
      err << item.name << ": skipped: " << item.error << "\n";
      continue;
    }
    if (!item.triplet->real) {
      err << item.name << ": skipped: no real image\n";
      continue;
    }
    data.push_back(std::move(*item.triplet));
  }
  const TrainResult r = train(data, cfg);
  save_model(r.model, c.output);
  if (!c.history.empty()) {
    std::string csv = "epoch,train_total,val_total\n";
    for (std::size_t e = 0; e < r.val_loss.size(); ++e)
      csv += std::to_string(e) + "," + csv_number(r.train_loss[e]) + "," + csv_number(r.val_loss[e]) + "\n";
    mklh::detail::write_text_file(c.history, csv);
  }
  err << "trained on " << r.train_indices.size() << " items; validation loss " << r.initial_val_loss << " -> "
      << r.best_val_loss << " (epoch " << r.best_epoch << ")\n";
  return kExitOk;
}

inline int cmd_predict(const CliConfig& c) {
  const PredictorModel model = load_model(c.model);
  save_filter(predict(model, {load_image(c.composite), load_mask(c.mask), std::nullopt}), c.output);
  return kExitOk;
}

inline int cmd_smooth(const CliConfig& c) {
  const auto seq = load_filter_sequence(c.input);
  save_filter_sequence(ema_smooth_sequence(seq, c.beta), c.output);
  return kExitOk;
}

inline int cmd_bound(const CliConfig& c, std::ostream& out) {
  if (c.stats.empty() == c.image.empty()) throw UsageError("bound: give exactly one of --stats or --image");
  if (!c.image.empty() && c.mask.empty()) throw UsageError("bound: --image requires --mask");
  const MklFilter f = load_filter(c.filter);
  const MklFilter truth = load_filter(c.true_map);
  std::vector<Vec3> samples;
  if (!c.stats.empty()) {
    samples = gaussian_samples(stats_from_json(c.stats), c.samples, c.seed);
  } else {
    const Image img = load_image(c.image);
    const Mask mask = load_mask(c.mask);
    require_same_shape(img, mask, "bound");
    for (std::size_t i = 0; i < mask.pixel_count(); ++i)
      if (mask[i]) samples.push_back(img.pixel(i));
  }
  const BoundReport r = theorem1_report(f, sample_stats(samples), truth, samples);
  write_or_print(c.output, to_json(r).dump(2) + "\n", out);
  return kExitOk;
}

inline int cmd_bias_probe(const CliConfig& c, std::ostream& out, std::ostream& err) {
  std::optional<PredictorModel> model;
  const MethodSpec method = method_spec(c, c.probe_method, model);
  const BiasProbeReport r = bias_probe(scan_dataset(c.dataset), method, c.radius, c.threads);
  for (const auto& it : r.items)
    if (!it.ok()) err << it.name << ": " << it.error << "\n";
  write_or_print(c.output, to_csv(r), out);
  return kExitOk;
}

inline int cmd_bench(const CliConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<BenchSize> sizes;
  for (const auto& s : c.sizes) {
    try {
      sizes.push_back(parse_bench_size(s));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (sizes.empty()) sizes = default_bench_sizes();
  BenchConfig cfg;
  cfg.repetitions = c.repetitions;
  cfg.min_seconds = c.min_seconds;
  cfg.threads = c.parallel ? 0 : 1;
  cfg.seed = c.seed;
  std::vector<BenchRow> rows;
  for (const auto& s : sizes) {
    err << "bench " << s.width << "x" << s.height << "\n";
    rows.push_back(bench_size(s, cfg));
  }
  write_or_print(c.output, to_table(rows), out);
  return kExitOk;
}

}  // namespace detail

/// First token that names no subcommand or no option of the chosen
/// subcommand, so the usage error can quote it ahead of other complaints.
inline std::optional<std::string> unknown_token(CLI::App& app, const std::vector<std::string>& args) {
  auto is_flag = [](const std::string& a) {
    return a.size() > 1 && a[0] == '-' && !(std::isdigit(static_cast<unsigned char>(a[1])) || a[1] == '.');
  };
  CLI::App* sub = nullptr;
  for (const auto& a : args) {
    const std::string name = a.substr(0, a.find('='));
    if (is_flag(a)) {
      if (name == "-h" || name == "--help") continue;
      if (!(sub ? sub : &app)->get_option_no_throw(name)) return a;
    } else if (!sub) {
      sub = app.get_subcommand_no_throw(a);
      if (!sub) return a;
    }
  }
  return std::nullopt;
}

/// Parses and runs one command line. Never throws.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig c;
  auto app = make_app(c);
  std::vector<const char*> argv;
  argv.push_back("mklh");
  for (const auto& a : args) argv.push_back(a.c_str());
  if (const auto bad = unknown_token(*app, args)) {
    err << "usage error: unrecognized argument '" << *bad << "'\nRun with --help for more information.\n";
    return kExitUsage;
  }
  try {
    app->parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    const auto* sub = app->get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "fit") return detail::cmd_fit(c);
    if (name == "ideal") return detail::cmd_ideal(c, out);
    if (name == "apply") return detail::cmd_apply(c);
    if (name == "ct") return detail::cmd_ct(c);
    if (name == "synth") return detail::cmd_synth(c, err);
    if (name == "clean") return detail::cmd_clean(c, err);
    if (name == "evaluate") return detail::cmd_evaluate(c, err);
    if (name == "train") return detail::cmd_train(c, err);
    if (name == "predict") return detail::cmd_predict(c);
    if (name == "smooth") return detail::cmd_smooth(c);
    if (name == "bound") return detail::cmd_bound(c, out);
    if (name == "bias-probe") return detail::cmd_bias_probe(c, out, err);
    if (name == "bench") return detail::cmd_bench(c, out, err);
    err << "unknown subcommand " << name << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace mklh::cli
