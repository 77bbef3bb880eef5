#include "camo/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "camo/error.hpp"
#include "camo/evaluator.hpp"
#include "camo/ingest.hpp"
#include "camo/plot.hpp"
#include "camo/png_io.hpp"
#include "camo/synth.hpp"
#include "camo/toy_detector.hpp"
#include "camo/trainer.hpp"
#include "params.hpp"

#ifndef CAMO_VERSION
#define CAMO_VERSION "unknown"
#endif

namespace camo {
namespace {

namespace fs = std::filesystem;
using cli::Json;
using cli::MissingInput;
using cli::ParamSet;
using cli::UsageError;
using Kind = ParamSet::Kind;

// ---------------------------------------------------------------------------
// Run directories

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return os.str();
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct RunContext {
  std::string command;
  fs::path dir;
  Json params;
  std::string config_hash;
  std::ostream& out;

  std::uint64_t seed() const { return params.at("seed").get<std::uint64_t>(); }
};

fs::path create_run_dir(const fs::path& out_root, const std::optional<fs::path>& explicit_dir,
                        std::uint64_t seed, const std::string& stamp) {
  if (explicit_dir) {
    fs::create_directories(*explicit_dir);
    return *explicit_dir;
  }
  const std::string base = stamp + "-seed" + std::to_string(seed);
  fs::path dir = out_root / base;
  for (int k = 2; fs::exists(dir); ++k) dir = out_root / (base + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Parameter access

std::optional<std::string> opt_text(const Json& p, const std::string& key) {
  if (p.at(key).is_null()) return std::nullopt;
  return p.at(key).get<std::string>();
}

double real(const Json& p, const std::string& key) { return p.at(key).get<double>(); }
int integer(const Json& p, const std::string& key) { return p.at(key).get<int>(); }

fs::path input_path(const Json& p, const std::string& key) {
  const auto value = opt_text(p, key);
  if (!value || value->empty()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    throw UsageError("missing required option " + flag);
  }
  if (!fs::exists(*value)) throw MissingInput("input '" + *value + "' not found");
  return *value;
}

std::optional<fs::path> optional_input(const Json& p, const std::string& key) {
  const auto value = opt_text(p, key);
  if (!value || value->empty()) return std::nullopt;
  if (!fs::exists(*value)) throw MissingInput("input '" + *value + "' not found");
  return fs::path(*value);
}

void add_seed(CLI::App& app, ParamSet& ps) { ps.add(app, "seed", Kind::Int, 1, "random seed"); }

void add_geometry(CLI::App& app, ParamSet& ps, Json default_preset) {
  ps.add(app, "geometry", Kind::Text, std::move(default_preset),
         "patch geometry preset: small, large, large-side, two-small");
  ps.add(app, "rel_width", Kind::Real, nullptr, "patch width relative to the box (overrides preset)");
  ps.add(app, "rel_height", Kind::Real, nullptr, "patch height relative to the box (overrides preset)");
  ps.add(app, "placement", Kind::Text, nullptr, "on-top, side or two-on-top (overrides preset)");
  ps.add(app, "side_gap", Kind::Real, 0.05, "side placement clearance as a fraction of box width");
}

PatchConfig preset(const std::string& name) {
  if (name == "small") return PatchConfig::small();
  if (name == "large") return PatchConfig::large();
  if (name == "large-side") return PatchConfig::large_side();
  if (name == "two-small") return PatchConfig::two_small();
  throw InvalidArgument("unknown geometry preset '" + name +
                        "' (expected small, large, large-side or two-small)");
}

/// Preset overridden field by field; `fallback` applies when neither a
/// preset nor any override is given.
PatchConfig resolve_geometry(const Json& p, const std::optional<PatchConfig>& fallback) {
  const auto name = opt_text(p, "geometry");
  const bool overridden = !p.at("rel_width").is_null() || !p.at("rel_height").is_null() ||
                          !p.at("placement").is_null();
  PatchConfig c = name ? preset(*name) : (fallback && !overridden ? *fallback : PatchConfig::small());
  const double rw = p.at("rel_width").is_null() ? c.rel_width : real(p, "rel_width");
  const double rh = p.at("rel_height").is_null() ? c.rel_height : real(p, "rel_height");
  const PlacementMode mode =
      p.at("placement").is_null() ? c.placement : parse_placement(p.at("placement").get<std::string>());
  c = PatchConfig::make(rw, rh, mode);
  c.side_gap = real(p, "side_gap");
  c.validate();
  return c;
}

void add_transform_ranges(CLI::App& app, ParamSet& ps) {
  const TransformRanges d;
  ps.add(app, "scale_min", Kind::Real, d.scale.min, "scale jitter lower bound");
  ps.add(app, "scale_max", Kind::Real, d.scale.max, "scale jitter upper bound");
  ps.add(app, "noise_min", Kind::Real, d.noise.min, "additive noise amplitude lower bound");
  ps.add(app, "noise_max", Kind::Real, d.noise.max, "additive noise amplitude upper bound");
  ps.add(app, "contrast_min", Kind::Real, d.contrast.min, "contrast factor lower bound");
  ps.add(app, "contrast_max", Kind::Real, d.contrast.max, "contrast factor upper bound");
  ps.add(app, "brightness_min", Kind::Real, d.brightness.min, "brightness offset lower bound");
  ps.add(app, "brightness_max", Kind::Real, d.brightness.max, "brightness offset upper bound");
}

TransformRanges resolve_ranges(const Json& p) {
  TransformRanges r{{real(p, "scale_min"), real(p, "scale_max")},
                    {real(p, "noise_min"), real(p, "noise_max")},
                    {real(p, "contrast_min"), real(p, "contrast_max")},
                    {real(p, "brightness_min"), real(p, "brightness_max")}};
  r.validate();
  return r;
}

TransformPolicy parse_policy(const std::string& text) {
  if (text == "randomized") return TransformPolicy::Randomized;
  if (text == "identity") return TransformPolicy::Identity;
  throw InvalidArgument("unknown transform policy '" + text + "' (expected randomized or identity)");
}

/// Rescales samples whose size differs from the detector input.
Dataset fit_dataset(const Dataset& dataset, const Detector& detector) {
  Dataset out;
  for (const Sample& s : dataset.samples) {
    if (s.image.width() == detector.input_width() && s.image.height() == detector.input_height()) {
      out.samples.push_back(s);
      continue;
    }
    ScaledImage scaled = fit_to_detector(s.image, s.annotations, detector);
    out.samples.push_back({s.id, s.source_id, std::move(scaled.image), std::move(scaled.annotations)});
  }
  return out;
}

void write_log_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// Subcommands

void run_synth(RunContext& ctx) {
  const Json& p = ctx.params;
  SynthConfig sc;
  sc.count = integer(p, "count");
  sc.image_size = integer(p, "image_size");
  sc.min_planes = integer(p, "min_planes");
  sc.max_planes = integer(p, "max_planes");
  sc.min_span = real(p, "min_span");
  sc.max_span = real(p, "max_span");
  sc.max_clutter = integer(p, "max_clutter");
  sc.seed = ctx.seed();
  sc.id_prefix = p.at("prefix").get<std::string>();
  const double test_fraction = real(p, "test_fraction");
  require(test_fraction >= 0.0 && test_fraction < 1.0, "test_fraction must lie in [0, 1)");

  const Dataset dataset = generate_synthetic(sc);
  const fs::path dir = ctx.dir / "dataset";
  const DatasetManifest all = save_dataset(dir, dataset);
  if (test_fraction > 0.0) {
    const auto [train, test] = split_manifest(all, test_fraction, ctx.seed());
    write_manifest(dir / "train.json", train);
    write_manifest(dir / "test.json", test);
    ctx.out << "train " << train.entries.size() << " test " << test.entries.size() << "\n";
  }
  ctx.out << "wrote " << dataset.size() << " images with " << count_objects(dataset, 0)
          << " planes to " << (dir / "manifest.json").string() << "\n";
}

void run_ingest(RunContext& ctx) {
  const Json& p = ctx.params;
  const fs::path images = input_path(p, "images");
  const fs::path annotations = input_path(p, "annotations");
  const std::string format = p.at("format").get<std::string>();
  const ClassMap classes{{p.at("class_name").get<std::string>(), 0}};
  TileOptions options;
  options.tile_size = integer(p, "tile_size");
  options.overlap = integer(p, "overlap");
  options.min_retained = real(p, "min_retained");
  options.validate();
  if (format != "dota" && format != "csv")
    throw InvalidArgument("unknown annotation format '" + format + "' (expected dota or csv)");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images))
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no PNG images in '" + images.string() + "'");

  std::vector<Annotation> csv_rows;
  if (format == "csv") csv_rows = read_csv_annotations(annotations, classes);

  std::vector<SourceImage> sources;
  for (const auto& file : files) {
    SourceImage src;
    src.id = file.stem().string();
    src.image = read_png(file);
    if (format == "dota") {
      const fs::path label = annotations / (src.id + ".txt");
      if (!fs::exists(label)) throw MissingInput("annotation file '" + label.string() + "' not found");
      src.annotations = read_dota_annotations(label, src.id, classes);
    } else {
      for (const auto& a : csv_rows)
        if (a.image_id == src.id) src.annotations.push_back(a);
    }
    sources.push_back(std::move(src));
  }

  std::vector<Tile> tiles = tile_images(sources, options);
  const fs::path dir = ctx.dir / "tiles";
  DatasetManifest all = write_tiles(dir, tiles, options.tile_size);
  write_manifest(dir / "manifest.json", all);
  const auto [train, test] = split_manifest(all, real(p, "test_fraction"), ctx.seed());
  write_manifest(dir / "train.json", train);
  write_manifest(dir / "test.json", test);
  ctx.out << "tiled " << sources.size() << " sources into " << all.entries.size() << " tiles (train "
          << train.entries.size() << ", test " << test.entries.size() << ")\n";
}

void run_train_detector(RunContext& ctx) {
  const Json& p = ctx.params;
  const Dataset train = load_dataset(input_path(p, "data"));
  const auto holdout_path = optional_input(p, "holdout");
  DetectorTrainConfig cfg;
  cfg.epochs = integer(p, "epochs");
  cfg.batch_size = integer(p, "batch_size");
  cfg.learning_rate = real(p, "learning_rate");
  cfg.min_holdout_ap = real(p, "min_holdout_ap");
  cfg.seed = ctx.seed();
  cfg.architecture.input_size = integer(p, "input_size");
  require(cfg.epochs >= 1, "epochs must be at least 1");
  require(cfg.batch_size >= 1, "batch_size must be at least 1");
  require(cfg.learning_rate > 0.0, "learning_rate must be positive");
  cfg.architecture.validate();

  const ToyDetector shape(cfg.architecture);
  const Dataset fitted = fit_dataset(train, shape);
  std::optional<Dataset> holdout;
  if (holdout_path) holdout = fit_dataset(load_dataset(*holdout_path), shape);

  std::vector<std::string> log;
  const auto result = train_toy_detector(
      fitted, cfg, holdout ? &*holdout : nullptr, [&](const DetectorEpochLog& e) {
        Json line{{"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.learning_rate}};
        log.push_back(line.dump());
        ctx.out << "epoch " << e.epoch << " loss " << e.loss << "\n";
      });
  result.detector.save(ctx.dir / "detector.bin");
  write_log_lines(ctx.dir / "log.jsonl", log);
  Json summary{{"checksum", hex64(result.detector.checksum())},
               {"parameters", result.detector.parameter_count()}};
  if (holdout) {
    summary["holdout_ap"] = result.holdout_ap;
    summary["converged"] = result.converged;
    ctx.out << "holdout AP " << result.holdout_ap << (result.converged ? "" : " (below target)") << "\n";
  }
  write_text(ctx.dir / "summary.json", summary.dump(2) + "\n");
}

void run_train_patch(RunContext& ctx) {
  const Json& p = ctx.params;
  const auto data_path = input_path(p, "data");
  const auto detector_path = input_path(p, "detector");
  const auto colors_path = optional_input(p, "colors");
  const auto resume = optional_input(p, "resume");

  TrainConfig cfg;
  cfg.patch_height = integer(p, "patch_height");
  cfg.patch_width = integer(p, "patch_width");
  cfg.patch_config = resolve_geometry(p, std::nullopt);
  cfg.weights.alpha = real(p, "alpha");
  cfg.weights.beta = real(p, "beta");
  cfg.weights.gamma = real(p, "gamma");
  cfg.weights.saliency_replaces_nps = p.at("saliency_replaces_nps").get<bool>();
  cfg.epochs = integer(p, "epochs");
  cfg.batch_size = integer(p, "batch_size");
  cfg.learning_rate = real(p, "learning_rate");
  cfg.seed = ctx.seed();
  cfg.transform_ranges = resolve_ranges(p);
  cfg.checkpoint_every = integer(p, "checkpoint_every");
  cfg.target_class = integer(p, "target_class");
  const std::string mode = p.at("objectness_mode").get<std::string>();
  if (mode == "objectness") {
    cfg.objectness_mode = ObjectnessMode::Objectness;
  } else if (mode == "objectness-times-class") {
    cfg.objectness_mode = ObjectnessMode::ObjectnessTimesClass;
  } else {
    throw InvalidArgument("unknown objectness mode '" + mode +
                          "' (expected objectness or objectness-times-class)");
  }
  cfg.plateau.patience = integer(p, "plateau_patience");
  cfg.plateau.factor = real(p, "plateau_factor");
  cfg.plateau.min_lr = real(p, "min_lr");
  cfg.run_id = "patch-" + ctx.config_hash;
  if (colors_path) cfg.printable_colors = PrintableColorSet::load(*colors_path).colors();
  cfg.validate();

  const ToyDetector detector = ToyDetector::load(detector_path);
  const Dataset dataset = fit_dataset(load_dataset(data_path), detector);

  std::vector<std::string> log;
  TrainOptions options;
  options.checkpoint_dir = ctx.dir / "checkpoints";
  options.resume_from = resume;
  options.on_epoch = [&](const TrainLogEntry& e) {
    log.push_back(e.to_json_line());
    ctx.out << "epoch " << e.epoch << " obj " << e.l_obj << " total " << e.total << "\n";
  };
  TrainResult result;
  try {
    result = train_patch(dataset, detector, cfg, options);
  } catch (...) {
    write_log_lines(ctx.dir / "log.jsonl", log);
    throw;
  }
  write_log_lines(ctx.dir / "log.jsonl", log);
  save_patch(ctx.dir / "patch.png", result.patch);
  save_patch(ctx.dir / "best_patch.png", result.best_patch);
  ctx.out << "patch written to " << (ctx.dir / "patch.png").string() << "\n";
}

void run_apply(RunContext& ctx) {
  const Json& p = ctx.params;
  const Dataset dataset = load_dataset(input_path(p, "data"));
  const Patch patch = load_patch(input_path(p, "patch"));
  const PatchConfig config = resolve_geometry(p, patch.meta.config);
  const Dataset patched =
      apply_patch_to_dataset(dataset, patch, config, parse_policy(p.at("policy").get<std::string>()),
                             ctx.seed(), resolve_ranges(p), integer(p, "target_class"));
  save_dataset(ctx.dir / "patched", patched);
  ctx.out << "patched " << patched.size() << " images with geometry " << config.id() << "\n";
}

void run_evaluate(RunContext& ctx) {
  const Json& p = ctx.params;
  const Condition condition = parse_condition(p.at("condition").get<std::string>());
  const auto data_path = input_path(p, "data");
  const auto detector_path = input_path(p, "detector");
  const auto patch_path = optional_input(p, "patch");

  std::optional<Patch> patch;
  if (patch_path) patch = load_patch(*patch_path);
  if (condition == Condition::Patch && !patch) throw UsageError("--condition patch needs --patch");
  if (condition == Condition::Noise && !patch) {
    if (p.at("noise_size").is_null())
      throw UsageError("--condition noise needs --patch or --noise-size");
    const int n = integer(p, "noise_size");
    patch = make_noise_patch(n, n, ctx.seed());
  }

  EvalOptions options;
  options.match_iou = real(p, "match_iou");
  options.gt_confidence = real(p, "gt_confidence");
  options.nms_iou = real(p, "nms_iou");
  options.target_class = integer(p, "target_class");
  options.policy = parse_policy(p.at("policy").get<std::string>());
  options.transform_ranges = resolve_ranges(p);
  options.noise_per_image = p.at("noise_per_image").get<bool>();
  const PatchConfig config =
      resolve_geometry(p, patch && patch->meta.config ? patch->meta.config : std::nullopt);

  const ToyDetector detector = ToyDetector::load(detector_path);
  const Dataset images = fit_dataset(load_dataset(data_path), detector);
  const GroundTruth gt = derive_ground_truth(detector, images, options.gt_confidence,
                                             options.target_class, options.nms_iou);
  EvalReport report =
      evaluate_condition(detector, images, gt, condition, patch, config, ctx.seed(), options);
  report.save(ctx.dir / "report.json");
  ctx.out << to_string(condition) << " AP " << report.ap << " (" << report.ground_truth_boxes
          << " reference boxes)\n";
}

void run_plot(RunContext& ctx, const std::vector<std::string>& report_files) {
  if (report_files.empty()) throw UsageError("plot needs at least one report file");
  std::vector<EvalReport> reports;
  for (const auto& f : report_files) {
    if (!fs::exists(f)) throw MissingInput("report '" + f + "' not found");
    reports.push_back(EvalReport::load(f));
  }
  const std::string title = ctx.params.at("title").get<std::string>();
  save_pr_plot(ctx.dir / "pr.svg", reports, title);
  save_pr_plot(ctx.dir / "pr.png", reports, title);
  ctx.out << "plotted " << reports.size() << " curves to " << (ctx.dir / "pr.svg").string() << "\n";
}

// ---------------------------------------------------------------------------

struct Subcommand {
  CLI::App* app = nullptr;
  ParamSet params;
  std::function<void(RunContext&)> run;
};

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << "error: kind=" << kind << " code=" << code << " message=\"" << one_line(message) << "\"\n";
  return code;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"camopatch: adversarial camouflage patches for grid object detectors", "camopatch"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", CAMO_VERSION);

  std::string config_file;
  std::string out_root = "runs";
  std::string run_dir;
  std::vector<std::string> report_files;
  std::map<std::string, Subcommand> commands;

  auto make = [&](const std::string& name, const std::string& description) -> Subcommand& {
    Subcommand& s = commands[name];
    s.app = app.add_subcommand(name, description);
    s.app->add_option("--config", config_file, "JSON config file (flags override it)");
    s.app->add_option("--out", out_root, "root directory for run directories")->capture_default_str();
    s.app->add_option("--run-dir", run_dir, "exact output directory instead of <out>/<timestamp>-seed<N>");
    add_seed(*s.app, s.params);
    return s;
  };

  {
    auto& s = make("synth-data", "generate a synthetic aerial dataset");
    auto& a = *s.app;
    s.params.add(a, "count", Kind::Int, 64, "number of images");
    s.params.add(a, "image_size", Kind::Int, 256, "square image size in pixels");
    s.params.add(a, "min_planes", Kind::Int, 1, "minimum planes per image");
    s.params.add(a, "max_planes", Kind::Int, 3, "maximum planes per image");
    s.params.add(a, "min_span", Kind::Real, 56.0, "minimum wingspan in pixels");
    s.params.add(a, "max_span", Kind::Real, 96.0, "maximum wingspan in pixels");
    s.params.add(a, "max_clutter", Kind::Int, 4, "maximum clutter objects per image");
    s.params.add(a, "prefix", Kind::Text, "synth", "image id prefix");
    s.params.add(a, "test_fraction", Kind::Real, 0.0, "also write train/test manifests when > 0");
    s.run = run_synth;
  }
  {
    auto& s = make("ingest", "tile annotated source images and split into train/test");
    auto& a = *s.app;
    s.params.add(a, "images", Kind::Text, nullptr, "directory of source PNG images");
    s.params.add(a, "annotations", Kind::Text, nullptr, "DOTA label directory or CSV file");
    s.params.add(a, "format", Kind::Text, "dota", "annotation format: dota or csv");
    s.params.add(a, "class_name", Kind::Text, "plane", "target class name");
    s.params.add(a, "tile_size", Kind::Int, 1024, "tile size in pixels");
    s.params.add(a, "overlap", Kind::Int, 0, "tile overlap in pixels");
    s.params.add(a, "min_retained", Kind::Real, 0.3, "minimum kept area fraction of clipped boxes");
    s.params.add(a, "test_fraction", Kind::Real, 0.2, "fraction of source images used for testing");
    s.run = run_ingest;
  }
  {
    auto& s = make("train-detector", "train the toy grid detector");
    auto& a = *s.app;
    s.params.add(a, "data", Kind::Text, nullptr, "training manifest");
    s.params.add(a, "holdout", Kind::Text, nullptr, "held-out manifest for AP reporting");
    s.params.add(a, "epochs", Kind::Int, 24, "training epochs");
    s.params.add(a, "batch_size", Kind::Int, 8, "images per step");
    s.params.add(a, "learning_rate", Kind::Real, 2e-3, "Adam learning rate");
    s.params.add(a, "min_holdout_ap", Kind::Real, 0.9, "holdout AP regarded as converged");
    s.params.add(a, "input_size", Kind::Int, 256, "detector input size");
    s.run = run_train_detector;
  }
  {
    auto& s = make("train-patch", "optimise an adversarial patch against a detector");
    auto& a = *s.app;
    const TrainConfig d;
    s.params.add(a, "data", Kind::Text, nullptr, "training manifest");
    s.params.add(a, "detector", Kind::Text, nullptr, "detector weight file");
    s.params.add(a, "patch_height", Kind::Int, d.patch_height, "patch height in pixels");
    s.params.add(a, "patch_width", Kind::Int, d.patch_width, "patch width in pixels");
    add_geometry(a, s.params, "small");
    s.params.add(a, "alpha", Kind::Real, d.weights.alpha, "non-printability weight");
    s.params.add(a, "beta", Kind::Real, d.weights.beta, "total-variation weight");
    s.params.add(a, "gamma", Kind::Real, d.weights.gamma, "colourfulness weight");
    s.params.add(a, "saliency_replaces_nps", Kind::Bool, false, "drop NPS when gamma > 0");
    s.params.add(a, "colors", Kind::Text, nullptr, "printable colour file");
    s.params.add(a, "epochs", Kind::Int, d.epochs, "training epochs");
    s.params.add(a, "batch_size", Kind::Int, d.batch_size, "images per step");
    s.params.add(a, "learning_rate", Kind::Real, d.learning_rate, "Adam learning rate");
    s.params.add(a, "plateau_patience", Kind::Int, d.plateau.patience, "epochs before decay");
    s.params.add(a, "plateau_factor", Kind::Real, d.plateau.factor, "learning-rate decay factor");
    s.params.add(a, "min_lr", Kind::Real, d.plateau.min_lr, "learning-rate floor");
    s.params.add(a, "checkpoint_every", Kind::Int, 0, "checkpoint period in epochs (0: best only)");
    s.params.add(a, "resume", Kind::Text, nullptr, "checkpoint directory to resume from");
    s.params.add(a, "target_class", Kind::Int, 0, "class the patch attacks");
    s.params.add(a, "objectness_mode", Kind::Text, "objectness",
                 "objectness or objectness-times-class");
    add_transform_ranges(a, s.params);
    s.run = run_train_patch;
  }
  {
    auto& s = make("apply", "composite a patch onto every target object");
    auto& a = *s.app;
    s.params.add(a, "data", Kind::Text, nullptr, "dataset manifest");
    s.params.add(a, "patch", Kind::Text, nullptr, "patch PNG");
    add_geometry(a, s.params, nullptr);
    s.params.add(a, "policy", Kind::Text, "randomized", "transform policy: randomized or identity");
    s.params.add(a, "target_class", Kind::Int, 0, "class receiving the patch");
    add_transform_ranges(a, s.params);
    s.run = run_apply;
  }
  {
    auto& s = make("evaluate", "precision-recall evaluation of one condition");
    auto& a = *s.app;
    s.params.add(a, "data", Kind::Text, nullptr, "evaluation manifest");
    s.params.add(a, "detector", Kind::Text, nullptr, "detector weight file");
    s.params.add(a, "condition", Kind::Text, "patch", "clean, noise or patch");
    s.params.add(a, "patch", Kind::Text, nullptr, "patch PNG (noise uses its size)");
    s.params.add(a, "noise_size", Kind::Int, nullptr, "noise patch side when no --patch is given");
    add_geometry(a, s.params, nullptr);
    s.params.add(a, "match_iou", Kind::Real, 0.5, "IoU needed for a match");
    s.params.add(a, "gt_confidence", Kind::Real, 0.4, "confidence of clean detections used as reference");
    s.params.add(a, "nms_iou", Kind::Real, 0.45, "non-maximum suppression IoU");
    s.params.add(a, "target_class", Kind::Int, 0, "evaluated class");
    s.params.add(a, "policy", Kind::Text, "randomized", "transform policy: randomized or identity");
    s.params.add(a, "noise_per_image", Kind::Bool, false, "fresh noise patch per image");
    add_transform_ranges(a, s.params);
    s.run = run_evaluate;
  }
  {
    auto& s = make("plot", "overlay precision-recall curves of several reports");
    s.app->add_option("reports", report_files, "report JSON files");
    s.params.add(*s.app, "title", Kind::Text, "", "figure title");
    s.run = [&report_files](RunContext& ctx) { run_plot(ctx, report_files); };
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const CLI::App* target = &app;
    for (const auto& [name, s] : commands)
      if (s.app->parsed()) target = s.app;
    err << target->help();
    return fail(err, kExitUsage, "usage", e.what());
  }

  Subcommand* chosen = nullptr;
  std::string name;
  for (auto& [n, s] : commands) {
    if (s.app->parsed()) {
      chosen = &s;
      name = n;
    }
  }

  try {
    const std::optional<fs::path> cfg =
        config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file);
    Json params = chosen->params.resolve(cfg);
    if (!params.at("seed").is_number_integer() || params.at("seed").get<long long>() < 0)
      throw UsageError("seed must be a non-negative integer");
    Json resolved{{"camopatch_version", CAMO_VERSION}, {"command", name}, {"params", params}};
    if (name == "plot") resolved["reports"] = report_files;
    const std::string hash = hex64(fnv1a(resolved.dump()));
    for (const char* key : {"data", "holdout", "detector", "patch", "colors", "resume", "images",
                            "annotations"}) {
      if (params.contains(key)) optional_input(params, key);
    }
    for (const auto& f : report_files)
      if (!fs::exists(f)) throw MissingInput("report '" + f + "' not found");

    const std::string stamp = utc_timestamp();
    const fs::path dir =
        create_run_dir(out_root, run_dir.empty() ? std::nullopt : std::optional<fs::path>(run_dir),
                       params.at("seed").get<std::uint64_t>(), stamp);
    write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");
    write_text(dir / "run.json", Json{{"started_utc", stamp},
                                      {"command", name},
                                      {"config_hash", hash},
                                      {"seed", params.at("seed")},
                                      {"camopatch_version", CAMO_VERSION}}
                                         .dump(2) +
                                     "\n");
    RunContext ctx{name, dir, params, hash, out};
    out << "run directory " << dir.string() << "\n";
    chosen->run(ctx);
    return kExitOk;
  } catch (const UsageError& e) {
    err << chosen->app->help();
    return fail(err, kExitUsage, "usage", e.what());
  } catch (const MissingInput& e) {
    return fail(err, kExitMissingInput, "missing-input", e.what());
  } catch (const DivergenceError& e) {
    return fail(err, kExitDiverged, "diverged",
                std::string(e.what()) + " (last checkpoint: " +
                    (e.last_checkpoint().empty() ? "none" : e.last_checkpoint()) + ")");
  } catch (const InvalidArgument& e) {
    return fail(err, kExitValidation, "validation", e.what());
  } catch (const IoError& e) {
    return fail(err, kExitIo, "io", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(err, kExitIo, "io", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitFailure, "internal", e.what());
  }
}

}  // namespace camo
