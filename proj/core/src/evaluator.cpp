#include "camo/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "camo/error.hpp"
#include "camo/rng.hpp"
#include "json_codec.hpp"

namespace camo {
namespace {

constexpr std::uint64_t kNoiseStream = 0x9015e;
constexpr const char* kReportFormat = "camopatch-report/1";

std::vector<Detection> target_detections(const Detector& detector, const Image& image,
                                         double threshold, double nms_iou, int target_class) {
  DecodeOptions opts;
  opts.conf_threshold = threshold;
  opts.nms_iou = nms_iou;
  auto dets = decode(detector.forward(image), opts);
  std::erase_if(dets, [&](const Detection& d) { return d.class_id != target_class; });
  return dets;
}

void composite_targets(Sample& sample, std::size_t image_index, const Patch& patch,
                       const PatchConfig& config, std::uint64_t seed,
                       const EvalOptions& options) {
  const auto targets = annotations_of_class(sample, options.target_class);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto placements = patch_placements(targets[j], config);
    for (std::size_t p = 0; p < placements.size(); ++p) {
      composite_patch_inplace(
          sample.image, patch.pixels, placements[p],
          placement_transform(options.policy, seed, image_index, j, p, options.transform_ranges));
    }
  }
}

std::optional<PatchConfig> optional_config(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return patch_config_from_json(j.at(key));
}

}  // namespace

std::string to_string(Condition condition) {
  switch (condition) {
    case Condition::Clean: return "CLEAN";
    case Condition::Noise: return "NOISE";
    case Condition::Patch: return "PATCH";
  }
  return "?";
}

Condition parse_condition(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "clean") return Condition::Clean;
  if (t == "noise") return Condition::Noise;
  if (t == "patch") return Condition::Patch;
  throw InvalidArgument("unknown condition '" + text + "' (expected clean, noise or patch)");
}

GroundTruth derive_ground_truth(const Detector& detector, const Dataset& clean,
                                double confidence, int target_class, double nms_iou) {
  GroundTruth gt(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    for (const auto& d :
         target_detections(detector, clean.samples[i].image, confidence, nms_iou, target_class))
      gt[i].push_back(d.box);
  }
  return gt;
}

Patch make_noise_patch(int height, int width, std::uint64_t seed) {
  require(height >= 2 && width >= 2, "noise patch must be at least 2x2");
  Patch patch = random_patch(height, width, seed);
  patch.meta.attributes["kind"] = "noise";
  return patch;
}

EvalReport evaluate_condition(const Detector& detector, const Dataset& images,
                              const GroundTruth& ground_truth, Condition condition,
                              const std::optional<Patch>& patch, const PatchConfig& config,
                              std::uint64_t seed, const EvalOptions& options) {
  require(ground_truth.size() == images.size(),
          "ground truth has " + std::to_string(ground_truth.size()) + " entries for " +
              std::to_string(images.size()) + " images");
  config.validate();
  options.transform_ranges.validate();

  EvalReport report;
  report.condition = condition;
  report.match_iou = options.match_iou;
  report.gt_confidence = options.gt_confidence;
  report.nms_iou = options.nms_iou;
  report.seed = seed;
  report.images = images.size();

  std::optional<Patch> applied;
  if (condition == Condition::Patch) {
    require(patch.has_value(), "PATCH condition needs a patch");
    patch->validate();
    applied = *patch;
    report.patch_id = patch->meta.run_id.empty() ? "patch" : patch->meta.run_id;
  } else if (condition == Condition::Noise) {
    require(patch.has_value(), "NOISE condition needs a reference patch for its size");
    applied = make_noise_patch(patch->height(), patch->width(), seed);
    report.patch_id = "noise-" + std::to_string(patch->height()) + "x" +
                      std::to_string(patch->width());
  }
  if (applied) {
    report.patch_config = config;
    if (patch->meta.config) report.train_config = patch->meta.config;
  }

  std::vector<std::vector<Detection>> detections(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Sample sample = images.samples[i];
    if (applied) {
      if (condition == Condition::Noise && options.noise_per_image) {
        const Patch per_image = make_noise_patch(applied->height(), applied->width(),
                                                 derive_seed(seed, {kNoiseStream, i}));
        composite_targets(sample, i, per_image, config, seed, options);
      } else {
        composite_targets(sample, i, *applied, config, seed, options);
      }
    }
    detections[i] = target_detections(detector, sample.image, 0.0, options.nms_iou,
                                      options.target_class);
    report.detections += detections[i].size();
  }
  for (const auto& boxes : ground_truth) report.ground_truth_boxes += boxes.size();

  report.pr_points = precision_recall(detections, ground_truth, options.match_iou);
  report.ap = average_precision(report.pr_points);
  return report;
}

EvalReport cross_config_eval(const Detector& detector, const Dataset& images,
                             const GroundTruth& ground_truth, Condition condition,
                             const Patch& patch, const PatchConfig& trained,
                             const PatchConfig& evaluated, std::uint64_t seed,
                             const EvalOptions& options) {
  Patch tagged = patch;
  tagged.meta.config = trained;
  EvalReport report =
      evaluate_condition(detector, images, ground_truth, condition, tagged, evaluated, seed, options);
  report.train_config = trained;
  return report;
}

std::string EvalReport::to_json() const {
  Json points = Json::array();
  for (const auto& p : pr_points) points.push_back(Json::array({p.precision, p.recall, p.threshold}));
  Json j{{"format", kReportFormat},
         {"condition", to_string(condition)},
         {"ap", ap},
         {"match_iou", match_iou},
         {"gt_confidence", gt_confidence},
         {"nms_iou", nms_iou},
         {"interpolation", interpolation},
         {"patch_id", patch_id},
         {"patch_config", patch_config ? camo::to_json(*patch_config) : Json(nullptr)},
         {"train_config", train_config ? camo::to_json(*train_config) : Json(nullptr)},
         {"seed", seed},
         {"images", images},
         {"ground_truth_boxes", ground_truth_boxes},
         {"detections", detections},
         {"pr_points", points}};
  return j.dump(2) + "\n";
}

EvalReport EvalReport::from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != kReportFormat)
      throw IoError("not a camopatch report");
    EvalReport r;
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.ap = j.at("ap").get<double>();
    r.match_iou = j.at("match_iou").get<double>();
    r.gt_confidence = j.at("gt_confidence").get<double>();
    r.nms_iou = j.at("nms_iou").get<double>();
    r.interpolation = j.value("interpolation", std::string("all-points"));
    r.patch_id = j.value("patch_id", std::string());
    r.patch_config = optional_config(j, "patch_config");
    r.train_config = optional_config(j, "train_config");
    r.seed = j.value("seed", std::uint64_t{0});
    r.images = j.value("images", std::size_t{0});
    r.ground_truth_boxes = j.value("ground_truth_boxes", std::size_t{0});
    r.detections = j.value("detections", std::size_t{0});
    for (const auto& p : j.at("pr_points"))
      r.pr_points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "precision,recall,threshold\n";
  for (const auto& p : pr_points) out << p.precision << ',' << p.recall << ',' << p.threshold << '\n';
  return out.str();
}

void EvalReport::save(const std::filesystem::path& json_path) const {
  if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
  std::ofstream json(json_path, std::ios::binary);
  if (!json) throw IoError("cannot write '" + json_path.string() + "'");
  json << to_json();
  auto csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot write '" + csv_path.string() + "'");
  csv << to_csv();
}

EvalReport EvalReport::load(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + json_path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

}  // namespace camo
