#include "camo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "camo/error.hpp"
#include "camo/rng.hpp"
#include "json_codec.hpp"

namespace camo {

namespace {

bool all_finite(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

constexpr std::uint64_t kTrainStream = 0x7a3c;
constexpr std::uint64_t kShuffleStream = 0x5eed;
constexpr std::uint64_t kApplyStream = 0xa991;

struct PreparedSample {
  std::size_t index;
  Image image;
  std::vector<Annotation> targets;
};

std::vector<PreparedSample> prepare(const Dataset& dataset, const Detector& detector,
                                    int target_class) {
  std::vector<PreparedSample> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sample& s = dataset.samples[i];
    auto targets = annotations_of_class(s, target_class);
    if (targets.empty()) continue;
    ScaledImage scaled = fit_to_detector(s.image, targets, detector);
    out.push_back({i, std::move(scaled.image), std::move(scaled.annotations)});
  }
  return out;
}

Json pixels_json(const Image& image) { return Json(std::vector<double>(image.data().begin(), image.data().end())); }

void load_pixels(const Json& j, Image& image) {
  const auto values = j.get<std::vector<double>>();
  require(values.size() == image.size(), "checkpoint pixel count does not match the patch size");
  std::copy(values.begin(), values.end(), image.data().begin());
}

Json log_json(const TrainLogEntry& e) {
  return Json{{"epoch", e.epoch}, {"l_obj", e.l_obj}, {"l_nps", e.l_nps}, {"l_tv", e.l_tv},
              {"l_sal", e.l_sal}, {"total", e.total}, {"lr", e.learning_rate}};
}

TrainLogEntry log_from_json(const Json& j) {
  return {j.at("epoch").get<int>(),   j.at("l_obj").get<double>(), j.at("l_nps").get<double>(),
          j.at("l_tv").get<double>(), j.at("l_sal").get<double>(), j.at("total").get<double>(),
          j.at("lr").get<double>()};
}

double finite_or_inf(const Json& j) { return j.is_null() ? INFINITY : j.get<double>(); }

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate >= 0.0, "learning_rate must be non-negative");
  require(patch_height >= 2 && patch_width >= 2, "patch size must be at least 2x2");
  require(checkpoint_every >= 0, "checkpoint_every must be non-negative");
  patch_config.validate();
  weights.validate();
  transform_ranges.validate();
}

std::string TrainLogEntry::to_json_line() const { return log_json(*this).dump(); }

TransformSample placement_transform(TransformPolicy policy, std::uint64_t seed,
                                    std::size_t image_index, std::size_t object_index,
                                    std::size_t placement_index, const TransformRanges& ranges) {
  if (policy == TransformPolicy::Identity) return TransformSample::identity();
  Rng rng = make_rng(seed, {kApplyStream, image_index, object_index, placement_index});
  return sample_transform(rng, ranges);
}

Dataset apply_patch_to_dataset(const Dataset& dataset, const Patch& patch,
                               const PatchConfig& config, TransformPolicy policy,
                               std::uint64_t seed, const TransformRanges& ranges,
                               int target_class) {
  patch.validate();
  config.validate();
  ranges.validate();
  Dataset out = dataset;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Sample& s = out.samples[i];
    const auto targets = annotations_of_class(s, target_class);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto placements = patch_placements(targets[j], config);
      for (std::size_t p = 0; p < placements.size(); ++p) {
        composite_patch_inplace(s.image, patch.pixels, placements[p],
                                placement_transform(policy, seed, i, j, p, ranges));
      }
    }
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& dir, const Patch& patch, const Adam& adam,
                      const PlateauSchedule& plateau, const std::vector<TrainLogEntry>& log,
                      const Patch& best, double best_obj) {
  std::filesystem::create_directories(dir);
  save_patch(dir / "patch.png", patch);
  Json state{{"format", "camopatch-checkpoint/1"},
             {"epoch", patch.meta.epoch},
             {"pixels", pixels_json(patch.pixels)},
             {"best_pixels", pixels_json(best.pixels)},
             {"best_epoch", best.meta.epoch},
             {"best_obj", best_obj},
             {"adam",
              {{"t", adam.steps()},
               {"m", adam.first_moment()},
               {"v", adam.second_moment()},
               {"lr", adam.learning_rate()}}},
             {"plateau", {{"best", plateau.best}, {"bad_epochs", plateau.bad_epochs}}}};
  Json entries = Json::array();
  for (const auto& e : log) entries.push_back(log_json(e));
  state["log"] = std::move(entries);
  write_json_file(dir / "state.json", state);
}

TrainResult train_patch(const Dataset& dataset, const Detector& detector,
                        const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const auto prepared = prepare(dataset, detector, config.target_class);
  require(!prepared.empty(), "dataset contains no annotated target objects");

  const PrintableColorSet colors = config.printable_colors.empty()
                                       ? PrintableColorSet::defaults()
                                       : PrintableColorSet(config.printable_colors);
  const ObjectnessOptions obj_options{config.objectness_mode, config.target_class};

  TrainResult result;
  result.patch = random_patch(config.patch_height, config.patch_width, config.seed);
  PatchMeta& meta = result.patch.meta;
  meta.config = config.patch_config;
  meta.run_id = config.run_id;
  meta.seed = config.seed;
  {
    std::ostringstream os;
    os.precision(17);
    auto put = [&](const char* key, double v) {
      os.str("");
      os << v;
      meta.attributes[key] = os.str();
    };
    put("alpha", config.weights.alpha);
    put("beta", config.weights.beta);
    put("gamma", config.weights.gamma);
    put("learning_rate", config.learning_rate);
    put("batch_size", config.batch_size);
    put("epochs", config.epochs);
  }
  result.best_patch = result.patch;
  double best_obj = INFINITY;

  Adam adam(result.patch.pixels.size(), config.learning_rate);
  PlateauSchedule plateau = config.plateau;
  int first_epoch = 1;

  if (options.resume_from) {
    const Json state = read_json_file(*options.resume_from / "state.json");
    try {
      load_pixels(state.at("pixels"), result.patch.pixels);
      result.best_patch = result.patch;
      load_pixels(state.at("best_pixels"), result.best_patch.pixels);
      result.best_patch.meta.epoch = state.at("best_epoch").get<int>();
      best_obj = finite_or_inf(state.at("best_obj"));
      const Json& a = state.at("adam");
      adam.restore(a.at("t").get<long>(), a.at("m").get<std::vector<double>>(),
                   a.at("v").get<std::vector<double>>());
      adam.set_learning_rate(a.at("lr").get<double>());
      plateau.best = finite_or_inf(state.at("plateau").at("best"));
      plateau.bad_epochs = state.at("plateau").at("bad_epochs").get<int>();
      for (const Json& e : state.at("log")) result.log.push_back(log_from_json(e));
      first_epoch = state.at("epoch").get<int>() + 1;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed checkpoint state in '" + options.resume_from->string() +
                    "': " + e.what());
    }
    result.patch.meta.epoch = first_epoch - 1;
  }

  auto checkpoint = [&](const std::filesystem::path& dir) {
    write_checkpoint(dir, result.patch, adam, plateau, result.log, result.best_patch, best_obj);
    result.last_checkpoint = dir;
  };

  std::vector<std::size_t> order(prepared.size());
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = first_epoch; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(config.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    TrainLogEntry sums;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<ForwardResult> forwards;
      std::vector<std::vector<CompositeTrace>> traces;
      std::vector<DetectorOutput> outputs;
      for (std::size_t k = start; k < end; ++k) {
        const PreparedSample& ps = prepared[order[k]];
        Image image = ps.image;
        std::vector<CompositeTrace> image_traces;
        for (std::size_t j = 0; j < ps.targets.size(); ++j) {
          const auto placements = patch_placements(ps.targets[j], config.patch_config);
          for (std::size_t p = 0; p < placements.size(); ++p) {
            Rng rng = make_rng(config.seed, {kTrainStream, static_cast<std::uint64_t>(epoch),
                                             ps.index, j, p});
            image_traces.push_back(composite_patch_inplace(
                image, result.patch.pixels, placements[p],
                sample_transform(rng, config.transform_ranges)));
          }
        }
        forwards.push_back(detector.forward_traced(image));
        outputs.push_back(forwards.back().output);
        traces.push_back(std::move(image_traces));
      }

      auto diverged = [&](const std::string& what) {
        return DivergenceError(what + " at epoch " + std::to_string(epoch) +
                                   (result.last_checkpoint.empty()
                                        ? std::string("; no checkpoint written")
                                        : "; last checkpoint " + result.last_checkpoint.string()),
                               result.last_checkpoint.string());
      };
      for (const DetectorOutput& out : outputs) {
        if (!all_finite(out.objectness) || !all_finite(out.class_probs))
          throw diverged("non-finite detector output");
      }
      TotalLossGrad grad;
      const LossBreakdown loss = total_loss(result.patch.pixels, outputs, config.weights, colors,
                                            obj_options, &grad);
      if (!std::isfinite(loss.total)) throw diverged("non-finite loss");
      for (std::size_t i = 0; i < forwards.size(); ++i) {
        const Image input_grad = detector.input_gradient(forwards[i], grad.outputs[i]);
        backprop_to_patch(traces[i], input_grad, grad.patch);
      }
      adam.step(result.patch.pixels.data(), grad.patch.data());
      clamp_unit(result.patch.pixels);

      const double w = static_cast<double>(end - start);
      sums.l_obj += w * loss.obj;
      sums.l_nps += w * loss.nps;
      sums.l_tv += w * loss.tv;
      sums.l_sal += w * loss.sal;
      sums.total += w * loss.total;
    }

    const double n = static_cast<double>(order.size());
    TrainLogEntry entry{epoch,         sums.l_obj / n, sums.l_nps / n, sums.l_tv / n,
                        sums.l_sal / n, sums.total / n, adam.learning_rate()};
    result.log.push_back(entry);
    result.patch.meta.epoch = epoch;
    if (entry.l_obj < best_obj) {
      best_obj = entry.l_obj;
      result.best_patch = result.patch;
    }
    adam.set_learning_rate(plateau.update(entry.total, adam.learning_rate()));
    if (options.on_epoch) options.on_epoch(entry);

    if (!options.checkpoint_dir.empty()) {
      if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
        checkpoint(options.checkpoint_dir / name);
      }
      if (result.best_patch.meta.epoch == epoch) {
        save_patch(options.checkpoint_dir / "best" / "patch.png", result.best_patch);
      }
    }
  }
  return result;
}

}  // namespace camo
