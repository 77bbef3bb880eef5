#include "camo/toy_detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "camo/error.hpp"
#include "camo/metrics.hpp"
#include "camo/optim.hpp"
#include "camo/rng.hpp"
#include "json_codec.hpp"

namespace camo {

namespace {

constexpr double kCoordWeight = 5.0;
constexpr double kSizeWeight = 2.0;
constexpr double kNoObjectWeight = 1.0;
constexpr double kMaxLogSize = 6.0;

nn::Tensor to_tensor(const Image& image) {
  nn::Tensor t(image.channels(), image.height(), image.width());
  std::copy(image.data().begin(), image.data().end(), t.data.begin());
  return t;
}

}  // namespace

int ToyArchitecture::stride() const {
  int s = 1;
  for (int v : strides) s *= v;
  return s;
}

void ToyArchitecture::validate() const {
  require(!channels.empty() && channels.size() == strides.size(),
          "architecture needs one stride per hidden layer");
  require(classes >= 1, "architecture needs at least one class");
  require(anchor_w > 0 && anchor_h > 0, "anchor size must be positive");
  require(input_size > 0 && input_size % stride() == 0,
          "input size must be a multiple of the total stride");
}

struct ToyDetector::State : ForwardState {
  std::vector<nn::Tensor> inputs;  // input of each layer, head included
  std::vector<nn::Tensor> pre;     // pre-activation of each hidden layer
  std::vector<nn::Buffer> columns;
  nn::Tensor head;
};

ToyDetector::ToyDetector(ToyArchitecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  Rng rng = make_rng(seed, {0xde7ec7});
  int in = 3;
  for (std::size_t i = 0; i < arch_.channels.size(); ++i) {
    layers_.emplace_back(in, arch_.channels[i], 3, arch_.strides[i], 1);
    layers_.back().initialize(rng);
    in = arch_.channels[i];
  }
  layers_.emplace_back(in, 5 + arch_.classes, 1, 1, 0);
  layers_.back().initialize(rng);
  // Start with low objectness so early training is not swamped by negatives.
  for (double& w : layers_.back().weights()) w *= 0.1;
  layers_.back().bias()[4] = -4.0;
}

std::size_t ToyDetector::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights().size() + l.bias().size();
  return n;
}

std::vector<double> ToyDetector::flatten_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weights().begin(), l.weights().end());
    flat.insert(flat.end(), l.bias().begin(), l.bias().end());
  }
  return flat;
}

void ToyDetector::assign_parameters(std::span<const double> flat) {
  require(flat.size() == parameter_count(), "parameter vector has the wrong size");
  std::size_t off = 0;
  for (auto& l : layers_) {
    std::copy_n(flat.begin() + off, l.weights().size(), l.weights().begin());
    off += l.weights().size();
    std::copy_n(flat.begin() + off, l.bias().size(), l.bias().begin());
    off += l.bias().size();
  }
}

std::uint64_t ToyDetector::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : flatten_parameters()) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

bool operator==(const ToyDetector& a, const ToyDetector& b) {
  return a.arch_ == b.arch_ && a.flatten_parameters() == b.flatten_parameters();
}

std::unique_ptr<ToyDetector::State> ToyDetector::run(const Image& image, bool keep_columns) const {
  check_input(image);
  auto state = std::make_unique<State>();
  const std::size_t hidden = layers_.size() - 1;
  state->inputs.reserve(layers_.size());
  state->pre.reserve(hidden);
  state->columns.resize(keep_columns ? layers_.size() : 0);
  state->inputs.push_back(to_tensor(image));
  for (std::size_t i = 0; i < hidden; ++i) {
    nn::Tensor pre =
        layers_[i].forward(state->inputs.back(), keep_columns ? &state->columns[i] : nullptr);
    nn::Tensor post(pre.channels, pre.height, pre.width);
    nn::silu_forward(pre.data, post.data);
    state->pre.push_back(std::move(pre));
    state->inputs.push_back(std::move(post));
  }
  state->head =
      layers_.back().forward(state->inputs.back(), keep_columns ? &state->columns.back() : nullptr);
  return state;
}

DetectorOutput ToyDetector::decode_head(const nn::Tensor& head) const {
  const int g = head.height;
  const int s = stride();
  const std::size_t plane = head.plane();
  DetectorOutput out;
  out.grid_h = head.height;
  out.grid_w = head.width;
  out.anchors = 1;
  out.classes = arch_.classes;
  const std::size_t n = plane;
  out.boxes.resize(n);
  out.objectness.resize(n);
  out.class_probs.resize(n * arch_.classes);
  auto raw = [&](int ch, std::size_t cell) { return head.data[ch * plane + cell]; };
  for (int gy = 0; gy < g; ++gy) {
    for (int gx = 0; gx < head.width; ++gx) {
      const std::size_t cell = std::size_t(gy) * head.width + gx;
      Box& b = out.boxes[cell];
      b.cx = (gx + nn::sigmoid(raw(0, cell))) * s;
      b.cy = (gy + nn::sigmoid(raw(1, cell))) * s;
      b.w = arch_.anchor_w * std::exp(std::clamp(raw(2, cell), -kMaxLogSize, kMaxLogSize));
      b.h = arch_.anchor_h * std::exp(std::clamp(raw(3, cell), -kMaxLogSize, kMaxLogSize));
      out.objectness[cell] = nn::sigmoid(raw(4, cell));
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < arch_.classes; ++k) mx = std::max(mx, raw(5 + k, cell));
      double z = 0.0;
      for (int k = 0; k < arch_.classes; ++k) z += std::exp(raw(5 + k, cell) - mx);
      for (int k = 0; k < arch_.classes; ++k) {
        out.class_probs[cell * arch_.classes + k] = std::exp(raw(5 + k, cell) - mx) / z;
      }
    }
  }
  return out;
}

ForwardResult ToyDetector::forward_traced(const Image& image) const {
  auto state = run(image, false);
  ForwardResult result{decode_head(state->head), nullptr};
  result.state = std::move(state);
  return result;
}

nn::Tensor ToyDetector::backward(const State& state, nn::Tensor head_grad,
                                 std::span<double> param_grad, bool weight_grads) const {
  // Parameter offsets in flattened order.
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& l : layers_) {
    offsets.push_back(off);
    off += l.weights().size() + l.bias().size();
  }
  auto grads_for = [&](std::size_t i) -> std::pair<std::span<double>, std::span<double>> {
    if (!weight_grads) return {};
    const auto& l = layers_[i];
    return {param_grad.subspan(offsets[i], l.weights().size()),
            param_grad.subspan(offsets[i] + l.weights().size(), l.bias().size())};
  };

  const std::size_t last = layers_.size() - 1;
  auto [hw, hb] = grads_for(last);
  nn::Tensor g = layers_[last].backward(state.inputs[last], head_grad,
                                        weight_grads ? &state.columns[last] : nullptr, hw, hb);
  for (std::size_t i = last; i-- > 0;) {
    nn::silu_backward(state.pre[i].data, g.data);
    auto [w, b] = grads_for(i);
    g = layers_[i].backward(state.inputs[i], g, weight_grads ? &state.columns[i] : nullptr, w, b);
  }
  return g;
}

Image ToyDetector::input_gradient(const ForwardResult& forward, const OutputGrad& grad) const {
  const auto* state = dynamic_cast<const State*>(forward.state.get());
  require(state != nullptr, "forward result was not produced by this detector");
  const DetectorOutput& out = forward.output;
  require(grad.objectness.size() == out.entries() && grad.class_probs.size() == out.class_probs.size(),
          "output gradient shape mismatch");

  nn::Tensor head_grad(state->head.channels, state->head.height, state->head.width);
  const std::size_t plane = head_grad.plane();
  const int classes = arch_.classes;
  for (std::size_t cell = 0; cell < out.entries(); ++cell) {
    const double o = out.objectness[cell];
    head_grad.data[4 * plane + cell] = grad.objectness[cell] * o * (1.0 - o);
    double dot = 0.0;
    for (int k = 0; k < classes; ++k) {
      dot += grad.class_probs[cell * classes + k] * out.class_probs[cell * classes + k];
    }
    for (int k = 0; k < classes; ++k) {
      const double p = out.class_probs[cell * classes + k];
      head_grad.data[(5 + k) * plane + cell] = p * (grad.class_probs[cell * classes + k] - dot);
    }
  }
  nn::Tensor g = backward(*state, std::move(head_grad), {}, false);
  Image result(g.channels, g.height, g.width);
  std::copy(g.data.begin(), g.data.end(), result.data().begin());
  return result;
}

double ToyDetector::accumulate_training_gradient(const Image& image,
                                                 std::span<const Annotation> targets,
                                                 std::span<double> param_grad) const {
  require(param_grad.size() == parameter_count(), "parameter gradient has the wrong size");
  auto state = run(image, true);
  const nn::Tensor& head = state->head;
  const int grid_w = head.width;
  const int grid_h = head.height;
  const std::size_t plane = head.plane();
  const int s = stride();
  const int classes = arch_.classes;

  std::vector<int> owner(plane, -1);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Annotation& a = targets[t];
    if (a.class_id < 0 || a.class_id >= classes) continue;
    const int gx = std::clamp(static_cast<int>(std::floor(a.box.cx / s)), 0, grid_w - 1);
    const int gy = std::clamp(static_cast<int>(std::floor(a.box.cy / s)), 0, grid_h - 1);
    const std::size_t cell = std::size_t(gy) * grid_w + gx;
    if (owner[cell] < 0 || targets[owner[cell]].box.area() < a.box.area()) {
      owner[cell] = static_cast<int>(t);
    }
  }

  nn::Tensor grad(head.channels, head.height, head.width);
  auto raw = [&](int ch, std::size_t cell) { return head.data[ch * plane + cell]; };
  auto g = [&](int ch, std::size_t cell) -> double& { return grad.data[ch * plane + cell]; };
  double loss = 0.0;
  for (std::size_t cell = 0; cell < plane; ++cell) {
    const double z = raw(4, cell);
    const double o = nn::sigmoid(z);
    if (owner[cell] < 0) {
      // -log(1 - sigmoid(z)) = softplus(z)
      loss += kNoObjectWeight * (std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
      g(4, cell) = kNoObjectWeight * o;
      continue;
    }
    const Annotation& a = targets[owner[cell]];
    const int gx = static_cast<int>(cell % grid_w);
    const int gy = static_cast<int>(cell / grid_w);
    loss += std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    g(4, cell) = o - 1.0;

    const double fx = std::clamp(a.box.cx / s - gx, 0.0, 1.0);
    const double fy = std::clamp(a.box.cy / s - gy, 0.0, 1.0);
    const double sx = nn::sigmoid(raw(0, cell));
    const double sy = nn::sigmoid(raw(1, cell));
    loss += kCoordWeight * ((sx - fx) * (sx - fx) + (sy - fy) * (sy - fy));
    g(0, cell) = kCoordWeight * 2.0 * (sx - fx) * sx * (1.0 - sx);
    g(1, cell) = kCoordWeight * 2.0 * (sy - fy) * sy * (1.0 - sy);
    const double tw = std::log(a.box.w / arch_.anchor_w);
    const double th = std::log(a.box.h / arch_.anchor_h);
    loss += kSizeWeight * ((raw(2, cell) - tw) * (raw(2, cell) - tw) +
                           (raw(3, cell) - th) * (raw(3, cell) - th));
    g(2, cell) = kSizeWeight * 2.0 * (raw(2, cell) - tw);
    g(3, cell) = kSizeWeight * 2.0 * (raw(3, cell) - th);

    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) mx = std::max(mx, raw(5 + k, cell));
    double zsum = 0.0;
    for (int k = 0; k < classes; ++k) zsum += std::exp(raw(5 + k, cell) - mx);
    for (int k = 0; k < classes; ++k) {
      const double p = std::exp(raw(5 + k, cell) - mx) / zsum;
      const double target = k == a.class_id ? 1.0 : 0.0;
      if (target > 0.0) loss -= std::log(std::max(p, 1e-300));
      g(5 + k, cell) = p - target;
    }
  }
  backward(*state, std::move(grad), param_grad, true);
  return loss;
}

void ToyDetector::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights '" + path.string() + "'");
  const std::vector<double> flat = flatten_parameters();
  Json header{{"input_size", arch_.input_size},
              {"channels", arch_.channels},
              {"strides", arch_.strides},
              {"classes", arch_.classes},
              {"anchor", {arch_.anchor_w, arch_.anchor_h}},
              {"parameters", flat.size()},
              {"checksum", checksum()}};
  out << kFormatTag << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw IoError("failed writing weights '" + path.string() + "'");
}

ToyDetector ToyDetector::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights '" + path.string() + "'");
  std::string tag;
  std::string header_line;
  std::getline(in, tag);
  if (tag != kFormatTag) {
    throw IoError("'" + path.string() + "' is not a " + std::string(kFormatTag) + " weight file");
  }
  std::getline(in, header_line);
  ToyArchitecture arch;
  std::size_t count = 0;
  std::uint64_t expected_checksum = 0;
  try {
    const Json h = Json::parse(header_line);
    arch.input_size = h.at("input_size").get<int>();
    arch.channels = h.at("channels").get<std::vector<int>>();
    arch.strides = h.at("strides").get<std::vector<int>>();
    arch.classes = h.at("classes").get<int>();
    arch.anchor_w = h.at("anchor").at(0).get<double>();
    arch.anchor_h = h.at("anchor").at(1).get<double>();
    count = h.at("parameters").get<std::size_t>();
    expected_checksum = h.at("checksum").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed weight header in '" + path.string() + "': " + e.what());
  }
  ToyDetector det(arch, 0);
  if (count != det.parameter_count()) {
    throw IoError("weight count in '" + path.string() + "' does not match the architecture");
  }
  std::vector<double> flat(count);
  in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw IoError("truncated weight file '" + path.string() + "'");
  det.assign_parameters(flat);
  if (det.checksum() != expected_checksum) {
    throw IoError("checksum mismatch in weight file '" + path.string() + "'");
  }
  return det;
}

namespace {

void flip_sample(Image& image, std::vector<Annotation>& targets, bool horizontal) {
  Image flipped(image.channels(), image.height(), image.width());
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        flipped.at(c, y, x) = horizontal ? image.at(c, y, image.width() - 1 - x)
                                         : image.at(c, image.height() - 1 - y, x);
      }
    }
  }
  image = std::move(flipped);
  for (Annotation& a : targets) {
    if (horizontal) {
      a.box.cx = image.width() - a.box.cx;
    } else {
      a.box.cy = image.height() - a.box.cy;
    }
  }
}

}  // namespace

DetectorTrainResult train_toy_detector(const Dataset& train, const DetectorTrainConfig& config,
                                       const Dataset* holdout,
                                       const std::function<void(const DetectorEpochLog&)>& on_epoch) {
  require(config.epochs >= 0, "detector epochs must be non-negative");
  require(config.batch_size >= 1, "detector batch size must be at least 1");
  require(config.learning_rate > 0.0, "detector learning rate must be positive");
  require(!train.empty(), "detector training set is empty");

  DetectorTrainResult result{ToyDetector(config.architecture, config.seed), {}, 0.0, false};
  ToyDetector& det = result.detector;
  std::vector<double> params = det.flatten_parameters();
  std::vector<double> grad(params.size());
  Adam adam(params.size(), config.learning_rate);

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double progress = static_cast<double>(epoch - 1) / config.epochs;
    adam.set_learning_rate(config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    Rng rng = make_rng(config.seed, {0x7a1, static_cast<std::uint64_t>(epoch)});
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const Sample& sample = train.samples[order[k]];
        Image image = sample.image;
        std::vector<Annotation> targets = sample.annotations;
        const std::uint64_t bits = rng();
        if (bits & 1) flip_sample(image, targets, true);
        if (bits & 2) flip_sample(image, targets, false);
        epoch_loss += det.accumulate_training_gradient(image, targets, grad);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      adam.step(params, grad);
      det.assign_parameters(params);
    }
    DetectorEpochLog entry{epoch, epoch_loss / static_cast<double>(train.size()),
                           adam.learning_rate()};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }

  if (holdout && !holdout->empty()) {
    result.holdout_ap = detector_ap(det, *holdout, 0);
    result.converged = result.holdout_ap >= config.min_holdout_ap;
  } else {
    result.holdout_ap = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

double detector_ap(const Detector& detector, const Dataset& dataset, int class_id,
                   double conf_threshold, double match_iou, double nms_iou) {
  std::vector<std::vector<Detection>> dets;
  std::vector<std::vector<Box>> gts;
  for (const Sample& s : dataset.samples) {
    std::vector<Detection> d = decode(detector.forward(s.image), {conf_threshold, nms_iou, false});
    std::erase_if(d, [&](const Detection& x) { return x.class_id != class_id; });
    dets.push_back(std::move(d));
    std::vector<Box> g;
    for (const Annotation& a : annotations_of_class(s, class_id)) g.push_back(a.box);
    gts.push_back(std::move(g));
  }
  return average_precision(precision_recall(dets, gts, match_iou));
}

}  // namespace camo
