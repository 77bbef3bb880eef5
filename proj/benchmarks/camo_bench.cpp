#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "camo/geometry.hpp"
#include "camo/losses.hpp"
#include "camo/metrics.hpp"
#include "camo/rng.hpp"
#include "camo/toy_detector.hpp"

namespace camo {
namespace {

Image noise_image(int channels, int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(channels, height, width);
  for (double& v : img.data()) v = u(rng);
  return img;
}

void BM_CompositePatch(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Image scene = noise_image(3, 256, 256, 1);
  const Image patch = noise_image(3, side, side, 2);
  const Placement placement{128.0, 128.0, side * 1.5, side * 1.5};
  const TransformSample transform{37.0, 1.05, 0.05, 1.1, 0.02, 3};
  for (auto _ : state) {
    Image img = scene;
    benchmark::DoNotOptimize(composite_patch_inplace(img, patch, placement, transform));
  }
}
BENCHMARK(BM_CompositePatch)->Arg(16)->Arg(32)->Arg(64);

void BM_CompositeBackprop(benchmark::State& state) {
  Image img = noise_image(3, 256, 256, 1);
  const Image patch = noise_image(3, 32, 32, 2);
  const auto trace = composite_patch_inplace(img, patch, {128.0, 128.0, 48.0, 48.0},
                                             TransformSample{37.0, 1.0, 0.05, 1.0, 0.0, 3});
  const Image upstream = noise_image(3, 256, 256, 4);
  for (auto _ : state) {
    Image grad(3, 32, 32, 0.0);
    backprop_to_patch(std::span<const CompositeTrace>(&trace, 1), upstream, grad);
    benchmark::DoNotOptimize(grad.data().data());
  }
}
BENCHMARK(BM_CompositeBackprop);

void BM_DetectorForward(benchmark::State& state) {
  const ToyDetector detector(ToyArchitecture{}, 1);
  const Image img = noise_image(3, 256, 256, 5);
  for (auto _ : state) benchmark::DoNotOptimize(detector.forward(img));
}
BENCHMARK(BM_DetectorForward)->Unit(benchmark::kMillisecond);

void BM_DetectorInputGradient(benchmark::State& state) {
  const ToyDetector detector(ToyArchitecture{}, 1);
  const Image img = noise_image(3, 256, 256, 5);
  for (auto _ : state) {
    const ForwardResult fwd = detector.forward_traced(img);
    std::vector<OutputGrad> grads;
    objectness_loss(std::span<const DetectorOutput>(&fwd.output, 1), {}, &grads);
    benchmark::DoNotOptimize(detector.input_gradient(fwd, grads[0]));
  }
}
BENCHMARK(BM_DetectorInputGradient)->Unit(benchmark::kMillisecond);

void BM_NpsLoss(benchmark::State& state) {
  const Image patch = noise_image(3, 32, 32, 6);
  const auto colors = PrintableColorSet::defaults();
  Image grad;
  for (auto _ : state) benchmark::DoNotOptimize(nps_loss(patch, colors, &grad));
}
BENCHMARK(BM_NpsLoss);

void BM_TvLoss(benchmark::State& state) {
  const Image patch = noise_image(3, 32, 32, 7);
  Image grad;
  for (auto _ : state) benchmark::DoNotOptimize(tv_loss(patch, &grad));
}
BENCHMARK(BM_TvLoss);

void BM_SaliencyLoss(benchmark::State& state) {
  const Image patch = noise_image(3, 32, 32, 8);
  Image grad;
  for (auto _ : state) benchmark::DoNotOptimize(saliency_loss(patch, &grad));
}
BENCHMARK(BM_SaliencyLoss);

void BM_PrecisionRecall(benchmark::State& state) {
  const int images = static_cast<int>(state.range(0));
  Rng rng(9);
  std::uniform_real_distribution<double> pos(0.0, 200.0), size(10.0, 60.0), conf(0.0, 1.0);
  std::vector<std::vector<Detection>> dets(images);
  std::vector<std::vector<Box>> gts(images);
  for (int i = 0; i < images; ++i) {
    for (int k = 0; k < 3; ++k) gts[i].push_back({pos(rng), pos(rng), size(rng), size(rng)});
    for (int k = 0; k < 20; ++k) dets[i].push_back({{pos(rng), pos(rng), size(rng), size(rng)}, 0, conf(rng), k});
  }
  for (auto _ : state) {
    const auto points = precision_recall(dets, gts, 0.5);
    benchmark::DoNotOptimize(average_precision(points));
  }
}
BENCHMARK(BM_PrecisionRecall)->Arg(16)->Arg(256);

}  // namespace
}  // namespace camo

BENCHMARK_MAIN();
