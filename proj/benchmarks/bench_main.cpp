#include <benchmark/benchmark.h>

#include <vector>

#include "retseg/filters.hpp"
#include "retseg/image.hpp"
#include "retseg/rng.hpp"
#include "retseg/tensor.hpp"
#include "retseg/unet.hpp"

using namespace retseg;

namespace {

GrayImage noise_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> px(static_cast<std::size_t>(size) * size);
  for (auto& p : px) p = static_cast<float>(rng.uniform01());
  return GrayImage(size, size, std::move(px));
}

Tensor4<float> noise_tensor(Shape4 s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor4<float> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.uniform01() * 2.0 - 1.0);
  return t;
}

void BM_GaussianBlur(benchmark::State& state) {
  const GrayImage img = noise_image(static_cast<int>(state.range(0)), 1);
  const GaussianParams params{};
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, params));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_GaussianBlur)->Arg(64)->Arg(512);

void BM_Convolve2d(benchmark::State& state) {
  const GrayImage img = noise_image(static_cast<int>(state.range(0)), 2);
  const Kernel2D k = gaussian_kernel({});
  for (auto _ : state) benchmark::DoNotOptimize(convolve2d(img, k));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Convolve2d)->Arg(64)->Arg(512);

void BM_GaborBank(benchmark::State& state) {
  const GrayImage img = noise_image(static_cast<int>(state.range(0)), 3);
  const auto bank = gabor_bank({}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(gabor_response(img, bank));
}
BENCHMARK(BM_GaborBank)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SobelPrune(benchmark::State& state) {
  const GrayImage img = noise_image(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(sobel_prune(img, {}));
}
BENCHMARK(BM_SobelPrune)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

// range(0): channels in and out, at 64x64
void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = noise_tensor({1, c, 64, 64}, 5);
  const auto w = noise_tensor({c, c, 3, 3}, 6);
  const std::vector<float> b(static_cast<std::size_t>(c), 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d<float>(x, w, b));
  state.SetItemsProcessed(state.iterations() * 64 * 64 * c * c * 9);
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(16)->Arg(32);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const auto x = noise_tensor({1, c, 64, 64}, 7);
  const auto w = noise_tensor({c, c, 3, 3}, 8);
  const auto dy = noise_tensor({1, c, 64, 64}, 9);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward<float>(x, w, dy));
}
BENCHMARK(BM_Conv2dBackward)->Arg(4)->Arg(16)->Arg(32);

// range(0): width_scale; range(1): image size
void BM_UNetForward(benchmark::State& state) {
  const UNet<float> model(UNetConfig::reti_unet1(static_cast<int>(state.range(0))), 0);
  const int size = static_cast<int>(state.range(1));
  const auto x = noise_tensor({1, 1, size, size}, 10);
  for (auto _ : state) benchmark::DoNotOptimize(unet_forward(model, x, false));
}
BENCHMARK(BM_UNetForward)->Args({16, 64})->Args({16, 256})->Args({8, 64})->Unit(benchmark::kMillisecond);

void BM_UNetTrainStep(benchmark::State& state) {
  const UNet<float> model(UNetConfig::reti_unet1(16), 0);
  const auto x = noise_tensor({2, 1, 64, 64}, 11);
  const Tensor4<float> target({2, 1, 64, 64}, 1.0f);
  for (auto _ : state) {
    auto fwd = unet_forward(model, x, true);
    auto loss = nn::soft_dice_loss(fwd.probs, target);
    benchmark::DoNotOptimize(unet_backward(model, fwd, loss.dprobs));
  }
}
BENCHMARK(BM_UNetTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
