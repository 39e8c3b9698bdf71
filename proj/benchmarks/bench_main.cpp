#include <benchmark/benchmark.h>

#include <vector>

#include "lfm/filters.hpp"
#include "lfm/lowfreq.hpp"
#include "lfm/model.hpp"
#include "lfm/rng.hpp"
#include "lfm/spectral.hpp"

namespace {

lfm::Image noise(std::size_t n, std::uint64_t seed = 1) {
  lfm::Rng rng(seed);
  lfm::Image img(n, n);
  for (double& v : img.pixels()) v = rng.uniform(0.0, 1.0);
  return img;
}

lfm::Tensor noise_tensor(std::vector<std::size_t> shape, std::uint64_t seed = 2) {
  lfm::Rng rng(seed);
  lfm::Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Dft2(benchmark::State& state, lfm::TransformPath path) {
  const auto img = noise(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lfm::dft2(img, path));
}
BENCHMARK_CAPTURE(BM_Dft2, reference, lfm::TransformPath::reference)->Arg(16)->Arg(32);
BENCHMARK_CAPTURE(BM_Dft2, radix2, lfm::TransformPath::radix2)->Arg(16)->Arg(32)->Arg(128);

void BM_ConvolveDirect(benchmark::State& state) {
  const auto img = noise(128);
  const auto k = lfm::gaussian_kernel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lfm::convolve2d(img, k, lfm::PaddingMode::reflect));
}
BENCHMARK(BM_ConvolveDirect)->Arg(3)->Arg(7)->Arg(15);

void BM_ConvolveSeparable(benchmark::State& state) {
  const auto img = noise(128);
  const auto k = lfm::gaussian_kernel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lfm::convolve2d_separable(img, k, lfm::PaddingMode::reflect));
  }
}
BENCHMARK(BM_ConvolveSeparable)->Arg(3)->Arg(7)->Arg(15);

void BM_FilterSpectral(benchmark::State& state) {
  const auto img = noise(128);
  const auto k = lfm::gaussian_kernel(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lfm::filter_spectral(img, k));
}
BENCHMARK(BM_FilterSpectral)->Arg(3)->Arg(15);

void BM_LfmForward(benchmark::State& state) {
  const auto x = noise_tensor({16, 32, 8, 8});
  lfm::LfmConfig cfg;
  cfg.stride = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lfm::lfm_forward(x, cfg));
}
BENCHMARK(BM_LfmForward)->Arg(1)->Arg(2);

void BM_TrainStep(benchmark::State& state) {
  const auto variant = static_cast<lfm::Variant>(state.range(0));
  const auto model = lfm::build_model(lfm::toy_spec(variant, 3, {1, 32, 32}), 1);
  const auto batch = noise_tensor({16, 1, 32, 32});
  std::vector<int> labels(16);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) benchmark::DoNotOptimize(lfm::loss_and_gradients(model, batch, labels));
  state.SetLabel(std::string(lfm::to_string(variant)));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(lfm::Variant::baseline))
    ->Arg(static_cast<int>(lfm::Variant::ie))
    ->Arg(static_cast<int>(lfm::Variant::rsl))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
