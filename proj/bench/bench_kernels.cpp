// Serial reference loops against the OpenMP kernels.
//   ./bench_kernels --benchmark_filter=Conv
// Set OMP_NUM_THREADS to compare thread counts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "multiroi/kernels.hpp"

using namespace multiroi;
using namespace multiroi::kernels;

namespace {

std::vector<double> random_vec(std::size_t n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Second conv of the tiny encoder on a batch of 64x64 crops: 8 -> 16 channels at 16x16.
ConvShape conv_shape(const benchmark::State& state) {
  return ConvShape{static_cast<int>(state.range(0)), 8, 16, 16, 16, 3, 1, 1};
}

template <auto Kernel>
void conv_forward(benchmark::State& state) {
  const ConvShape s = conv_shape(state);
  const auto in = random_vec(s.input_size());
  const auto w = random_vec(s.weight_size());
  const auto b = random_vec(static_cast<std::size_t>(s.out_channels));
  std::vector<double> out(s.output_size());
  for (auto _ : state) {
    Kernel(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * s.batch);
}

template <auto Kernel>
void conv_backward_weight(benchmark::State& state) {
  const ConvShape s = conv_shape(state);
  const auto in = random_vec(s.input_size());
  const auto go = random_vec(s.output_size());
  std::vector<double> gw(s.weight_size()), gb(static_cast<std::size_t>(s.out_channels));
  for (auto _ : state) {
    Kernel(s, in, go, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
  state.SetItemsProcessed(state.iterations() * s.batch);
}

template <auto Kernel>
void conv_backward_input(benchmark::State& state) {
  const ConvShape s = conv_shape(state);
  const auto go = random_vec(s.output_size());
  const auto w = random_vec(s.weight_size());
  std::vector<double> gi(s.input_size());
  for (auto _ : state) {
    Kernel(s, go, w, gi);
    benchmark::DoNotOptimize(gi.data());
  }
  state.SetItemsProcessed(state.iterations() * s.batch);
}

// ROI crop: a rotated box resampled from a 512x512 radiograph.
template <auto Kernel>
void affine(benchmark::State& state) {
  Image src(512, 512);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  for (float& p : src.pixels) p = u(rng);
  const int side = static_cast<int>(state.range(0));
  Image dst(side, side);
  const AffineMap map{1.2, -0.4, 100.0, 0.4, 1.2, 80.0};
  for (auto _ : state) {
    Kernel(src, map, Border::Zero, dst);
    benchmark::DoNotOptimize(dst.pixels.data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}

}  // namespace

BENCHMARK(conv_forward<serial::conv2d_forward>)->Name("ConvForward/serial")->Arg(32);
BENCHMARK(conv_forward<parallel::conv2d_forward>)->Name("ConvForward/parallel")->Arg(32);
BENCHMARK(conv_backward_weight<serial::conv2d_backward_weight>)->Name("ConvBackwardWeight/serial")->Arg(32);
BENCHMARK(conv_backward_weight<parallel::conv2d_backward_weight>)->Name("ConvBackwardWeight/parallel")->Arg(32);
BENCHMARK(conv_backward_input<serial::conv2d_backward_input>)->Name("ConvBackwardInput/serial")->Arg(32);
BENCHMARK(conv_backward_input<parallel::conv2d_backward_input>)->Name("ConvBackwardInput/parallel")->Arg(32);
BENCHMARK(affine<serial::affine_sample>)->Name("AffineSample/serial")->Arg(64)->Arg(256);
BENCHMARK(affine<parallel::affine_sample>)->Name("AffineSample/parallel")->Arg(64)->Arg(256);

BENCHMARK_MAIN();
