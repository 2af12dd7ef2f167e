// Production (OpenMP) kernels against the serial reference loops on layer
// shapes taken from the named architectures.
//
//   ./build/bench/kernel_bench --benchmark_filter=Conv
//   OMP_NUM_THREADS=4 ./build/bench/kernel_bench

#include <benchmark/benchmark.h>
#include <omp.h>

#include "sz3d/kernels.hpp"
#include "sz3d/reference_kernels.hpp"
#include "sz3d/rng.hpp"

using namespace sz3d;

namespace {

Tensor random_tensor(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

struct ConvCase {
  Shape input;
  std::size_t out_channels;
  ConvSpec spec;
};

// 0: seq1 first layer on a downsampled volume; 1: inception 1x1 reduce;
// 2: inception 3x3 branch; 3: inception 5x5 branch.
ConvCase conv_case(int i) {
  switch (i) {
    case 0: return {{4, 1, 61, 73, 61}, 16, ConvSpec{}};
    case 1: return {{4, 32, 30, 36, 30}, 8, ConvSpec{{1, 1, 1}, {1, 1, 1}, {0, 0, 0}}};
    case 2: return {{4, 8, 30, 36, 30}, 16, ConvSpec{}};
    default: return {{4, 4, 30, 36, 30}, 4, ConvSpec{{5, 5, 5}, {1, 1, 1}, {2, 2, 2}}};
  }
}

template <auto Forward>
void BM_ConvForward(benchmark::State& state) {
  const ConvCase c = conv_case(static_cast<int>(state.range(0)));
  const Tensor x = random_tensor(c.input, 1);
  const Tensor w = random_tensor({c.out_channels, c.input[1], c.spec.kernel[0], c.spec.kernel[1], c.spec.kernel[2]}, 2);
  const Tensor b = random_tensor({c.out_channels}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(x, w, b, c.spec));
  state.counters["threads"] = omp_get_max_threads();
}

template <auto Forward, auto Backward>
void BM_ConvBackward(benchmark::State& state) {
  const ConvCase c = conv_case(static_cast<int>(state.range(0)));
  const Tensor x = random_tensor(c.input, 1);
  const Tensor w = random_tensor({c.out_channels, c.input[1], c.spec.kernel[0], c.spec.kernel[1], c.spec.kernel[2]}, 2);
  const Tensor b = random_tensor({c.out_channels}, 3);
  const Tensor g = random_tensor(Forward(x, w, b, c.spec).shape(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(Backward(x, w, c.spec, g, true));
  state.counters["threads"] = omp_get_max_threads();
}

template <auto Forward>
void BM_MaxPool(benchmark::State& state) {
  const Tensor x = random_tensor({4, 16, 61, 73, 61}, 5);
  const PoolSpec spec{};
  for (auto _ : state) benchmark::DoNotOptimize(Forward(x, spec));
}

template <auto Forward>
void BM_Dense(benchmark::State& state) {
  // seq head on a 16x16x16 phantom: 16 * 8 * 8 * 8 features into 128 units
  const Tensor x = random_tensor({8, 8192}, 6);
  const Tensor w = random_tensor({128, 8192}, 7);
  const Tensor b = random_tensor({128}, 8);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(x, w, b));
}

}  // namespace

BENCHMARK(BM_ConvForward<kernels::conv3d_forward>)->Name("ConvForward/openmp")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<reference::conv3d_forward>)->Name("ConvForward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<kernels::conv3d_forward, kernels::conv3d_backward>)->Name("ConvBackward/openmp")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<kernels::conv3d_forward, reference::conv3d_backward>)->Name("ConvBackward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<kernels::maxpool3d_forward>)->Name("MaxPool/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<reference::maxpool3d_forward>)->Name("MaxPool/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<kernels::dense_forward>)->Name("Dense/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<reference::dense_forward>)->Name("Dense/reference")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
