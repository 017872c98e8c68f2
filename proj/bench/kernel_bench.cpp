// SPDX-License-Identifier: Apache-2.0

// Compares the OpenMP kernels against the serial reference loops, and the
// generic IDWT against the add-only synthesis path.
//
//   ./build/bench/kernel_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "wsg/kernels.hpp"
#include "wsg/rng.hpp"
#include "wsg/wavelet.hpp"

namespace {

wsg::Tensor randn(std::vector<int64_t> shape, uint64_t seed) {
    wsg::Rng rng(seed);
    return rng.normal_tensor(std::move(shape));
}

void BM_conv2d_dense_ref(benchmark::State& state) {
    const auto x = randn({1, 64, 32, 32}, 1);
    const auto w = randn({64, 64, 3, 3}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::ref::conv2d_dense(x, w, 1, 1));
}
BENCHMARK(BM_conv2d_dense_ref)->Unit(benchmark::kMillisecond);

void BM_conv2d_dense_omp(benchmark::State& state) {
    const auto x = randn({1, 64, 32, 32}, 1);
    const auto w = randn({64, 64, 3, 3}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::conv2d_dense(x, w, 1, 1));
}
BENCHMARK(BM_conv2d_dense_omp)->Unit(benchmark::kMillisecond);

void BM_conv2d_depthwise_ref(benchmark::State& state) {
    const auto x = randn({1, 256, 64, 64}, 3);
    const auto w = randn({256, 1, 3, 3}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::ref::conv2d_depthwise(x, w, 1));
}
BENCHMARK(BM_conv2d_depthwise_ref)->Unit(benchmark::kMillisecond);

void BM_conv2d_depthwise_omp(benchmark::State& state) {
    const auto x = randn({1, 256, 64, 64}, 3);
    const auto w = randn({256, 1, 3, 3}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::conv2d_depthwise(x, w, 1));
}
BENCHMARK(BM_conv2d_depthwise_omp)->Unit(benchmark::kMillisecond);

void BM_conv2d_pointwise_ref(benchmark::State& state) {
    const auto x = randn({1, 256, 32, 32}, 5);
    const auto w = randn({256, 256, 1, 1}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::ref::conv2d_pointwise(x, w));
}
BENCHMARK(BM_conv2d_pointwise_ref)->Unit(benchmark::kMillisecond);

void BM_conv2d_pointwise_omp(benchmark::State& state) {
    const auto x = randn({1, 256, 32, 32}, 5);
    const auto w = randn({256, 256, 1, 1}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::conv2d_pointwise(x, w));
}
BENCHMARK(BM_conv2d_pointwise_omp)->Unit(benchmark::kMillisecond);

void BM_idwt2_generic(benchmark::State& state) {
    const wsg::WaveletImage w{randn({1, 64, 128, 128}, 7)};
    for (auto _ : state) benchmark::DoNotOptimize(wsg::idwt2(w));
}
BENCHMARK(BM_idwt2_generic)->Unit(benchmark::kMillisecond);

void BM_idwt2_addonly(benchmark::State& state) {
    const wsg::WaveletImage w{randn({1, 64, 128, 128}, 7)};
    for (auto _ : state) benchmark::DoNotOptimize(wsg::idwt2_addonly(w));
}
BENCHMARK(BM_idwt2_addonly)->Unit(benchmark::kMillisecond);

void BM_dwt2(benchmark::State& state) {
    const auto img = randn({1, 16, 256, 256}, 8);
    for (auto _ : state) benchmark::DoNotOptimize(wsg::dwt2(img));
}
BENCHMARK(BM_dwt2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
