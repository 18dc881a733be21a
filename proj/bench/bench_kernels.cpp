#include <benchmark/benchmark.h>

#include "cellsynth/kernels.hpp"
#include "cellsynth/rng.hpp"

using namespace cellsynth;

namespace {

ImageF frame(int n) {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageF img(n, n);
    for (auto& v : img.pixels()) v = u(rng);
    return img;
}

std::vector<kernels::Body> bodies(int n) {
    Rng rng(2);
    std::uniform_real_distribution<double> pos(0.0, 10.0 * n), r(4.0, 12.0);
    std::vector<kernels::Body> out(n);
    for (int i = 0; i < n; ++i) out[i] = {Vec2(pos(rng), pos(rng)), 12.0, r(rng), static_cast<std::uint32_t>(i + 1)};
    return out;
}

template <auto Blur>
void BM_Blur(benchmark::State& state) {
    const ImageF in = frame(static_cast<int>(state.range(0)));
    ImageF out;
    for (auto _ : state) {
        Blur(in, out, 1.0);
        benchmark::DoNotOptimize(out.pixels().data());
    }
    state.SetItemsProcessed(state.iterations() * in.size());
}

template <auto Noise>
void BM_Poisson(benchmark::State& state) {
    const ImageF in = frame(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        ImageF img = in;
        Noise(img, 1000.0, 7);
        benchmark::DoNotOptimize(img.pixels().data());
    }
    state.SetItemsProcessed(state.iterations() * in.size());
}

template <auto Repulsion>
void BM_Repulsion(benchmark::State& state) {
    const auto b = bodies(static_cast<int>(state.range(0)));
    std::vector<Vec2> out(b.size());
    const kernels::RepulsionLaw law;
    for (auto _ : state) {
        Repulsion(b, law, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_Blur<kernels::serial::gaussian_blur>)->Name("blur/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_Blur<kernels::omp::gaussian_blur>)->Name("blur/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_Poisson<kernels::serial::add_poisson_noise>)->Name("poisson/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_Poisson<kernels::omp::add_poisson_noise>)->Name("poisson/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_Repulsion<kernels::serial::repulsion_corrections>)->Name("repulsion/serial")->Arg(64)->Arg(512);
BENCHMARK(BM_Repulsion<kernels::omp::repulsion_corrections>)->Name("repulsion/omp")->Arg(64)->Arg(512);

BENCHMARK_MAIN();
