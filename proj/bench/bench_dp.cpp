// Sequential vs wavefront DP, and serial vs OpenMP replica loops.

#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "lgp/lattice.hpp"

namespace {

void BM_ForwardDp(benchmark::State& state, lgp::DpMode mode) {
    const int size = static_cast<int>(state.range(0));
    const auto env = lgp::build_env(size, size, lgp::ModelParams(1.0, 2.0), lgp::RngStream(1, 1));
    for (auto _ : state) {
        auto lat = lgp::forward_logZ(env, mode);
        benchmark::DoNotOptimize(lat.v.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(size) * size);
}

void BM_Replicas(benchmark::State& state, bool parallel) {
    const int size = static_cast<int>(state.range(0));
    const long reps = 64;
    const lgp::ModelParams p(1.0, 2.0);
    std::vector<double> out(reps);
    for (auto _ : state) {
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (long r = 0; r < reps; ++r) {
            out[r] = lgp::stream_endpoint_logZ(size, size, p, lgp::RngStream(7, static_cast<std::uint64_t>(r)));
        }
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * reps);
    state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

}  // namespace

BENCHMARK_CAPTURE(BM_ForwardDp, sequential, lgp::DpMode::sequential)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ForwardDp, wavefront, lgp::DpMode::wavefront)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Replicas, serial, false)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Replicas, openmp, true)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
