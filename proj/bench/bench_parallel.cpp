// Serial reference vs OpenMP kernels. Set NUDGEQ_THREADS to pin the thread count.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "nudgeq/kernels.hpp"
#include "nudgeq/simulator.hpp"

using namespace nudgeq;
using kernels::ExecutionMode;

namespace {

ExecutionMode mode_of(const benchmark::State& state)
{
    return state.range(0) ? ExecutionMode::parallel : ExecutionMode::serial;
}

void label(benchmark::State& state)
{
    state.SetLabel(state.range(0) ? "openmp threads=" + std::to_string(kernels::thread_budget()) : "serial");
}

void BM_dot(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(1));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::sin(0.001 * i);
        b[i] = std::cos(0.002 * i);
    }
    const auto mode = mode_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::dot(mode, a.data(), b.data(), n));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * sizeof(double)));
    label(state);
}
BENCHMARK(BM_dot)->ArgsProduct({{0, 1}, {1 << 12, 1 << 20}});

// waiting density of M/M/1 at load 0.8 on a grid of N points
void BM_march_volterra(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(1));
    const double h = 1e-3;
    std::vector<double> forcing(n + 1), kernel(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        kernel[i] = std::exp(-h * i);
        forcing[i] = 0.16 * std::exp(-h * i);
    }
    const auto mode = mode_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::march_volterra(forcing, kernel, 0.8, h, mode));
    state.SetComplexityN(static_cast<std::int64_t>(n));
    label(state);
}
BENCHMARK(BM_march_volterra)->ArgsProduct({{0, 1}, {5'000, 20'000}})->Unit(benchmark::kMillisecond);

// four coupled replications of a hyperexponential queue at load 0.8
void BM_coupled_replications(benchmark::State& state)
{
    sim::SimConfig c;
    c.dist = JobSizeDistribution::hyperexponential({0.8, 0.2}, {2.0, 1.0 / 3.0});
    c.lambda = 0.8;
    c.policy = sim::Policy::nudge({1, 1, INFINITY});
    c.n_arrivals = static_cast<std::uint64_t>(state.range(1));
    c.replications = 4;
    c.seed = 7;
    const auto mode = mode_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(sim::coupled_run(c, mode).n_jobs());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.n_arrivals * c.replications));
    label(state);
}
BENCHMARK(BM_coupled_replications)->ArgsProduct({{0, 1}, {250'000}})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
