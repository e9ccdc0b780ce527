// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "ccsched/oracle.hpp"
#include "ccsched/sweep.hpp"
#include "ccsched/workload.hpp"

using namespace ccsched;

namespace {

std::vector<JobSpec> bench_trace()
{
    auto cfg = TraceConfig::defaults();
    cfg.total_jobs = 40;
    cfg.arrival_window = 120;
    cfg.iterations_min = 50;
    cfg.iterations_max = 300;
    cfg.gpu_count_histogram = {{1, 16}, {2, 8}, {4, 8}, {8, 6}, {16, 2}};
    return generate_trace(cfg);
}

std::vector<SweepCase> sweep_cases(const std::vector<JobSpec>& trace)
{
    std::vector<SweepCase> cases;
    for (const char* p : {"lwf:1", "rand", "ff", "ls"})
        for (const char* s : {"ada-srsf", "srsf:1", "srsf:2"}) {
            SimOptions o;
            o.placement = PlacementPolicy::parse(p);
            o.scheduler = SchedulerPolicy::parse(s);
            cases.push_back({&trace, o});
        }
    return cases;
}

std::vector<DualTaskInstance> dual_batch()
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> size(1e6, 1e9), unit(0.0, 1.0);
    std::vector<DualTaskInstance> out;
    for (int i = 0; i < 200; ++i) {
        double m1 = size(rng), m2 = size(rng);
        if (m1 > m2) std::swap(m1, m2);
        out.push_back({m1, m2, 8.53e-10, 2e-10 * unit(rng)});
    }
    return out;
}

void BM_SweepParallel(benchmark::State& state)
{
    const auto trace = bench_trace();
    const auto cases = sweep_cases(trace);
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep(ClusterConfig{}, cases));
}

void BM_SweepSerial(benchmark::State& state)
{
    const auto trace = bench_trace();
    const auto cases = sweep_cases(trace);
    for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(ClusterConfig{}, cases));
}

void BM_DualBatchParallel(benchmark::State& state)
{
    const auto batch = dual_batch();
    for (auto _ : state) benchmark::DoNotOptimize(oracle::brute_force_dual_batch(batch, 2000));
}

void BM_DualBatchSerial(benchmark::State& state)
{
    const auto batch = dual_batch();
    for (auto _ : state) benchmark::DoNotOptimize(oracle::brute_force_dual_batch_serial(batch, 2000));
}

}  // namespace

BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DualBatchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DualBatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
