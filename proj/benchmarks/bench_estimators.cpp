#include <benchmark/benchmark.h>

#include "fbitw/em.hpp"
#include "fbitw/mc.hpp"
#include "fbitw/refit.hpp"

using namespace fbitw;

namespace {

McConfig bench_cfg(int n) {
    McConfig cfg;
    cfg.N = n;
    cfg.T = n;
    cfg.N_o = cfg.T_o = (3 * n) / 5;
    cfg.case_id = 0;
    cfg.seed = 123;
    return cfg;
}

void BM_thin_svd(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Dgp d = generate_dgp(bench_cfg(n), 0);
    for (auto _ : state) benchmark::DoNotOptimize(thin_svd(d.X / n, 2));
}
BENCHMARK(BM_thin_svd)->Arg(100)->Arg(200);

void BM_estimate_apc(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Dgp d = generate_dgp(bench_cfg(n), 0);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_apc(d.X, 2));
}
BENCHMARK(BM_estimate_apc)->Arg(200);

void BM_impute_tw(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const McConfig cfg = bench_cfg(n);
    const Dgp d = generate_dgp(cfg, 0);
    const Panel p = apply_missing_case(d.X, cfg.N_o, cfg.T_o);
    const BlockPartition bp = partition_blocks(p);
    for (auto _ : state) benchmark::DoNotOptimize(impute_tw(p, 2, bp));
}
BENCHMARK(BM_impute_tw)->Arg(100)->Arg(200);

void BM_tw_updated(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const McConfig cfg = bench_cfg(n);
    const Dgp d = generate_dgp(cfg, 0);
    const Panel p = apply_missing_case(d.X, cfg.N_o, cfg.T_o);
    const BlockPartition bp = partition_blocks(p);
    for (auto _ : state) {
        const ImputedPanel ip = impute_tw(p, 2, bp).first;
        benchmark::DoNotOptimize(reestimate(ip, 2));
    }
}
BENCHMARK(BM_tw_updated)->Arg(200);

void BM_impute_em(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const McConfig cfg = bench_cfg(n);
    const Dgp d = generate_dgp(cfg, 0);
    const Panel p = apply_missing_case(d.X, cfg.N_o, cfg.T_o);
    for (auto _ : state) benchmark::DoNotOptimize(impute_em(p, 2));
}
BENCHMARK(BM_impute_em)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_variance_components(benchmark::State& state) {
    const McConfig cfg = bench_cfg(200);
    const Dgp d = generate_dgp(cfg, 0);
    const Panel p = apply_missing_case(d.X, cfg.N_o, cfg.T_o);
    const BlockPartition bp = partition_blocks(p);
    const ImputedPanel ip = impute_tw(p, 2, bp).first;
    const FactorModel fm = reestimate(ip, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_variance_components(fm, ip, bp, 0));
}
BENCHMARK(BM_variance_components);

}  // namespace

BENCHMARK_MAIN();
