// Micro benchmarks of the per-step kernels: cosine transform, block Helmholtz
// solve, one SVM step and one EQ step on the mesh-refinement setup.

#include <benchmark/benchmark.h>

#include "copoly/harness.hpp"
#include "copoly/integrators.hpp"
#include "copoly/spectral.hpp"

using namespace copoly;

namespace {

struct Setup {
    Grid2D grid;
    FieldTriple phi;
    ModelParams params;

    explicit Setup(int n)
        : grid(n, n),
          phi(initial_fields(find_experiment("mesh-refinement"), grid, 1)),
          params(model_for(find_experiment("mesh-refinement"), phi)) {}
};

void BM_CosineRoundTrip(benchmark::State& state) {
    const Setup s(static_cast<int>(state.range(0)));
    const auto plan = CosineBasisPlan::shared(s.grid);
    for (auto _ : state) benchmark::DoNotOptimize(plan->inverse(plan->forward(s.phi[0])));
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(s.grid.size()));
}

void BM_BlockHelmholtzSolve(benchmark::State& state) {
    const Setup s(static_cast<int>(state.range(0)));
    const BlockHelmholtzPlan H(CosineBasisPlan::shared(s.grid), s.params.symbol(), s.params.m_eff, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_block_helmholtz(H, s.phi));
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(s.grid.size()));
}

void bench_step(benchmark::State& state, SchemeKind scheme) {
    const Setup s(static_cast<int>(state.range(0)));
    const StepContext ctx(s.params, std::monostate{}, s.grid, 1e-3);
    const PhaseState prev = prepare_state(s.phi, scheme, 0.0, ctx);
    const PhaseState curr = bootstrap_step(scheme, prev, 0.0, ctx).next;
    for (auto _ : state) benchmark::DoNotOptimize(step(scheme, prev, curr, 1e-3, ctx));
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(s.grid.size()));
}

void BM_Svm2Step(benchmark::State& state) { bench_step(state, SchemeKind::SVM2); }
void BM_EqStep(benchmark::State& state) { bench_step(state, SchemeKind::EQ); }

} // namespace

BENCHMARK(BM_CosineRoundTrip)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BlockHelmholtzSolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Svm2Step)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EqStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
