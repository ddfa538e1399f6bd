#include "mixkin/collision.hpp"
#include "mixkin/experiments.hpp"
#include "mixkin/fluid.hpp"
#include "mixkin/kernel_estimates.hpp"
#include "mixkin/linearized.hpp"

#include <benchmark/benchmark.h>

using namespace mixkin;

static void BM_Collide(benchmark::State& state) {
    const SpeciesPair s;
    const VelocityGrid g(4.0, static_cast<int>(state.range(0)));
    const CollisionOperator op(s, g, lebedev_like_rule(6));
    const auto F = seeded_nonequilibrium(s, g, 1);
    for (auto _ : state) {
        auto Q = op.collide(F);
        benchmark::DoNotOptimize(Q.A.data());
    }
    state.counters["nodes"] = static_cast<double>(g.size());
}
BENCHMARK(BM_Collide)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_AssembleL(benchmark::State& state) {
    const SpeciesPair s;
    const VelocityGrid g(4.0, static_cast<int>(state.range(0)));
    const auto rule = lebedev_like_rule(6);
    for (auto _ : state) {
        auto L = assemble_L(BiMaxwell{}, s, g, rule);
        benchmark::DoNotOptimize(L.Ld.data());
    }
}
BENCHMARK(BM_AssembleL)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_SolveMicro(benchmark::State& state) {
    const SpeciesPair s;
    const VelocityGrid g(4.0, 8);
    const BiMaxwell bg;
    const auto L = assemble_L(bg, s, g, lebedev_like_rule(6));
    const auto basis = kernel_basis(bg, s, g);
    std::vector<double> r(L.dim());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::sin(0.3 * k);
    const auto p = project_macro(r, basis, g);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= p[k];
    for (auto _ : state) {
        auto f = solve_micro(L, r, basis);
        benchmark::DoNotOptimize(f.data());
    }
}
BENCHMARK(BM_SolveMicro)->Unit(benchmark::kMillisecond);

static void BM_BoundTypical(benchmark::State& state) {
    const auto f = default_kernel_frame(SpeciesPair{}, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(check_bound_typical(f, 0, 1, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_BoundTypical)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_EulerSolve(benchmark::State& state) {
    const SpatialGrid g(1.0, static_cast<int>(state.range(0)), 1);
    const auto s = perturbed_state(g, {1.0, 2.0}, 0.1, default_fluctuation());
    for (auto _ : state) {
        auto tr = euler_solve(s, {0.0, 0.5});
        benchmark::DoNotOptimize(tr.steps);
    }
}
BENCHMARK(BM_EulerSolve)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_AcousticSolve(benchmark::State& state) {
    const SpatialGrid g(1.0, 256, 1);
    AcousticState a(g, {1.0, 2.0});
    for (int i = 0; i < 256; ++i) a.sA[i] = std::sin(6.283185307179586 * g.x(i));
    for (auto _ : state) {
        auto b = acoustic_solve(a, 1.0);
        benchmark::DoNotOptimize(b.sA.data());
    }
}
BENCHMARK(BM_AcousticSolve);

BENCHMARK_MAIN();
