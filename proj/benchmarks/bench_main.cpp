#include <random>

#include <benchmark/benchmark.h>

#include "discountlab/instances.hpp"
#include "discountlab/limits.hpp"
#include "discountlab/lp.hpp"
#include "discountlab/measures.hpp"
#include "discountlab/solver.hpp"

using namespace discountlab;

static void BM_PolicyIterateEikonal(benchmark::State& state) {
    auto sys = instances::eikonal(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(policy_iterate(sys, 0.1, 1e-12));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PolicyIterateEikonal)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_PolicyIterateQuadraticPlc(benchmark::State& state) {
    auto sys = instances::quadratic_plc(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(policy_iterate(sys, 0.1, 1e-12));
}
BENCHMARK(BM_PolicyIterateQuadraticPlc)->Arg(8)->Arg(32)->Arg(128);

static void BM_ValueIterate(benchmark::State& state) {
    auto sys = instances::quadratic_plc(8);
    auto u0 = ValueField::constant(sys, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(value_iterate(sys, 0.5, u0, 1e-10));
}
BENCHMARK(BM_ValueIterate);

static void BM_GreenPoisson(benchmark::State& state) {
    auto sys = instances::quadratic_plc(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(green_poisson(sys, 0.1, 0, 0));
}
BENCHMARK(BM_GreenPoisson)->Arg(4)->Arg(8)->Arg(16);

static void BM_LpSolveDense(benchmark::State& state) {
    const int rows = static_cast<int>(state.range(0)), cols = 2 * rows;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1, 1), P(0.1, 1);
    LPProblem p;
    p.A.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.A(i, j) = U(rng);
    p.b.resize(rows);
    for (int i = 0; i < rows; ++i) p.b[i] = P(rng);
    p.c.resize(cols);
    for (int j = 0; j < cols; ++j) p.c[j] = U(rng);
    p.sense.assign(rows, RowSense::Le);
    for (auto _ : state) benchmark::DoNotOptimize(lp_solve(p));
}
BENCHMARK(BM_LpSolveDense)->Arg(12)->Arg(48)->Arg(192);

static void BM_DiscountSweep(benchmark::State& state) {
    auto sys = ergodic_normalize(instances::eikonal(64)).shifted;
    for (auto _ : state) benchmark::DoNotOptimize(discount_sweep(sys));
}
BENCHMARK(BM_DiscountSweep);

static void BM_ErgodicSolve(benchmark::State& state) {
    auto sys = instances::eikonal(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ergodic_solve(sys, 1.0, 1e-8));
}
BENCHMARK(BM_ErgodicSolve)->Arg(64)->Arg(256);
BENCHMARK_MAIN();
