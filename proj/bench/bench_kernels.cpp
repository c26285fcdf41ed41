// Serial reference against the transform/OpenMP kernels.

#include "catderiv/hjb_solver.hpp"
#include "catderiv/kernels.hpp"
#include "catderiv/simulator.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace catderiv;

namespace {

ClaimsModel cc_model() {
    ClaimsModel m;
    m.lambda1 = 69;
    m.lambda2 = 1;
    m.severity = GammaSeverity{10, 5000};
    m.cat_count = ShiftedPoisson{2, 40};
    m.eta = 1e-6;
    m.horizon = 1;
    return m;
}

std::vector<std::vector<double>> random_kernels(int count, int len) {
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> k(static_cast<std::size_t>(count), std::vector<double>(static_cast<std::size_t>(len)));
    for (auto& v : k)
        for (auto& x : v) x = u(g);
    return k;
}

void correlation(benchmark::State& st, Backend backend) {
    const auto n = static_cast<std::size_t>(st.range(0));
    CorrelationBank<double> bank(random_kernels(101, 400), n);
    std::vector<double> d(n, 0.5), out;
    for (auto _ : st) {
        bank.apply(d, out, backend);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_CorrelationSerial(benchmark::State& st) { correlation(st, Backend::Serial); }
void BM_CorrelationParallel(benchmark::State& st) { correlation(st, Backend::Parallel); }
BENCHMARK(BM_CorrelationSerial)->Arg(512)->Arg(1024);
BENCHMARK(BM_CorrelationParallel)->Arg(512)->Arg(1024);

void BM_KernelFamily(benchmark::State& st) {
    const ClaimsModel m = cc_model();
    const GridSpec fine{5.2e6, 16384};
    const SolveGrid grid{2.5575e7, 1024, 1000, 100, 1.0};
    for (auto _ : st) benchmark::DoNotOptimize(build_kernel_family(m, fine, grid).mass.data());
}
BENCHMARK(BM_KernelFamily)->Unit(benchmark::kMillisecond);

void BM_SolverStepsSerial(benchmark::State& st) {
    const ClaimsModel m = cc_model();
    MarketModel mk{10000, 2.0, LinearDemand{}, fair_premium(m, 10000)};
    const GridSpec fine{5.2e6, 4096};
    const SolveGrid grid{2.5e7, 256, 5, 100, 1.0};
    const KernelFamily fam = build_kernel_family(m, fine, grid);
    for (auto _ : st)
        benchmark::DoNotOptimize(
            solve_backward(m, mk, SpreadOption{1e7, 1.98e7}, grid, fam, SolveMode::P, Backend::Serial).w_bar);
}
void BM_SolverStepsParallel(benchmark::State& st) {
    const ClaimsModel m = cc_model();
    MarketModel mk{10000, 2.0, LinearDemand{}, fair_premium(m, 10000)};
    const GridSpec fine{5.2e6, 4096};
    const SolveGrid grid{2.5e7, 256, 5, 100, 1.0};
    const KernelFamily fam = build_kernel_family(m, fine, grid);
    for (auto _ : st)
        benchmark::DoNotOptimize(
            solve_backward(m, mk, SpreadOption{1e7, 1.98e7}, grid, fam, SolveMode::P, Backend::Parallel).w_bar);
}
BENCHMARK(BM_SolverStepsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolverStepsParallel)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& st) {
    const ClaimsModel m = cc_model();
    MarketModel mk{10000, 2.0, LinearDemand{}, fair_premium(m, 10000)};
    for (auto _ : st)
        benchmark::DoNotOptimize(
            mc_expected_utility(m, mk, ConstantPolicy{0.4}, ZeroPayoff{}, st.range(0), 11).estimate);
}
BENCHMARK(BM_MonteCarlo)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
