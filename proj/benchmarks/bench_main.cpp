#include <benchmark/benchmark.h>

#include <random>

#include "blasso/blasso.hpp"

using namespace blasso;

namespace {

KernelContext context(int d) { return KernelContext(DomainBox::uniform(d, -10.0, 10.0, 0.5, 2.0), 0.4); }

Location location(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> t(-3.0, 3.0), u(0.5, 2.0);
    Location x{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int k = 0; k < d; ++k) {
        x.t[k] = t(rng);
        x.u[k] = u(rng);
    }
    return x;
}

GroundTruthMixture mixture() {
    GroundTruthMixture mix{DiscreteMeasure{}, KernelContext(DomainBox::uniform(1, -100, 100, 0.5, 2.0), 0.5)};
    mix.mu0.add(0.4, Location(-60.0, 1.0));
    mix.mu0.add(0.6, Location(60.0, 1.5));
    return mix;
}

void BM_KernelValue(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const KernelContext ctx = context(d);
    std::mt19937_64 rng(1);
    const Location x = location(rng, d), y = location(rng, d);
    for (auto _ : state) benchmark::DoNotOptimize(k_norm(x, y, ctx));
}
BENCHMARK(BM_KernelValue)->Arg(1)->Arg(2)->Arg(3);

void BM_KernelDerivativesOrder3(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const KernelContext ctx = context(d);
    std::mt19937_64 rng(2);
    const Location x = location(rng, d), y = location(rng, d);
    for (auto _ : state) benchmark::DoNotOptimize(kernel_derivatives(x, y, ctx, 3));
}
BENCHMARK(BM_KernelDerivativesOrder3)->Arg(1)->Arg(2)->Arg(3);

void BM_WitnessDirect(benchmark::State& state) {
    const GroundTruthMixture mix = mixture();
    const SampleMatrix X = sample(mix, state.range(0), 3);
    const Location x(-60.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(data_witness_jet(x, X, mix.ctx));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WitnessDirect)->RangeMultiplier(10)->Range(1000, 100000);

void BM_WitnessBinned(benchmark::State& state) {
    const GroundTruthMixture mix = mixture();
    const SampleMatrix X = sample(mix, state.range(0), 3);
    const WitnessEvaluator ev(X, mix.ctx);
    const Location x(-60.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(ev.jet(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WitnessBinned)->RangeMultiplier(10)->Range(1000, 100000);

void BM_CertificateSolve(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    const KernelContext ctx(DomainBox::uniform(1, -400.0, 400.0, 1.0, 1.0), 1.0);
    std::vector<Location> anchors;
    for (int j = 0; j < s; ++j) anchors.emplace_back(27.0 * j, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_certificates(build_upsilon(anchors, ctx)));
}
BENCHMARK(BM_CertificateSolve)->Arg(2)->Arg(8)->Arg(16);

void BM_SolverRun(benchmark::State& state) {
    const GroundTruthMixture mix = mixture();
    const long n = state.range(0);
    const SampleMatrix X = sample(mix, n, 4);
    const RecommendedParameters p = recommended_parameters(n, 2, 1, 0.5, mix.ctx.box);
    const ObjectiveContext octx(X, p.kappa_agnostic, mix.ctx);
    SolverConfig cfg;
    cfg.max_particles = 6;
    for (auto _ : state) benchmark::DoNotOptimize(cpgd_solve(initialize_particles(octx, cfg), octx, cfg));
}
BENCHMARK(BM_SolverRun)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
