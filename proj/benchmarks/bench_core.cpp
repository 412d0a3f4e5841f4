#include <benchmark/benchmark.h>

#include <random>

#include "excepta/lattice.hpp"
#include "excepta/retrieval.hpp"
#include "excepta/topology.hpp"

using namespace excepta;

namespace {

const TheoreticalParams kTheory{1.0, 1.0, -0.05, 0.0, 0.0, 0.0};
const LatticeParams kLattice{1.0, 1.0, 1.3, -0.7, 0.5, 0.4, 0.7, {0, 0, 0}};

QMP random_qmp(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    ComplexMatrix K(n, n), G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            K(i, j) = d(rng) + (i == j ? 3.0 * n : 0.0);
            G(i, j) = 0.3 * d(rng);
        }
    return QMP(ComplexMatrix::identity(n), K, G);
}

}  // namespace

static void BM_Eigenfrequencies(benchmark::State& state) {
    const QMP q = random_qmp(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(eigenfrequencies(q));
}
BENCHMARK(BM_Eigenfrequencies)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

static void BM_SolveWithVectors(benchmark::State& state) {
    const QMP q = random_qmp(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(solve(q));
}
BENCHMARK(BM_SolveWithVectors)->Arg(2)->Arg(8);

static void BM_TrackBandsLoop(benchmark::State& state) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const ParameterPath loop = ParameterPath::circle({0, 0.025, 0}, {0, -1, 0}, 0.1, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(energy_vorticity(track_bands(b, loop), 0, 1));
}
BENCHMARK(BM_TrackBandsLoop)->Arg(64)->Arg(256);

static void BM_SurfaceAudit(benchmark::State& state) {
    const QmpBuilder b = theoretical_builder(kTheory);
    const SurfaceMesh box = SurfaceMesh::box({-0.03, -0.02, -0.015}, {0.03, 0.02, 0.015}, 9);
    for (auto _ : state) benchmark::DoNotOptimize(surface_audit(b, box, find_punctures(b, box)).sum);
}
BENCHMARK(BM_SurfaceAudit)->Unit(benchmark::kMillisecond);

static void BM_Wavepacket(benchmark::State& state) {
    WavepacketSpec spec;
    spec.nx = spec.nz = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(evolve_wavepacket(kLattice, spec, {0.0, 60.0}, 128, 128).boundary_ratio);
}
BENCHMARK(BM_Wavepacket)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_FitZeroNoise(benchmark::State& state) {
    ExperimentalParams truth;
    truth.kappa0 = 4330.0;
    truth.gamma0 = 5.593232517958;
    truth.dchi = -316.09;
    truth.chi = 355.06;
    const ResponseSpectra data = synth_response(truth, 1.0, uniform_freqs());
    ExperimentalParams start = truth;
    start.dchi = -200.0;
    start.chi = 300.0;
    FitModel m = FitModel::experimental(start);
    m.free("chi", 0, 1300).free("dchi", -866, 0);
    FitOptions o;
    o.starts = 4;
    for (auto _ : state) benchmark::DoNotOptimize(fit_parameters(data, m, o).rms);
}
BENCHMARK(BM_FitZeroNoise)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
