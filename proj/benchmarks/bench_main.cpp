#include "vugsim/experiment.hpp"
#include "vugsim/linalg.hpp"
#include "vugsim/multiscale.hpp"
#include "vugsim/scenario.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vugsim;

namespace {

const Setup& desk()
{
    static const Setup setup = build_setup(load_config(std::string(VUGSIM_SOURCE_DIR) + "/scenarios/desk_dirichlet.json"));
    return setup;
}

void BM_AssembleStiffness(benchmark::State& state)
{
    const Setup& s = desk();
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.problem.stiffness(s.initial));
    }
    state.counters["dofs"] = static_cast<double>(s.initial.size());
}
BENCHMARK(BM_AssembleStiffness)->Unit(benchmark::kMillisecond);

void BM_Snapshots(benchmark::State& state)
{
    const Setup& s = desk();
    const CoarseNeighborhood nb = neighborhood(*s.grid, s.grid->num_nodes() / 2);
    const LocalOperators ops = assemble_local(*s.mesh, s.problem.medium, nb);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_snapshots(nb, ops));
    }
}
BENCHMARK(BM_Snapshots)->Unit(benchmark::kMillisecond);

void BM_LocalSpectral(benchmark::State& state)
{
    const Setup& s = desk();
    const CoarseNeighborhood nb = neighborhood(*s.grid, s.grid->num_nodes() / 2);
    const LocalOperators ops = assemble_local(*s.mesh, s.problem.medium, nb);
    const SnapshotSpace snaps = solve_snapshots(nb, ops);
    for (auto _ : state) {
        benchmark::DoNotOptimize(local_spectral(nb, snaps, ops, 8));
    }
}
BENCHMARK(BM_LocalSpectral)->Unit(benchmark::kMillisecond);

void BM_Jacobi(benchmark::State& state)
{
    const auto n = static_cast<Index>(state.range(0));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix b(n, n);
    for (Index i = 0; i < n * n; ++i) {
        b.data()[i] = u(rng);
    }
    const DenseMatrix a = 0.5 * (b + b.transpose());
    for (auto _ : state) {
        benchmark::DoNotOptimize(sym_eig_jacobi(a));
    }
}
BENCHMARK(BM_Jacobi)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FineStep(benchmark::State& state)
{
    Setup s = desk();
    s.config.time.final_time = s.config.time.dt;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_fine(s));
    }
}
BENCHMARK(BM_FineStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
