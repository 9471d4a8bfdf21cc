// Serial vs OpenMP kernels: planning, per-slice completion, multi-run harness.

#include "gim/envs.hpp"
#include "gim/harness.hpp"
#include "gim/matcomp.hpp"
#include "gim/mdp.hpp"
#include "gim/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

gim::Execution exec_of(const benchmark::State& state) {
    return state.range(1) != 0 ? gim::Execution::parallel : gim::Execution::serial;
}

void BM_ValueIteration(benchmark::State& state) {
    gim::SyntheticSpec spec;
    spec.num_states = static_cast<int>(state.range(0));
    spec.num_actions = 10;
    spec.target_rank = 2;
    spec.seed = 3;
    spec.horizon = 50;
    const auto mdp = gim::gen_synthetic(spec).mdp;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gim::value_iteration(mdp, exec_of(state)).value);
    }
}
BENCHMARK(BM_ValueIteration)->ArgsProduct({{20, 100, 200}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_CompleteSlices(benchmark::State& state) {
    gim::SyntheticSpec spec;
    spec.num_states = static_cast<int>(state.range(0));
    spec.num_actions = 10;
    spec.target_rank = 2;
    spec.seed = 5;
    const auto mdp = gim::gen_synthetic(spec).mdp;
    const auto dm = gim::dynamic_matrices(mdp);
    gim::RngStream rng(11);
    Eigen::MatrixXi mask(spec.num_states, spec.num_actions);
    for (int i = 0; i < mask.rows(); ++i) {
        for (int j = 0; j < mask.cols(); ++j) {
            mask(i, j) = rng.uniform() < 0.8 ? 1 : 0;
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gim::complete_slices(dm.transition_slices, mask, 2, exec_of(state)));
    }
}
BENCHMARK(BM_CompleteSlices)->ArgsProduct({{20, 60}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_HarnessRuns(benchmark::State& state) {
    auto config = gim::parse_config({{"task", {{"name", "riverswim"}}},
                                     {"agent", {{"name", "rmax"}, {"m", 10}}},
                                     {"episodes", static_cast<int>(state.range(0))},
                                     {"runs", 8}});
    for (auto _ : state) {
        benchmark::DoNotOptimize(gim::run_all(config, exec_of(state)));
    }
}
BENCHMARK(BM_HarnessRuns)->ArgsProduct({{200}, {0, 1}})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
