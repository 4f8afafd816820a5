// Serial against OpenMP for the two parallel kernels: agent pool updates and run batches.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/experiment.hpp"
#include "rmcnoc/policy.hpp"

namespace {

using namespace rmcnoc;

std::vector<Experience> random_transitions(std::size_t n, int inputs, int actions, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Experience> out(n);
    for (Experience& e : out) {
        for (int i = 0; i < inputs; ++i) {
            e.s.push_back(u(rng));
            e.s_next.push_back(u(rng));
        }
        e.a = static_cast<int>(rng() % static_cast<std::uint64_t>(actions));
        e.r = -u(rng);
    }
    return out;
}

void pool_update(benchmark::State& state, Execution exec) {
    const std::size_t agents = static_cast<std::size_t>(state.range(0));
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < agents; ++i) keys.push_back("a" + std::to_string(i));
    AgentConfig cfg;
    AgentPool pool(keys, RacePolicy::layer_sizes(4), cfg);
    std::mt19937_64 rng(7);
    for (auto _ : state) {
        state.PauseTiming();
        auto batch = random_transitions(agents, kRaceInputs, action_count(4), rng);
        state.ResumeTiming();
        pool.update(batch, exec);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(agents));
}

void batch_runs(benchmark::State& state, Execution exec) {
    std::vector<RunRequest> reqs;
    for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(state.range(0)); ++seed) {
        ExperimentConfig c;
        c.mesh_width = c.mesh_height = 4;
        c.total_cycles = 5'000;
        c.warmup_cycles = 500;
        c.policy = PolicyKind::Qore;
        c.workload.injection_rate = 0.2;
        c.seed = seed;
        reqs.push_back({c, nullptr});
    }
    for (auto _ : state) benchmark::DoNotOptimize(run_batch(reqs, exec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(pool_update, serial, Execution::Serial)->Arg(112);
BENCHMARK_CAPTURE(pool_update, parallel, Execution::Parallel)->Arg(112);
BENCHMARK_CAPTURE(batch_runs, serial, Execution::Serial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(batch_runs, parallel, Execution::Parallel)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
