#include <benchmark/benchmark.h>

#include "wncs/forwarding.hpp"
#include "wncs/model.hpp"
#include "wncs/rng.hpp"

namespace {

// Complete digraph with reproducible loss probabilities in [0.1, 0.9].
wncs::NetworkTopology complete_topology(int nodes) {
  wncs::NetworkTopology t;
  t.node_count = nodes;
  t.slot_ms = 10.0;
  t.source = 0;
  wncs::RandomStream draws(42, nodes, wncs::StreamRole::kLinkDraws);
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      if (i == j) continue;
      t.links.push_back({i, j, 0.1 + 0.8 * draws.uniform()});
    }
  }
  wncs::validate(t);
  return t;
}

void bench_dp_nodes(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const wncs::NetworkTopology topology = complete_topology(nodes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::solve_dp(topology, 40, 0.01));
  }
  state.SetComplexityN(nodes);
}

void bench_dp_deadline(benchmark::State& state) {
  const int deadline = static_cast<int>(state.range(0));
  const wncs::NetworkTopology topology = complete_topology(20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::solve_dp(topology, deadline, 0.01));
  }
  state.SetComplexityN(deadline);
}

void bench_constrained(benchmark::State& state) {
  const wncs::NetworkTopology topology = complete_topology(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(wncs::solve_constrained(topology, 0, 40, 3.0));
  }
}

}  // namespace

BENCHMARK(bench_dp_nodes)->RangeMultiplier(2)->Range(8, 64)->Complexity(benchmark::oNSquared);
BENCHMARK(bench_dp_deadline)->RangeMultiplier(2)->Range(8, 128)->Complexity(benchmark::oN);
BENCHMARK(bench_constrained)->Arg(16)->Arg(32);

BENCHMARK_MAIN();
