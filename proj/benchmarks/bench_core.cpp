#include <benchmark/benchmark.h>

#include "ranbn/inference.hpp"
#include "ranbn/search.hpp"
#include "ranbn/sim.hpp"

using namespace ranbn;

namespace {

GroundTruthSpec world_of(std::size_t nodes) {
    RandomWorldParams p;
    p.nodes = nodes;
    p.config_nodes = 2;
    return random_world(p, 11);
}

void BM_HillClimb(benchmark::State& state) {
    const auto world = world_of(static_cast<std::size_t>(state.range(0))).world;
    const auto data = forward_sample_explore(world, full_grid(world), 10000, 1);
    for (auto _ : state) benchmark::DoNotOptimize(hill_climb(data, {}, {}, {}).trace.final_score);
}
BENCHMARK(BM_HillClimb)->Arg(10)->Arg(19)->Arg(22)->Unit(benchmark::kMillisecond);

void BM_HillClimbDefaultWorldConstrained(benchmark::State& state) {
    const auto world = default_world().world;
    const auto data = forward_sample(world, {}, 10000, 1);
    const auto delta = default_partial_constraints();
    for (auto _ : state) benchmark::DoNotOptimize(hill_climb(data, delta, {}, {}).trace.final_score);
}
BENCHMARK(BM_HillClimbDefaultWorldConstrained)->Unit(benchmark::kMillisecond);

void BM_Eliminate(benchmark::State& state) {
    const auto world = world_of(static_cast<std::size_t>(state.range(0))).world;
    const auto& kpi = world.specs().back().name;
    const Evidence ev{{world.specs()[0].name, 0}};
    for (auto _ : state) benchmark::DoNotOptimize(eliminate(world, kpi, ev).probabilities);
}
BENCHMARK(BM_Eliminate)->Arg(10)->Arg(19)->Arg(22);

void BM_Recommend(benchmark::State& state) {
    const auto world = default_world().world;
    const auto omega = full_grid(world);
    const auto util = default_utility(world);
    for (auto _ : state) benchmark::DoNotOptimize(recommend(world, omega, {{"RSRP", 0}}, util).best.score);
}
BENCHMARK(BM_Recommend)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
