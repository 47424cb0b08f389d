#include "starclab/behavior.hpp"
#include "starclab/oracles.hpp"
#include "starclab/starc.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace starclab;

void BM_Canonicalize(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = random_mdp(1, n, 4, 1.0);
    const StarcMetric metric(mdp);
    const RewardFunction r = random_reward(2, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(metric.canonicalize(r));
}
BENCHMARK(BM_Canonicalize)->Arg(8)->Arg(32)->Arg(64);

void BM_Distance(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = random_mdp(1, n, 4, 1.0);
    const StarcMetric metric(mdp);
    const RewardFunction r1 = random_reward(2, n, 4);
    const RewardFunction r2 = random_reward(3, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(metric.distance(r1, r2));
}
BENCHMARK(BM_Distance)->Arg(8)->Arg(32)->Arg(64);

// Includes projector construction.
void BM_DistanceCold(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = random_mdp(1, n, 4, 1.0);
    const RewardFunction r1 = random_reward(2, n, 4);
    const RewardFunction r2 = random_reward(3, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(starc_distance(mdp, r1, r2));
}
BENCHMARK(BM_DistanceCold)->Arg(8)->Arg(32);

void BM_ValueIteration(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = random_mdp(1, n, 4, 1.0);
    const RewardFunction r = random_reward(2, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(optimal_values(mdp, r));
}
BENCHMARK(BM_ValueIteration)->Arg(8)->Arg(32)->Arg(64);

void BM_SoftValues(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = random_mdp(1, n, 4, 1.0);
    const RewardFunction r = random_reward(2, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(soft_values(mdp, r, 1.0));
}
BENCHMARK(BM_SoftValues)->Arg(8)->Arg(32);

void BM_SameOrder(benchmark::State& state) {
    const TabularMdp mdp = random_mdp(1, 4, 3, 1.0);
    const RewardFunction r1 = random_reward(2, 4, 3);
    const RewardFunction r2 = r1 * 2.0;
    for (auto _ : state) benchmark::DoNotOptimize(same_order_report(mdp, r1, r2));
}
BENCHMARK(BM_SameOrder);

}  // namespace
BENCHMARK_MAIN();
