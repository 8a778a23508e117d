#include <cstdint>
#include <unordered_map>
#include <vector>

#include <benchmark/benchmark.h>

#include "fairshare/asve.hpp"
#include "fairshare/dataset.hpp"
#include "fairshare/game.hpp"
#include "fairshare/nsve.hpp"
#include "fairshare/recommender.hpp"
#include "fairshare/rng.hpp"
#include "fairshare/synth.hpp"

using namespace fairshare;

namespace {

CoalitionGame randomGame(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::unordered_map<CoalitionMask, double> table;
    const CoalitionMask total = CoalitionMask{1} << n;
    for (CoalitionMask mask = 1; mask < total; ++mask) table[mask] = rng.nextDouble();
    std::vector<PlayerId> players(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) players[static_cast<std::size_t>(i)] = i;
    return tableGame(std::move(players), std::move(table));
}

RatingsDataset synthSplit(int users, int items, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.userCount = users;
    cfg.itemCount = items;
    cfg.seed = seed;
    return splitTrainTest(generateSynthetic(cfg), 0.2, seed);
}

void shapleyPermutation(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const CoalitionGame game = randomGame(n, 42);
    game.precomputeAll();
    for (auto _ : state) {
        benchmark::DoNotOptimize(shapleyExactPermutation(game));
    }
}

void shapleySubset(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const CoalitionGame game = randomGame(n, 42);
    game.precomputeAll();
    for (auto _ : state) {
        benchmark::DoNotOptimize(shapleyExactSubset(game));
    }
}

void shapleyMonteCarloSamples(benchmark::State& state) {
    const auto samples = static_cast<std::uint64_t>(state.range(0));
    const CoalitionGame game = randomGame(10, 42);
    game.precomputeAll();
    for (auto _ : state) {
        benchmark::DoNotOptimize(shapleyMonteCarlo(game, samples, 7));
    }
}

void mfTraining(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const RatingsDataset split = synthSplit(users, 40, 3);
    const auto train = split.trainRecords();
    const auto test = split.testRecords();
    RecommenderConfig cfg;
    cfg.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(trainPredict(train, test, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(train.size()) *
                            cfg.epochs);
}

void pcaProjection(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const RatingsDataset split = synthSplit(users, 40, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(projectUsers(split));
    }
}

void kmeansClustering(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const RatingsDataset split = synthSplit(users, 40, 5);
    const UserFeatureMatrix ufm = projectUsers(split);
    for (auto _ : state) {
        benchmark::DoNotOptimize(clusterUsers(ufm, 6, 11));
    }
}

void neighbourhoodBuild(benchmark::State& state) {
    const int users = static_cast<int>(state.range(0));
    const RatingsDataset split = synthSplit(users, 40, 5);
    const UserFeatureMatrix ufm = projectUsers(split);
    const double radius = defaultRadius(ufm, 0.10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(buildNeighbourhoods(ufm, radius));
    }
}

BENCHMARK(shapleyPermutation)->DenseRange(2, 9);
BENCHMARK(shapleySubset)->DenseRange(2, 16, 2);
BENCHMARK(shapleyMonteCarloSamples)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(mfTraining)->Arg(50)->Arg(200)->Arg(400);
BENCHMARK(pcaProjection)->Arg(50)->Arg(200)->Arg(400);
BENCHMARK(kmeansClustering)->Arg(50)->Arg(200)->Arg(400);
BENCHMARK(neighbourhoodBuild)->Arg(50)->Arg(200)->Arg(400);

} // namespace

BENCHMARK_MAIN();
