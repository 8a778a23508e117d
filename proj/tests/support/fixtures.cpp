#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fixtures {

using namespace fairshare;

CoalitionGame randomGame(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::unordered_map<CoalitionMask, double> table;
    const CoalitionMask total = CoalitionMask{1} << n;
    for (CoalitionMask mask = 1; mask < total; ++mask) table[mask] = rng.nextDouble();

    std::vector<PlayerId> players(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) players[static_cast<std::size_t>(i)] = i;
    return tableGame(std::move(players), std::move(table));
}

CoalitionGame toyGame() {
    return tableGame({0, 1}, {{0b01, 12.0}, {0b10, 15.0}, {0b11, 28.0}});
}

CoalitionGame additiveGame(int n) {
    std::vector<PlayerId> players(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) players[static_cast<std::size_t>(i)] = i;
    return CoalitionGame(std::move(players), [](const std::vector<PlayerId>& coalition) {
        return static_cast<double>(coalition.size());
    });
}

RatingsDataset twentyRecordDataset() {
    std::vector<RatingRecord> records;
    auto add = [&records](UserId u, ItemId i, double r) {
        records.push_back({u, i, r, std::nullopt});
    };
    add(1, 1, 4.0); add(1, 2, 3.5); add(1, 3, 4.5); add(1, 4, 4.0);
    add(2, 1, 2.0); add(2, 2, 2.5); add(2, 5, 1.5); add(2, 6, 2.0);
    add(3, 2, 5.0); add(3, 3, 4.5); add(3, 6, 5.0); add(3, 7, 4.5);
    add(4, 1, 3.0); add(4, 4, 3.5); add(4, 5, 3.0); add(4, 8, 2.5);
    add(5, 3, 1.0); add(5, 5, 1.5); add(5, 7, 1.0); add(5, 8, 2.0);

    DatasetDescriptor descriptor;
    descriptor.timestampColumn = -1;
    return RatingsDataset(std::move(records), descriptor);
}

RatingsDataset fourRowDataset() {
    std::vector<RatingRecord> records = {
        {1, 10, 4.0, std::nullopt},
        {1, 20, 3.5, std::nullopt},
        {2, 10, 5.0, std::nullopt},
        {2, 30, 1.0, std::nullopt},
    };
    DatasetDescriptor descriptor;
    descriptor.timestampColumn = -1;
    return RatingsDataset(std::move(records), descriptor);
}

RatingsDataset engineeredToyDataset() {
    std::vector<RatingRecord> records;
    auto add = [&records](UserId u, ItemId i, double r) {
        records.push_back({u, i, r, std::nullopt});
    };
    // User 1: one anchor at 3.0 (train mean), twelve clickable test
    // records at 2.75 and one at 2.10 that only clicks under the joint
    // train mean of 2.5.
    add(1, 101, 3.0);
    for (ItemId i = 102; i <= 113; ++i) add(1, i, 2.75);
    add(1, 114, 2.10);
    // User 2: anchor at 2.0 plus fifteen test records at 2.25.
    add(2, 201, 2.0);
    for (ItemId i = 202; i <= 216; ++i) add(2, i, 2.25);

    DatasetDescriptor descriptor;
    descriptor.timestampColumn = -1;
    return RatingsDataset(std::move(records), descriptor);
}

double engineeredTestFraction() { return 0.93; }

std::uint64_t engineeredSplitSeed() {
    // First seed whose per-user draw leaves exactly the two anchor
    // records (items 101 and 201) on the train side. The search is
    // deterministic, so this always lands on the same seed.
    static const std::uint64_t found = [] {
        const RatingsDataset ds = engineeredToyDataset();
        for (std::uint64_t seed = 0; seed < 200000; ++seed) {
            const RatingsDataset split = splitTrainTest(ds, engineeredTestFraction(), seed);
            bool ok = true;
            const auto& records = split.records();
            for (std::size_t r = 0; r < records.size(); ++r) {
                const bool isAnchor = records[r].item == 101 || records[r].item == 201;
                if (split.trainMask()[r] != isAnchor) {
                    ok = false;
                    break;
                }
            }
            if (ok) return seed;
        }
        throw std::runtime_error("no engineered split seed found");
    }();
    return found;
}

RecommenderConfig engineeredRecommenderConfig() {
    RecommenderConfig cfg;
    cfg.latentDim = 4;
    cfg.epochs = 5;
    cfg.learningRate = 1e-9; // collapses predictions onto the train mean
    cfg.regularization = 0.05;
    cfg.seed = 0;
    cfg.clickThreshold = 0.5;
    return cfg;
}

RatingsDataset engineeredSplitDataset() {
    return splitTrainTest(engineeredToyDataset(), engineeredTestFraction(), engineeredSplitSeed());
}

std::filesystem::path freshTempDir(const std::string& hint) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() / "fairshare-tests" /
                     (hint + "-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path writeTempFile(const std::string& name, const std::string& contents) {
    const auto path = freshTempDir("file") / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write fixture file " + path.string());
    out << contents;
    return path;
}

std::filesystem::path dataFile(const std::string& name) {
    return std::filesystem::path(FAIRSHARE_DATA_DIR) / name;
}

} // namespace fixtures
