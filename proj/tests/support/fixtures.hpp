#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairshare/dataset.hpp"
#include "fairshare/game.hpp"
#include "fairshare/recommender.hpp"

namespace fixtures {

/// Dense random game on n players with i.i.d. uniform [0,1) coalition
/// values and v(empty) = 0. Deterministic per seed.
fairshare::CoalitionGame randomGame(int n, std::uint64_t seed);

/// The worked two-player game: v({0}) = 12, v({1}) = 15, v({0,1}) = 28.
fairshare::CoalitionGame toyGame();

/// Additive game v(S) = |S|.
fairshare::CoalitionGame additiveGame(int n);

/// Fixed 20-record, 5-user, 8-item dataset used for the recommender
/// golden value. Hand-written, no randomness.
fairshare::RatingsDataset twentyRecordDataset();

/// Small 4-row dataset: two users, three items.
fairshare::RatingsDataset fourRowDataset();

/// Two-user dataset engineered so that coalition click values are
/// exactly (12, 15, 28) under engineeredConfig()/engineeredSplit():
/// predictions collapse to the train mean (learning rate ~0), every
/// test item is cold, and the ratings sit 0.25 from the relevant means.
fairshare::RatingsDataset engineeredToyDataset();
double engineeredTestFraction();
std::uint64_t engineeredSplitSeed();
fairshare::RecommenderConfig engineeredRecommenderConfig();

/// engineeredToyDataset() with the engineered split already applied.
fairshare::RatingsDataset engineeredSplitDataset();

/// Writes `contents` into a fresh per-test temp directory and returns
/// the file path.
std::filesystem::path writeTempFile(const std::string& name, const std::string& contents);

/// Fresh scratch directory under the system temp dir.
std::filesystem::path freshTempDir(const std::string& hint);

/// Absolute path to a committed data fixture (data/ directory).
std::filesystem::path dataFile(const std::string& name);

} // namespace fixtures
