#pragma once

#include <cstdint>

#include "fairshare/dataset.hpp"

namespace fairshare {

/// Knobs for the popularity-skewed synthetic ratings generator. Users
/// fall into three archetypes:
///   - mainstream: many votes, strongly biased toward popular items,
///     ratings that track item quality closely (easy to predict);
///   - average: moderate vote counts and bias, mild noise;
///   - eclectic: few votes, biased toward the tail, ratings only loosely
///     tied to item quality (hard to predict).
/// Item popularity follows a Zipf-like rank weighting, so vote counts
/// fall off quickly from the head of the catalog.
struct SynthConfig {
    int userCount = 50;
    int itemCount = 40;
    std::uint64_t seed = 0;
    double mainstreamShare = 0.4;
    double averageShare = 0.3; ///< remainder is eclectic
    double mainstreamVoteFraction = 0.6; ///< of itemCount, per user
    double averageVoteFraction = 0.35;
    double eclecticVoteFraction = 0.15;
    int minVotesPerUser = 3;

    void validate() const;
};

/// Deterministic function of the config; ratings land on the half-point
/// grid within [0.5, 5.0]. User ids are 1..userCount, item ids are
/// 1..itemCount in descending intended popularity.
RatingsDataset generateSynthetic(const SynthConfig& cfg);

} // namespace fairshare
