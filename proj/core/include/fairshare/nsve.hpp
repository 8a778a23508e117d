#pragma once

#include <cstdint>
#include <vector>

#include "fairshare/asve.hpp"
#include "fairshare/dataset.hpp"

namespace fairshare {

/// Radius-ball neighbourhoods in 2-D projection space. Lists are sorted
/// by UserId, exclude the owner, and are symmetric by construction.
struct NeighbourhoodIndex {
    double radius = 0.0;
    std::vector<UserId> users; ///< sorted; position = row in the lists below
    std::vector<std::vector<UserId>> neighbours;

    const std::vector<UserId>& neighboursOf(UserId user) const;
};

/// Whether a user's potential counts the new items offered to each
/// neighbour, or merely the neighbours themselves. NewItems is the
/// behaviour matching the worked "predictive potential of 2" example;
/// NeighbourCount reproduces the literal pseudocode increment.
enum class PotentialMode {
    NewItems,
    NeighbourCount,
};

struct PredictivePotential {
    std::vector<UserId> users; ///< sorted, parallel to rec/phi3
    std::vector<long long> rec;
    std::vector<double> phi3; ///< empty until scaleToClicks runs
    long long totalClicks = 0;
    bool starved = false; ///< true when every rec was zero and phi3 fell back to zeros
    PotentialMode mode = PotentialMode::NewItems;

    long long recOf(UserId user) const;
    double phi3Of(UserId user) const;
};

/// Brute-force Euclidean ball query with strict `dist < radius`.
/// Throws RangeError if radius is not positive.
NeighbourhoodIndex buildNeighbourhoods(const UserFeatureMatrix& ufm, double radius);

/// The given percentile (default 10th) of the all-pairs distance
/// distribution in projection space, with linear interpolation between
/// order statistics. Throws DegenerateError with fewer than two users
/// and RangeError for a percentile outside (0, 1].
double defaultRadius(const UserFeatureMatrix& ufm, double percentile = 0.10);

/// rec(u) = sum over neighbours w of |train items rated by u and not by
/// w|. Only train-side ratings participate.
PredictivePotential predictivePotential(const RatingsDataset& ds, const NeighbourhoodIndex& ni,
                                        PotentialMode mode = PotentialMode::NewItems);

/// phi3(u) = totalClicks * rec(u) / sum(rec). A run where every rec is
/// zero yields all-zero phi3 and sets `starved` instead of throwing.
PredictivePotential scaleToClicks(PredictivePotential pp, long long totalClicks);

} // namespace fairshare
