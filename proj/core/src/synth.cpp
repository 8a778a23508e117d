#include "fairshare/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fairshare {

namespace {

enum class Archetype { Mainstream, Average, Eclectic };

double snapToGrid(double rating) {
    const double snapped = std::round(rating * 2.0) / 2.0;
    return std::clamp(snapped, 0.5, 5.0);
}

/// Intended quality falls from ~4.8 at the head of the catalog to ~1.6
/// at the tail; the sublinear exponent keeps the head flat enough that
/// several buckets of items score well.
double itemQuality(int rank, int itemCount) {
    const double t = itemCount > 1 ? static_cast<double>(rank) / static_cast<double>(itemCount - 1)
                                   : 0.0;
    return 4.8 - 3.2 * std::pow(t, 0.7);
}

/// Weighted sampling without replacement; cost is quadratic in the draw
/// count, which is fine at fixture scale.
std::vector<int> sampleWithoutReplacement(std::vector<double> weights, int draws, Rng& rng) {
    std::vector<int> indices(weights.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(draws));
    for (int d = 0; d < draws && !indices.empty(); ++d) {
        double total = 0.0;
        for (double w : weights) total += w;
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double r = rng.nextDouble() * total;
            double cumulative = 0.0;
            chosen = weights.size() - 1;
            for (std::size_t i = 0; i < weights.size(); ++i) {
                cumulative += weights[i];
                if (cumulative >= r) {
                    chosen = i;
                    break;
                }
            }
        }
        picked.push_back(indices[chosen]);
        indices.erase(indices.begin() + static_cast<std::ptrdiff_t>(chosen));
        weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

} // namespace

void SynthConfig::validate() const {
    if (userCount < 1) throw RangeError("userCount must be positive");
    if (itemCount < 2) throw RangeError("itemCount must be at least 2");
    if (mainstreamShare < 0.0 || averageShare < 0.0 || mainstreamShare + averageShare > 1.0) {
        throw RangeError("archetype shares must be nonnegative and sum to at most 1");
    }
    if (minVotesPerUser < 1 || minVotesPerUser > itemCount) {
        throw RangeError("minVotesPerUser must lie in [1, itemCount]");
    }
}

RatingsDataset generateSynthetic(const SynthConfig& cfg) {
    cfg.validate();

    const int mainstreamCount = static_cast<int>(std::llround(cfg.mainstreamShare * cfg.userCount));
    const int averageCount = static_cast<int>(std::llround(cfg.averageShare * cfg.userCount));

    std::vector<RatingRecord> records;
    for (int u = 0; u < cfg.userCount; ++u) {
        Archetype archetype;
        if (u < mainstreamCount) {
            archetype = Archetype::Mainstream;
        } else if (u < mainstreamCount + averageCount) {
            archetype = Archetype::Average;
        } else {
            archetype = Archetype::Eclectic;
        }

        // One stream per user keeps the dataset stable under reordering
        // and lets single users be regenerated in isolation.
        Rng rng(Rng::deriveStream(cfg.seed, static_cast<std::uint64_t>(u) + 1));

        double voteFraction;
        double headBias; ///< exponent on 1/(rank+1); higher = more head-heavy
        double noise;
        switch (archetype) {
        case Archetype::Mainstream:
            voteFraction = cfg.mainstreamVoteFraction;
            headBias = 1.4;
            noise = 0.25;
            break;
        case Archetype::Average:
            voteFraction = cfg.averageVoteFraction;
            headBias = 0.7;
            noise = 0.5;
            break;
        case Archetype::Eclectic:
            voteFraction = cfg.eclecticVoteFraction;
            headBias = -0.6; // tail-heavy
            noise = 0.8;
            break;
        }

        const int votes = std::max(
            cfg.minVotesPerUser,
            static_cast<int>(std::llround(voteFraction * cfg.itemCount)));
        std::vector<double> weights(static_cast<std::size_t>(cfg.itemCount));
        for (int i = 0; i < cfg.itemCount; ++i) {
            weights[static_cast<std::size_t>(i)] = std::pow(1.0 / static_cast<double>(i + 1), headBias);
        }
        const std::vector<int> items = sampleWithoutReplacement(std::move(weights),
                                                                std::min(votes, cfg.itemCount), rng);

        for (int rank : items) {
            const double quality = itemQuality(rank, cfg.itemCount);
            const double rating = quality + noise * rng.nextGaussian();
            RatingRecord record;
            record.user = u + 1;
            record.item = rank + 1;
            record.rating = snapToGrid(rating);
            records.push_back(record);
        }
    }

    DatasetDescriptor descriptor;
    descriptor.timestampColumn = -1;
    return RatingsDataset(std::move(records), descriptor);
}

} // namespace fairshare
