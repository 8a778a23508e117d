#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "fairshare/dataset.hpp"

namespace fairshare {

struct RecommenderConfig {
    int latentDim = 16;
    int epochs = 30;
    double learningRate = 0.01;
    double regularization = 0.05;
    std::uint64_t seed = 0;
    /// A test prediction counts as a click iff |predicted - actual| is
    /// strictly below this threshold (rating units).
    double clickThreshold = 0.5;

    void validate() const;
};

/// Click counts produced by one train/predict pass. Maps only carry
/// users/items with at least one click; both always sum to totalClicks.
struct ClickReport {
    long long totalClicks = 0;
    std::map<UserId, long long> perUserClicks;
    std::map<ItemId, long long> perItemClicks;

    bool operator==(const ClickReport&) const = default;
};

/// Trains a biased matrix-factorization model on `train` with seeded SGD
/// (fixed record order per epoch) and counts clicks over `test`.
/// Deterministic for a fixed config. Throws EmptyTrainError.
ClickReport trainPredict(std::span<const RatingRecord> train,
                         std::span<const RatingRecord> test,
                         const RecommenderConfig& cfg);

/// Clicks obtained when both train and test are restricted to the given
/// coalition of users. Empty coalition is 0 by definition. The dataset
/// must carry a split.
long long coalitionValue(const RatingsDataset& ds, const std::set<UserId>& coalitionUsers,
                         const RecommenderConfig& cfg);

/// Process-wide count of trainPredict invocations. Always on; used by
/// run manifests and the operation-count checks.
std::uint64_t trainPredictCallCount();
void resetTrainPredictCallCount();

} // namespace fairshare
