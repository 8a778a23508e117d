#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fairshare {

using UserId = std::int64_t;
using ItemId = std::int64_t;

struct RatingRecord {
    UserId user = 0;
    ItemId item = 0;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;

    bool operator==(const RatingRecord&) const = default;
};

/// Describes how to parse a delimiter-separated ratings file and the
/// valid rating range. Defaults match the MovieLens ratings.csv layout
/// (userId,movieId,rating,timestamp).
struct DatasetDescriptor {
    double minRating = 0.5;
    double maxRating = 5.0;
    char delimiter = ',';
    enum class Header { Auto, Present, Absent };
    Header header = Header::Auto;
    int userColumn = 0;
    int itemColumn = 1;
    int ratingColumn = 2;
    int timestampColumn = 3; ///< -1 when the file has no timestamp column
};

/// Immutable ratings collection with contiguous user/item index maps and
/// an optional per-record train/test mask. Records are kept sorted by
/// (user, item) so downstream passes are order-independent of the input
/// file. Read-only after construction; safe to share across threads.
class RatingsDataset {
public:
    RatingsDataset() = default;
    RatingsDataset(std::vector<RatingRecord> records, DatasetDescriptor descriptor);

    const std::vector<RatingRecord>& records() const { return records_; }
    const DatasetDescriptor& descriptor() const { return descriptor_; }

    std::size_t userCount() const { return users_.size(); }
    std::size_t itemCount() const { return items_.size(); }

    /// Contiguous 0..N-1 index of a user id (ascending id order).
    int userIndexOf(UserId user) const;
    int itemIndexOf(ItemId item) const;
    UserId userAt(int index) const { return users_.at(static_cast<std::size_t>(index)); }
    ItemId itemAt(int index) const { return items_.at(static_cast<std::size_t>(index)); }
    const std::vector<UserId>& users() const { return users_; }
    const std::vector<ItemId>& items() const { return items_; }

    bool hasSplit() const { return hasSplit_; }
    std::uint64_t splitSeed() const { return splitSeed_; }
    double testFraction() const { return testFraction_; }
    const std::vector<bool>& trainMask() const { return trainMask_; }
    bool isTrain(std::size_t recordIndex) const { return !hasSplit_ || trainMask_[recordIndex]; }

    /// Users left out of the test side because they had fewer than two
    /// ratings; all their records stay in train.
    const std::set<UserId>& testOnlyExcluded() const { return testOnlyExcluded_; }

    std::vector<RatingRecord> trainRecords() const;
    std::vector<RatingRecord> testRecords() const;

    /// Canonical on-disk form: header row, records sorted by
    /// (userId, itemId), ratings printed with six decimals.
    void saveCanonical(const std::filesystem::path& path) const;

    bool operator==(const RatingsDataset& other) const {
        return records_ == other.records_ && trainMask_ == other.trainMask_ &&
               hasSplit_ == other.hasSplit_;
    }

private:
    friend RatingsDataset splitTrainTest(const RatingsDataset&, double, std::uint64_t);

    std::vector<RatingRecord> records_;
    DatasetDescriptor descriptor_;
    std::vector<UserId> users_; ///< sorted; position = contiguous index
    std::vector<ItemId> items_;
    std::map<UserId, int> userIndex_;
    std::map<ItemId, int> itemIndex_;
    std::vector<bool> trainMask_;
    std::set<UserId> testOnlyExcluded_;
    bool hasSplit_ = false;
    std::uint64_t splitSeed_ = 0;
    double testFraction_ = 0.0;
};

/// Items grouped into near-equal buckets by descending overall vote
/// count; ties broken by ascending item id.
struct PopularityTable {
    std::map<ItemId, long long> perItemVoteCount;
    std::vector<std::vector<ItemId>> orderedBuckets;

    int bucketOf(ItemId item) const;

private:
    friend PopularityTable popularity(const RatingsDataset&, int);
    std::map<ItemId, int> bucketIndex_;
};

/// Parses a ratings file. Throws ParseError (with the offending row
/// number), RangeError, or DuplicateError.
RatingsDataset loadRatings(const std::filesystem::path& path,
                           const DatasetDescriptor& descriptor = {});

/// Per-user stratified split: each user with >= 2 ratings contributes
/// round(testFraction * n) test records (clamped so both sides stay
/// nonempty); single-rating users are flagged testOnlyExcluded. Pure
/// function of (ds, testFraction, seed).
RatingsDataset splitTrainTest(const RatingsDataset& ds, double testFraction,
                              std::uint64_t seed);

/// Vote counts over all records (train + test) grouped into bucketCount
/// buckets. Throws BucketError if bucketCount is not in [1, itemCount].
PopularityTable popularity(const RatingsDataset& ds, int bucketCount);

} // namespace fairshare
