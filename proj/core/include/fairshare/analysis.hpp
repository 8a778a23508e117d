#pragma once

#include <optional>
#include <vector>

#include "fairshare/asve.hpp"
#include "fairshare/dataset.hpp"
#include "fairshare/nsve.hpp"
#include "fairshare/recommender.hpp"

namespace fairshare {

enum class UserClass { Best, Average, Worst };

const char* userClassName(UserClass c);

/// Valued users split into descending-value tertiles. Class membership
/// lists are sorted by UserId.
struct UserClassPartition {
    std::vector<UserId> best;
    std::vector<UserId> average;
    std::vector<UserId> worst;

    /// Throws RangeError for a user absent from all three classes.
    UserClass classOf(UserId user) const;
    std::size_t size() const { return best.size() + average.size() + worst.size(); }
};

struct BucketReportRow {
    int bucket = 0;
    std::optional<UserClass> userClass; ///< empty on class-agnostic rows
    long long voteCount = 0;
    std::optional<double> meanRating; ///< empty when voteCount is zero
    long long clickCount = 0;
};

struct BucketReport {
    std::vector<BucketReportRow> rows;
};

struct DistributionComparison {
    double correlationDistance = 0.0; ///< 1 - Pearson
    double rankCorrelation = 0.0;     ///< Spearman, ties averaged
    std::vector<UserId> users;        ///< sorted users valued by both sides
    std::vector<double> mappedNsve;   ///< NSVE values quantile-mapped onto the ASVE distribution
};

/// Tertiles by value, descending; sizes differ by at most one with the
/// remainder going to the better classes; ties broken by ascending
/// UserId. Throws TooFewUsersError below three users.
UserClassPartition classify(const std::vector<UserId>& users, const std::vector<double>& values);
UserClassPartition classify(const UserValueVector& values);
UserClassPartition classify(const PredictivePotential& pp);

/// One row per (bucket, class) in bucket order: vote count and mean
/// rating over all records. Records from users outside the partition
/// are ignored.
BucketReport bucketVoteDistribution(const RatingsDataset& ds, const PopularityTable& pt,
                                    const UserClassPartition& part);

/// One row per bucket: clicks generated by that bucket's items.
BucketReport bucketClickDistribution(const ClickReport& report, const PopularityTable& pt);

/// Agreement between the two value vectors over their common users,
/// plus the rank-preserving empirical quantile map sending NSVE values
/// onto the ASVE distribution. Throws DisjointUsersError when no user
/// is valued by both.
DistributionComparison compareDistributions(const UserValueVector& asve,
                                            const PredictivePotential& nsve);

/// Pearson correlation; defined as 0 when either input has no variance.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman rank correlation with averaged ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

} // namespace fairshare
