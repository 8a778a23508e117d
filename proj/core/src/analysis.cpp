#include "fairshare/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fairshare/errors.hpp"

namespace fairshare {

namespace {

bool containsSorted(const std::vector<UserId>& v, UserId user) {
    return std::binary_search(v.begin(), v.end(), user);
}

/// 1-based ranks with ties receiving the average of their positions.
std::vector<double> averagedRanks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] < v[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

const char* userClassName(UserClass c) {
    switch (c) {
    case UserClass::Best: return "best";
    case UserClass::Average: return "average";
    case UserClass::Worst: return "worst";
    }
    return "unknown";
}

UserClass UserClassPartition::classOf(UserId user) const {
    if (containsSorted(best, user)) return UserClass::Best;
    if (containsSorted(average, user)) return UserClass::Average;
    if (containsSorted(worst, user)) return UserClass::Worst;
    throw RangeError("user " + std::to_string(user) + " is not in the partition");
}

UserClassPartition classify(const std::vector<UserId>& users, const std::vector<double>& values) {
    if (users.size() != values.size()) throw Error("classify: users and values differ in length");
    const std::size_t n = users.size();
    if (n < 3) throw TooFewUsersError("classify needs at least 3 valued users, got " + std::to_string(n));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return users[a] < users[b];
    });

    const std::size_t base = n / 3;
    const std::size_t rem = n % 3;
    const std::size_t bestSize = base + (rem > 0 ? 1 : 0);
    const std::size_t averageSize = base + (rem > 1 ? 1 : 0);

    UserClassPartition part;
    for (std::size_t i = 0; i < n; ++i) {
        const UserId u = users[order[i]];
        if (i < bestSize) {
            part.best.push_back(u);
        } else if (i < bestSize + averageSize) {
            part.average.push_back(u);
        } else {
            part.worst.push_back(u);
        }
    }
    std::sort(part.best.begin(), part.best.end());
    std::sort(part.average.begin(), part.average.end());
    std::sort(part.worst.begin(), part.worst.end());
    return part;
}

UserClassPartition classify(const UserValueVector& values) {
    return classify(values.users, values.normalized);
}

UserClassPartition classify(const PredictivePotential& pp) {
    if (!pp.phi3.empty()) return classify(pp.users, pp.phi3);
    std::vector<double> rec(pp.rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) rec[i] = static_cast<double>(pp.rec[i]);
    return classify(pp.users, rec);
}

BucketReport bucketVoteDistribution(const RatingsDataset& ds, const PopularityTable& pt,
                                    const UserClassPartition& part) {
    const std::size_t buckets = pt.orderedBuckets.size();
    constexpr int kClasses = 3;
    std::vector<long long> counts(buckets * kClasses, 0);
    std::vector<double> ratingSums(buckets * kClasses, 0.0);

    for (const auto& r : ds.records()) {
        int cls;
        if (containsSorted(part.best, r.user)) {
            cls = 0;
        } else if (containsSorted(part.average, r.user)) {
            cls = 1;
        } else if (containsSorted(part.worst, r.user)) {
            cls = 2;
        } else {
            continue;
        }
        const auto slot = static_cast<std::size_t>(pt.bucketOf(r.item)) * kClasses +
                          static_cast<std::size_t>(cls);
        counts[slot] += 1;
        ratingSums[slot] += r.rating;
    }

    BucketReport report;
    static constexpr UserClass kOrder[] = {UserClass::Best, UserClass::Average, UserClass::Worst};
    for (std::size_t b = 0; b < buckets; ++b) {
        for (int c = 0; c < kClasses; ++c) {
            BucketReportRow row;
            row.bucket = static_cast<int>(b);
            row.userClass = kOrder[c];
            const auto slot = b * kClasses + static_cast<std::size_t>(c);
            row.voteCount = counts[slot];
            if (counts[slot] > 0) row.meanRating = ratingSums[slot] / static_cast<double>(counts[slot]);
            report.rows.push_back(row);
        }
    }
    return report;
}

BucketReport bucketClickDistribution(const ClickReport& report, const PopularityTable& pt) {
    const std::size_t buckets = pt.orderedBuckets.size();
    std::vector<long long> clicks(buckets, 0);
    for (const auto& [item, count] : report.perItemClicks) {
        clicks[static_cast<std::size_t>(pt.bucketOf(item))] += count;
    }

    BucketReport out;
    for (std::size_t b = 0; b < buckets; ++b) {
        BucketReportRow row;
        row.bucket = static_cast<int>(b);
        row.clickCount = clicks[b];
        out.rows.push_back(row);
    }
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("pearson: length mismatch");
    const std::size_t n = a.size();
    if (n == 0) return 0.0;

    long double meanA = 0.0L;
    long double meanB = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        meanA += a[i];
        meanB += b[i];
    }
    meanA /= static_cast<long double>(n);
    meanB /= static_cast<long double>(n);

    long double cross = 0.0L;
    long double varA = 0.0L;
    long double varB = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double da = a[i] - meanA;
        const long double db = b[i] - meanB;
        cross += da * db;
        varA += da * da;
        varB += db * db;
    }
    if (varA <= 0.0L || varB <= 0.0L) return 0.0;
    return static_cast<double>(cross / std::sqrt(varA * varB));
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw Error("spearman: length mismatch");
    return pearson(averagedRanks(a), averagedRanks(b));
}

DistributionComparison compareDistributions(const UserValueVector& asve,
                                            const PredictivePotential& nsve) {
    DistributionComparison cmp;
    std::set_intersection(asve.users.begin(), asve.users.end(), nsve.users.begin(),
                          nsve.users.end(), std::back_inserter(cmp.users));
    if (cmp.users.empty()) {
        throw DisjointUsersError("the ASVE and NSVE value vectors share no users");
    }

    std::vector<double> a;
    std::vector<double> b;
    a.reserve(cmp.users.size());
    b.reserve(cmp.users.size());
    for (UserId u : cmp.users) {
        const auto ai = std::lower_bound(asve.users.begin(), asve.users.end(), u) -
                        asve.users.begin();
        a.push_back(asve.normalized[static_cast<std::size_t>(ai)]);
        b.push_back(nsve.phi3.empty() ? static_cast<double>(nsve.recOf(u)) : nsve.phi3Of(u));
    }

    cmp.correlationDistance = 1.0 - pearson(a, b);
    cmp.rankCorrelation = spearman(a, b);

    // Empirical quantile map: each NSVE value's (tie-averaged) rank picks
    // the same quantile position inside the sorted ASVE values, with
    // linear interpolation between order statistics.
    const std::size_t n = cmp.users.size();
    std::vector<double> sortedA = a;
    std::sort(sortedA.begin(), sortedA.end());
    const std::vector<double> ranksB = averagedRanks(b);
    cmp.mappedNsve.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = ranksB[i] - 1.0;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        cmp.mappedNsve[i] = sortedA[lo] + frac * (sortedA[hi] - sortedA[lo]);
    }
    return cmp;
}

} // namespace fairshare
