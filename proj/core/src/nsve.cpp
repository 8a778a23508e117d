#include "fairshare/nsve.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "fairshare/errors.hpp"

namespace fairshare {

namespace {

std::size_t rowOf(const std::vector<UserId>& users, UserId user, const char* what) {
    const auto it = std::lower_bound(users.begin(), users.end(), user);
    if (it == users.end() || *it != user) {
        throw RangeError(std::string(what) + ": unknown user id " + std::to_string(user));
    }
    return static_cast<std::size_t>(it - users.begin());
}

} // namespace

const std::vector<UserId>& NeighbourhoodIndex::neighboursOf(UserId user) const {
    return neighbours[rowOf(users, user, "neighboursOf")];
}

long long PredictivePotential::recOf(UserId user) const {
    return rec[rowOf(users, user, "recOf")];
}

double PredictivePotential::phi3Of(UserId user) const {
    const auto row = rowOf(users, user, "phi3Of");
    return row < phi3.size() ? phi3[row] : 0.0;
}

NeighbourhoodIndex buildNeighbourhoods(const UserFeatureMatrix& ufm, double radius) {
    if (!(radius > 0.0)) throw RangeError("neighbourhood radius must be positive");

    const auto n = ufm.projection.rows();
    NeighbourhoodIndex ni;
    ni.radius = radius;
    ni.users = ufm.users;
    ni.neighbours.resize(static_cast<std::size_t>(n));
    const double r2 = radius * radius;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if ((ufm.projection.row(i) - ufm.projection.row(j)).squaredNorm() < r2) {
                ni.neighbours[static_cast<std::size_t>(i)].push_back(ufm.users[static_cast<std::size_t>(j)]);
                ni.neighbours[static_cast<std::size_t>(j)].push_back(ufm.users[static_cast<std::size_t>(i)]);
            }
        }
    }
    // The double loop above pushes ids out of order for the j side; users
    // are sorted, so sorting each list restores the UserId convention.
    for (auto& list : ni.neighbours) std::sort(list.begin(), list.end());
    return ni;
}

double defaultRadius(const UserFeatureMatrix& ufm, double percentile) {
    const auto n = ufm.projection.rows();
    if (n < 2) throw DegenerateError("defaultRadius needs at least two users");
    if (!(percentile > 0.0) || percentile > 1.0) {
        throw RangeError("percentile must lie in (0, 1]");
    }

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            dists.push_back((ufm.projection.row(i) - ufm.projection.row(j)).norm());
        }
    }
    std::sort(dists.begin(), dists.end());

    // Linear interpolation between order statistics, the same convention
    // as numpy's default percentile.
    const double pos = percentile * static_cast<double>(dists.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, dists.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return dists[lo] + frac * (dists[hi] - dists[lo]);
}

PredictivePotential predictivePotential(const RatingsDataset& ds, const NeighbourhoodIndex& ni,
                                        PotentialMode mode) {
    PredictivePotential pp;
    pp.users = ni.users;
    pp.mode = mode;
    pp.rec.assign(ni.users.size(), 0);

    // Per-user train item sets, keyed by position in ni.users.
    std::vector<std::set<ItemId>> trainItems(ni.users.size());
    const auto& records = ds.records();
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (!ds.isTrain(r)) continue;
        const auto it = std::lower_bound(ni.users.begin(), ni.users.end(), records[r].user);
        if (it == ni.users.end() || *it != records[r].user) continue;
        trainItems[static_cast<std::size_t>(it - ni.users.begin())].insert(records[r].item);
    }

    for (std::size_t u = 0; u < ni.users.size(); ++u) {
        long long total = 0;
        for (UserId w : ni.neighbours[u]) {
            if (mode == PotentialMode::NeighbourCount) {
                total += 1;
                continue;
            }
            const auto& mine = trainItems[u];
            const auto& theirs = trainItems[rowOf(ni.users, w, "predictivePotential")];
            long long newItems = 0;
            for (ItemId item : mine) {
                if (!theirs.contains(item)) ++newItems;
            }
            total += newItems;
        }
        pp.rec[u] = total;
    }
    return pp;
}

PredictivePotential scaleToClicks(PredictivePotential pp, long long totalClicks) {
    if (totalClicks < 0) throw RangeError("total clicks must be nonnegative");
    pp.totalClicks = totalClicks;
    pp.phi3.assign(pp.users.size(), 0.0);

    long long sum = 0;
    for (long long r : pp.rec) sum += r;
    if (sum <= 0) {
        pp.starved = true;
        return pp;
    }
    pp.starved = false;
    for (std::size_t i = 0; i < pp.rec.size(); ++i) {
        pp.phi3[i] = static_cast<double>(totalClicks) * static_cast<double>(pp.rec[i]) /
                     static_cast<double>(sum);
    }
    return pp;
}

} // namespace fairshare
