#include "fairshare/asve.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <set>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fairshare {

namespace {

// Relative eigenvalue threshold below which a principal axis is treated
// as rank-deficient.
constexpr double kRankTol = 1e-10;

void applySignConvention(Eigen::VectorXd& axis) {
    int argmax = 0;
    double best = -1.0;
    for (int i = 0; i < axis.size(); ++i) {
        const double mag = std::abs(axis[i]);
        if (mag > best) {
            best = mag;
            argmax = i;
        }
    }
    if (axis.size() > 0 && axis[argmax] < 0.0) axis = -axis;
}

struct EigenPair {
    double value;
    Eigen::VectorXd vector; ///< in item space, unit norm
};

// Top-2 eigenpairs of the covariance of the mean-centered matrix. When
// the feature dimension exceeds the sample count the N x N Gram matrix
// is decomposed instead and eigenvectors are mapped back, which is
// algebraically equivalent for the nonzero spectrum.
std::pair<EigenPair, EigenPair> topTwoPrincipal(const Eigen::MatrixXd& centered) {
    const auto n = centered.rows();
    const auto d = centered.cols();
    const double denom = static_cast<double>(n - 1);

    if (d <= n) {
        Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
        const auto& vals = solver.eigenvalues(); // ascending
        const auto& vecs = solver.eigenvectors();
        EigenPair first{vals[d - 1], vecs.col(d - 1)};
        EigenPair second{d >= 2 ? vals[d - 2] : 0.0,
                         d >= 2 ? Eigen::VectorXd(vecs.col(d - 2)) : Eigen::VectorXd::Zero(d)};
        return {first, second};
    }

    Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const auto& vals = solver.eigenvalues();
    auto lift = [&](int col) {
        EigenPair pair{vals[col], Eigen::VectorXd(centered.transpose() * solver.eigenvectors().col(col))};
        const double norm = pair.vector.norm();
        if (norm > 0.0) {
            pair.vector /= norm;
        } else {
            pair.vector.setZero();
            pair.value = 0.0;
        }
        return pair;
    };
    return {lift(static_cast<int>(n) - 1), n >= 2 ? lift(static_cast<int>(n) - 2)
                                                  : EigenPair{0.0, Eigen::VectorXd::Zero(d)}};
}

std::vector<int> nearestLabels(const Eigen::MatrixX2d& points, const Eigen::MatrixX2d& centroids) {
    std::vector<int> labels(static_cast<std::size_t>(points.rows()), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bestCluster = 0;
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d2 = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d2 < best) {
                best = d2;
                bestCluster = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = bestCluster;
    }
    return labels;
}

double inertiaOf(const Eigen::MatrixX2d& points, const Eigen::MatrixX2d& centroids,
                 const std::vector<int>& labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

Eigen::MatrixX2d kmeansPlusPlusInit(const Eigen::MatrixX2d& points, int k, Rng& rng) {
    const auto n = points.rows();
    Eigen::MatrixX2d centroids(k, 2);
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);

    const auto firstIdx = static_cast<Eigen::Index>(rng.nextBelow(static_cast<std::uint64_t>(n)));
    centroids.row(0) = points.row(firstIdx);
    chosen[static_cast<std::size_t>(firstIdx)] = true;

    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double r = rng.nextDouble() * total;
            double cumulative = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cumulative += d2[i];
                if (cumulative >= r && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) { // numeric edge: fall back to the last positive-mass point
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        if (pick < 0) {
            // All remaining mass is zero (duplicate points); take the first
            // unchosen index to keep the fit deterministic.
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) pick = 0;
        }
        centroids.row(c) = points.row(pick);
        chosen[static_cast<std::size_t>(pick)] = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
        }
    }
    return centroids;
}

struct KMeansFit {
    Eigen::MatrixX2d centroids;
    std::vector<int> labels;
    int iterations = 0;
    double inertia = 0.0;
};

KMeansFit minibatchKMeans(const Eigen::MatrixX2d& points, int k, std::uint64_t seed,
                          const KMeansOptions& opts) {
    const auto n = points.rows();
    Rng rng(seed);
    KMeansFit fit;
    fit.centroids = kmeansPlusPlusInit(points, k, rng);

    std::vector<long long> counts(static_cast<std::size_t>(k), 0);
    const bool fullBatch = static_cast<Eigen::Index>(opts.batchSize) >= n;
    std::vector<Eigen::Index> batch;
    for (int iter = 0; iter < opts.maxIter; ++iter) {
        fit.iterations = iter + 1;
        batch.clear();
        if (fullBatch) {
            for (Eigen::Index i = 0; i < n; ++i) batch.push_back(i);
        } else {
            for (int b = 0; b < opts.batchSize; ++b) {
                batch.push_back(static_cast<Eigen::Index>(rng.nextBelow(static_cast<std::uint64_t>(n))));
            }
        }
        // Cache assignments for the whole batch, then take per-center
        // gradient steps with a 1/count learning rate.
        std::vector<int> assigned(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
            double best = std::numeric_limits<double>::infinity();
            int bestCluster = 0;
            for (int c = 0; c < k; ++c) {
                const double d2 = (points.row(batch[b]) - fit.centroids.row(c)).squaredNorm();
                if (d2 < best) {
                    best = d2;
                    bestCluster = c;
                }
            }
            assigned[b] = bestCluster;
        }
        double movement = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const int c = assigned[b];
            counts[static_cast<std::size_t>(c)] += 1;
            const double eta = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            const Eigen::RowVector2d delta = points.row(batch[b]) - fit.centroids.row(c);
            fit.centroids.row(c) += eta * delta;
            movement += eta * eta * delta.squaredNorm();
        }
        if (movement < opts.tol) break;
    }

    fit.labels = nearestLabels(points, fit.centroids);

    // Re-seed empty clusters to the farthest point of a cluster that can
    // spare one, so every cluster ends up nonempty.
    while (true) {
        std::vector<int> sizes(static_cast<std::size_t>(k), 0);
        for (int label : fit.labels) sizes[static_cast<std::size_t>(label)] += 1;
        int empty = -1;
        for (int c = 0; c < k; ++c) {
            if (sizes[static_cast<std::size_t>(c)] == 0) {
                empty = c;
                break;
            }
        }
        if (empty < 0) break;
        Eigen::Index farthest = -1;
        double bestDist = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int owner = fit.labels[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
            const double d2 = (points.row(i) - fit.centroids.row(owner)).squaredNorm();
            if (d2 > bestDist) {
                bestDist = d2;
                farthest = i;
            }
        }
        if (farthest < 0) break; // k > number of points; caller guards this
        fit.centroids.row(empty) = points.row(farthest);
        fit.labels[static_cast<std::size_t>(farthest)] = empty;
    }

    fit.inertia = inertiaOf(points, fit.centroids, fit.labels);
    return fit;
}

} // namespace

Eigen::MatrixX2d UserFeatureMatrix::reproject() const {
    Eigen::MatrixXd centered = rows.rowwise() - basis.mean.transpose();
    Eigen::MatrixX2d out(rows.rows(), 2);
    out.col(0) = centered * basis.axis1;
    out.col(1) = centered * basis.axis2;
    return out;
}

UserFeatureMatrix projectUsers(const RatingsDataset& ds) {
    const auto n = static_cast<Eigen::Index>(ds.userCount());
    const auto d = static_cast<Eigen::Index>(ds.itemCount());
    if (n < 3) throw DegenerateError("projectUsers requires at least 3 users");

    UserFeatureMatrix ufm;
    ufm.users = ds.users();
    ufm.rows = Eigen::MatrixXd::Zero(n, d);
    for (const auto& r : ds.records()) {
        ufm.rows(ds.userIndexOf(r.user), ds.itemIndexOf(r.item)) = r.rating;
    }

    ufm.basis.mean = ufm.rows.colwise().mean();
    Eigen::MatrixXd centered = ufm.rows.rowwise() - ufm.basis.mean.transpose();

    auto [first, second] = topTwoPrincipal(centered);
    const double scale = std::max(1.0, first.value);
    ufm.basis.eigenvalue1 = first.value;
    ufm.basis.eigenvalue2 = second.value;
    ufm.basis.axis1 = first.vector;
    ufm.basis.axis2 = second.vector;
    if (first.value <= kRankTol * scale) {
        ufm.basis.axis1.setZero();
        ufm.basis.axis1Degenerate = true;
    }
    if (second.value <= kRankTol * scale) {
        ufm.basis.axis2.setZero();
        ufm.basis.axis2Degenerate = true;
    }
    applySignConvention(ufm.basis.axis1);
    applySignConvention(ufm.basis.axis2);

    ufm.projection.resize(n, 2);
    ufm.projection.col(0) = centered * ufm.basis.axis1;
    ufm.projection.col(1) = centered * ufm.basis.axis2;
    return ufm;
}

ClusterModel clusterUsers(const UserFeatureMatrix& ufm, int k, std::uint64_t seed,
                          const KMeansOptions& opts) {
    const auto n = ufm.projection.rows();
    if (k < 1) throw KTooLargeError("k must be positive");
    if (static_cast<Eigen::Index>(k) > n) {
        throw KTooLargeError("k = " + std::to_string(k) + " exceeds user count " + std::to_string(n));
    }

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    bool haveBest = false;
    for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
        KMeansFit fit = minibatchKMeans(ufm.projection, k, Rng::deriveStream(seed, static_cast<std::uint64_t>(restart)), opts);
        if (!haveBest || fit.inertia < model.inertia) {
            haveBest = true;
            model.centroids = fit.centroids;
            model.labels = fit.labels;
            model.iterations = fit.iterations;
            model.inertia = fit.inertia;
        }
    }
    return model;
}

CoalitionGame clusterGame(const RatingsDataset& ds, const ClusterModel& cm,
                          const RecommenderConfig& cfg) {
    if (cm.labels.size() != ds.userCount()) {
        throw Error("cluster model does not match dataset user count");
    }
    auto memberLists = std::make_shared<std::vector<std::vector<UserId>>>(
        static_cast<std::size_t>(cm.k));
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        (*memberLists)[static_cast<std::size_t>(cm.labels[i])].push_back(ds.users()[i]);
    }
    auto data = std::make_shared<RatingsDataset>(ds);
    std::vector<PlayerId> players(static_cast<std::size_t>(cm.k));
    std::iota(players.begin(), players.end(), 0);
    return CoalitionGame(std::move(players),
                         [data, memberLists, cfg](const std::vector<PlayerId>& coalition) {
                             std::set<UserId> users;
                             for (PlayerId c : coalition) {
                                 const auto& members = (*memberLists)[static_cast<std::size_t>(c)];
                                 users.insert(members.begin(), members.end());
                             }
                             return static_cast<double>(coalitionValue(*data, users, cfg));
                         });
}

ClusterShapley clusterShapley(const CoalitionGame& game, long long totalClicks,
                              const ShapleyOptions& opts) {
    const ShapleyResult result = shapleyExactPermutation(game, opts);
    ClusterShapley cs;
    cs.phi = result.values;
    cs.totalClicks = totalClicks;
    cs.permutationCount = result.permutationCount;
    cs.residual = result.residual;
    cs.nonNegative = std::all_of(cs.phi.begin(), cs.phi.end(), [](double v) { return v >= 0.0; });
    return cs;
}

UserValueVector userValues(const ClusterModel& cm, const ClusterShapley& cs,
                           const UserFeatureMatrix& ufm) {
    if (!cs.nonNegative) {
        throw NegativeClusterError(
            "cluster Shapley values contain a negative entry; refusing to assign user values");
    }
    if (static_cast<int>(cs.phi.size()) != cm.k) throw Error("cluster value vector does not match model");

    UserValueVector values;
    values.users = ufm.users;
    values.totalClicks = cs.totalClicks;
    const auto n = ufm.projection.rows();
    values.raw.resize(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = 0.0;
        for (int c = 0; c < cm.k; ++c) {
            const double dist = (ufm.projection.row(i) - cm.centroids.row(c)).norm();
            v += cs.phi[static_cast<std::size_t>(c)] / (1.0 + dist);
        }
        values.raw[static_cast<std::size_t>(i)] = v;
        sum += v;
    }
    values.normalized.resize(static_cast<std::size_t>(n), 0.0);
    if (sum > 0.0) {
        const double scale = static_cast<double>(cs.totalClicks) / sum;
        for (std::size_t i = 0; i < values.raw.size(); ++i) values.normalized[i] = values.raw[i] * scale;
    }
    return values;
}

} // namespace fairshare
