#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairshare/rng.hpp"

namespace oracles {

JacobiResult jacobiEigen(std::vector<std::vector<double>> a, int sweeps) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        }
        if (off < 1e-26) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i][p];
                    const double aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p][i];
                    const double aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v[i][p];
                    const double viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });

    JacobiResult result;
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t col = order[rank];
        result.eigenvalues.push_back(a[col][col]);
        std::vector<double> vec(n);
        for (std::size_t i = 0; i < n; ++i) vec[i] = v[i][col];
        result.eigenvectors.push_back(std::move(vec));
    }
    return result;
}

namespace {

double lloydRun(const Eigen::MatrixX2d& points, int k, fairshare::Rng& rng) {
    const auto n = points.rows();
    Eigen::MatrixX2d centroids(k, 2);

    // k-means++ style D^2 seeding.
    const auto first = static_cast<Eigen::Index>(rng.nextBelow(static_cast<std::uint64_t>(n)));
    centroids.row(0) = points.row(first);
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double r = rng.nextDouble() * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.nextBelow(static_cast<std::uint64_t>(n)));
        }
        centroids.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
        }
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int bestCluster = 0;
            for (int c = 0; c < k; ++c) {
                const double dist = (points.row(i) - centroids.row(c)).squaredNorm();
                if (dist < best) {
                    best = dist;
                    bestCluster = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != bestCluster) {
                labels[static_cast<std::size_t>(i)] = bestCluster;
                changed = true;
            }
        }
        Eigen::MatrixX2d sums = Eigen::MatrixX2d::Zero(k, 2);
        std::vector<long long> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
            counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1;
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        if (!changed && iter > 0) break;
    }

    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        inertia += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return inertia;
}

} // namespace

double lloydBestInertia(const Eigen::MatrixX2d& points, int k, int restarts, std::uint64_t seed) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        fairshare::Rng rng(fairshare::Rng::deriveStream(seed, static_cast<std::uint64_t>(r)));
        best = std::min(best, lloydRun(points, k, rng));
    }
    return best;
}

double pearsonReference(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double meanA = 0.0;
    double meanB = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        meanA += a[i] / static_cast<double>(n);
        meanB += b[i] / static_cast<double>(n);
    }
    double num = 0.0;
    double da = 0.0;
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - meanA) * (b[i] - meanB);
        da += (a[i] - meanA) * (a[i] - meanA);
        db += (b[i] - meanB) * (b[i] - meanB);
    }
    if (da == 0.0 || db == 0.0) return 0.0;
    return num / std::sqrt(da * db);
}

} // namespace oracles
