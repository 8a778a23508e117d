#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairshare/dataset.hpp"
#include "fairshare/game.hpp"
#include "fairshare/recommender.hpp"

namespace fairshare {

/// Mean vector and top-2 principal axes of the user rating matrix.
/// Axes use a deterministic sign convention: the largest-magnitude
/// component of each axis is made positive. An axis whose eigenvalue
/// vanishes is the zero vector and flagged degenerate.
struct ProjectionBasis {
    Eigen::VectorXd mean;
    Eigen::VectorXd axis1;
    Eigen::VectorXd axis2;
    double eigenvalue1 = 0.0;
    double eigenvalue2 = 0.0;
    bool axis1Degenerate = false;
    bool axis2Degenerate = false;
};

/// Dense user-by-item rating matrix (missing = 0) together with its 2-D
/// PCA projection. Row order matches the dataset's contiguous user index.
struct UserFeatureMatrix {
    std::vector<UserId> users;
    Eigen::MatrixXd rows;       ///< userCount x itemCount
    Eigen::MatrixX2d projection;///< userCount x 2
    ProjectionBasis basis;

    /// Applies the stored basis to `rows` again; used to verify that the
    /// stored projection is consistent with the basis.
    Eigen::MatrixX2d reproject() const;
};

struct ClusterModel {
    int k = 0;
    Eigen::MatrixX2d centroids; ///< k x 2
    std::vector<int> labels;    ///< per user row, in [0, k)
    int iterations = 0;
    std::uint64_t seed = 0;
    double inertia = 0.0; ///< within-cluster sum of squares of the final assignment
};

struct KMeansOptions {
    int maxIter = 100;
    int batchSize = 256;
    int restarts = 10;
    double tol = 1e-8; ///< squared centroid movement per iteration below which a restart stops
};

/// Cluster-level Shapley values over the coalition click game, plus the
/// non-negativity precheck result. User valuation must refuse to run
/// when nonNegative is false.
struct ClusterShapley {
    std::vector<double> phi; ///< per cluster
    long long totalClicks = 0;
    bool nonNegative = false;
    std::uint64_t permutationCount = 0;
    double residual = 0.0;
};

struct UserValueVector {
    std::vector<UserId> users;
    std::vector<double> raw;        ///< inverse-distance smear of cluster values
    std::vector<double> normalized; ///< raw scaled so the sum equals totalClicks
    long long totalClicks = 0;
    std::string method = "asve";
};

/// Builds the rating matrix over all records and projects users onto the
/// top-2 principal axes (exact PCA via covariance eigendecomposition).
/// Requires at least 3 users.
UserFeatureMatrix projectUsers(const RatingsDataset& ds);

/// Seeded minibatch k-means (k-means++ initialization) on the 2-D
/// projections. Runs `restarts` independent fits derived from the seed
/// and keeps the lowest-inertia one. Empty clusters are re-seeded to the
/// farthest point. Throws KTooLargeError when k exceeds the user count.
ClusterModel clusterUsers(const UserFeatureMatrix& ufm, int k, std::uint64_t seed,
                          const KMeansOptions& opts = {});

/// The cluster coalition game: players are cluster indices 0..k-1 and
/// v(S) is the click count when train and test are restricted to users
/// whose cluster lies in S.
CoalitionGame clusterGame(const RatingsDataset& ds, const ClusterModel& cm,
                          const RecommenderConfig& cfg);

/// Exact permutation-form Shapley over the cluster game with the
/// non-negativity precheck. K is the full-dataset click count.
ClusterShapley clusterShapley(const CoalitionGame& game, long long totalClicks,
                              const ShapleyOptions& opts = {});

/// Smears cluster values to users by inverse (1 + distance to centroid)
/// and normalizes so the user values sum to K. Throws
/// NegativeClusterError when the precheck failed.
UserValueVector userValues(const ClusterModel& cm, const ClusterShapley& cs,
                           const UserFeatureMatrix& ufm);

} // namespace fairshare
