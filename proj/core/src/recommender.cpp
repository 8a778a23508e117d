#include "fairshare/recommender.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fairshare {

namespace {

std::atomic<std::uint64_t> g_trainPredictCalls{0};

// Biased matrix factorization: r_hat = mu + b_u + b_i + p_u . q_i.
// Trained by plain SGD over the train records in their stored order,
// which keeps results bit-identical for a fixed seed.
class MfModel {
public:
    MfModel(std::span<const RatingRecord> train, const RecommenderConfig& cfg) : dim_(cfg.latentDim) {
        for (const auto& r : train) {
            if (userIndex_.emplace(r.user, 0).second) users_.push_back(r.user);
            if (itemIndex_.emplace(r.item, 0).second) items_.push_back(r.item);
            mean_ += r.rating;
        }
        mean_ /= static_cast<double>(train.size());
        std::sort(users_.begin(), users_.end());
        std::sort(items_.begin(), items_.end());
        for (std::size_t i = 0; i < users_.size(); ++i) userIndex_[users_[i]] = static_cast<int>(i);
        for (std::size_t i = 0; i < items_.size(); ++i) itemIndex_[items_[i]] = static_cast<int>(i);

        userBias_.assign(users_.size(), 0.0);
        itemBias_.assign(items_.size(), 0.0);
        const double scale = 0.1 / std::sqrt(static_cast<double>(dim_));
        Rng rng(cfg.seed);
        userFactors_.assign(users_.size() * static_cast<std::size_t>(dim_), 0.0);
        itemFactors_.assign(items_.size() * static_cast<std::size_t>(dim_), 0.0);
        for (auto& v : userFactors_) v = scale * rng.nextGaussian();
        for (auto& v : itemFactors_) v = scale * rng.nextGaussian();

        const double lr = cfg.learningRate;
        const double reg = cfg.regularization;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            for (const auto& r : train) {
                const int u = userIndex_[r.user];
                const int i = itemIndex_[r.item];
                double* p = &userFactors_[static_cast<std::size_t>(u) * dim_];
                double* q = &itemFactors_[static_cast<std::size_t>(i) * dim_];
                double pred = mean_ + userBias_[u] + itemBias_[i];
                for (int f = 0; f < dim_; ++f) pred += p[f] * q[f];
                const double err = r.rating - pred;
                userBias_[u] += lr * (err - reg * userBias_[u]);
                itemBias_[i] += lr * (err - reg * itemBias_[i]);
                for (int f = 0; f < dim_; ++f) {
                    const double pf = p[f];
                    p[f] += lr * (err * q[f] - reg * pf);
                    q[f] += lr * (err * pf - reg * q[f]);
                }
            }
        }
    }

    // Cold users/items fall back to the global mean plus whichever bias
    // terms are known; the dot product needs both sides.
    double predict(UserId user, ItemId item) const {
        double pred = mean_;
        auto ui = userIndex_.find(user);
        auto ii = itemIndex_.find(item);
        if (ui != userIndex_.end()) pred += userBias_[static_cast<std::size_t>(ui->second)];
        if (ii != itemIndex_.end()) pred += itemBias_[static_cast<std::size_t>(ii->second)];
        if (ui != userIndex_.end() && ii != itemIndex_.end()) {
            const double* p = &userFactors_[static_cast<std::size_t>(ui->second) * dim_];
            const double* q = &itemFactors_[static_cast<std::size_t>(ii->second) * dim_];
            for (int f = 0; f < dim_; ++f) pred += p[f] * q[f];
        }
        return pred;
    }

private:
    int dim_;
    double mean_ = 0.0;
    std::vector<UserId> users_;
    std::vector<ItemId> items_;
    std::map<UserId, int> userIndex_;
    std::map<ItemId, int> itemIndex_;
    std::vector<double> userBias_, itemBias_;
    std::vector<double> userFactors_, itemFactors_;
};

} // namespace

void RecommenderConfig::validate() const {
    if (latentDim < 1) throw Error("latentDim must be positive");
    if (epochs < 1) throw Error("epochs must be positive");
    if (!(learningRate > 0.0)) throw Error("learningRate must be positive");
    if (regularization < 0.0) throw Error("regularization must be nonnegative");
    if (!(clickThreshold > 0.0)) throw Error("clickThreshold must be positive");
}

ClickReport trainPredict(std::span<const RatingRecord> train, std::span<const RatingRecord> test,
                         const RecommenderConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw EmptyTrainError("training set is empty");
    g_trainPredictCalls.fetch_add(1, std::memory_order_relaxed);

    MfModel model(train, cfg);
    ClickReport report;
    for (const auto& r : test) {
        const double err = std::abs(model.predict(r.user, r.item) - r.rating);
        if (err < cfg.clickThreshold) {
            report.totalClicks += 1;
            report.perUserClicks[r.user] += 1;
            report.perItemClicks[r.item] += 1;
        }
    }
    return report;
}

long long coalitionValue(const RatingsDataset& ds, const std::set<UserId>& coalitionUsers,
                         const RecommenderConfig& cfg) {
    if (coalitionUsers.empty()) return 0;
    if (!ds.hasSplit()) throw Error("coalitionValue requires a dataset with a train/test split");

    std::vector<RatingRecord> train, test;
    const auto& records = ds.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!coalitionUsers.count(records[i].user)) continue;
        if (ds.isTrain(i)) {
            train.push_back(records[i]);
        } else {
            test.push_back(records[i]);
        }
    }
    return trainPredict(train, test, cfg).totalClicks;
}

std::uint64_t trainPredictCallCount() { return g_trainPredictCalls.load(std::memory_order_relaxed); }
void resetTrainPredictCallCount() { g_trainPredictCalls.store(0, std::memory_order_relaxed); }

} // namespace fairshare
