#include "fairshare/game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "fairshare/errors.hpp"
#include "fairshare/rng.hpp"

namespace fairshare {

namespace {

constexpr int kMaxPlayers = 64;
constexpr int kAxiomScanCap = 12;

double factorialD(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

std::uint64_t factorialU(int n) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

double binomialD(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
    return b;
}

// Dense table of all 2^n coalition values; index = mask.
std::vector<double> denseValues(const CoalitionGame& game) {
    const int n = game.playerCount();
    std::vector<double> table(std::size_t{1} << n, 0.0);
    for (CoalitionMask mask = 1; mask < table.size(); ++mask) table[mask] = game.value(mask);
    return table;
}

double residualOf(const std::vector<double>& phi, double grandValue) {
    long double sum = 0.0L;
    for (double v : phi) sum += v;
    return std::abs(static_cast<double>(sum - static_cast<long double>(grandValue)));
}

} // namespace

CoalitionGame::CoalitionGame(std::vector<PlayerId> players, ValueFn valueFn)
    : players_(std::move(players)), valueFn_(std::move(valueFn)) {
    if (players_.size() > kMaxPlayers) {
        throw SizeCapError("games are capped at " + std::to_string(kMaxPlayers) + " players, got " +
                           std::to_string(players_.size()));
    }
    if (!valueFn_) throw Error("valueFn must be callable");
    std::vector<PlayerId> sorted = players_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error("player ids must be unique");
    }
}

CoalitionMask CoalitionGame::fullMask() const {
    const int n = playerCount();
    return n == kMaxPlayers ? ~CoalitionMask{0} : (CoalitionMask{1} << n) - 1;
}

double CoalitionGame::value(CoalitionMask coalition) const {
    if (coalition == 0) return 0.0; // v(empty) = 0 by definition
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(coalition);
        if (it != cache_.end()) return it->second;
    }
    std::vector<PlayerId> members;
    for (int i = 0; i < playerCount(); ++i) {
        if (coalition & (CoalitionMask{1} << i)) members.push_back(players_[static_cast<std::size_t>(i)]);
    }
    const double v = valueFn_(members);
    evaluations_.fetch_add(1, std::memory_order_relaxed);
    std::lock_guard<std::mutex> lock(mutex_);
    // Two threads may race to compute the same coalition; valueFn is
    // pure, so the overwrite is value-identical. The first insert wins
    // and the duplicate evaluation is not counted again.
    auto [it, inserted] = cache_.emplace(coalition, v);
    if (!inserted) evaluations_.fetch_sub(1, std::memory_order_relaxed);
    return it->second;
}

double CoalitionGame::valueOfPlayers(const std::vector<PlayerId>& coalition) const {
    CoalitionMask mask = 0;
    for (PlayerId p : coalition) {
        auto it = std::find(players_.begin(), players_.end(), p);
        if (it == players_.end()) throw Error("player " + std::to_string(p) + " not in game");
        mask |= CoalitionMask{1} << (it - players_.begin());
    }
    return value(mask);
}

void CoalitionGame::precomputeAll(int threads) const {
    const CoalitionMask total = fullMask();
    if (threads <= 1) {
        for (CoalitionMask mask = 1; mask <= total; ++mask) value(mask);
        return;
    }
    // Static partition: each mask is owned by exactly one worker, so no
    // coalition is ever evaluated twice.
    std::vector<std::future<void>> workers;
    workers.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        workers.push_back(std::async(std::launch::async, [this, t, threads, total] {
            for (CoalitionMask mask = 1 + static_cast<CoalitionMask>(t); mask <= total;
                 mask += static_cast<CoalitionMask>(threads)) {
                value(mask);
            }
        }));
    }
    for (auto& w : workers) w.get();
}

double ShapleyResult::total() const {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

ShapleyResult shapleyExactPermutation(const CoalitionGame& game, const ShapleyOptions& opts) {
    const int n = game.playerCount();
    if (n > opts.permutationCap) {
        throw SizeCapError("permutation-form Shapley capped at " + std::to_string(opts.permutationCap) +
                           " players, got " + std::to_string(n));
    }
    const auto table = denseValues(game);

    // Accumulate per-player marginal sums in extended precision; the
    // final division by n! then keeps both exact forms within 1e-12 of
    // each other.
    std::vector<long double> sums(static_cast<std::size_t>(n), 0.0L);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t permutations = 0;
    do {
        ++permutations;
        CoalitionMask prefix = 0;
        for (int pos = 0; pos < n; ++pos) {
            const int player = order[static_cast<std::size_t>(pos)];
            const CoalitionMask withPlayer = prefix | (CoalitionMask{1} << player);
            sums[static_cast<std::size_t>(player)] +=
                static_cast<long double>(table[withPlayer]) - static_cast<long double>(table[prefix]);
            prefix = withPlayer;
        }
    } while (std::next_permutation(order.begin(), order.end()));

    ShapleyResult result;
    result.method = ShapleyMethod::ExactPermutation;
    result.permutationCount = permutations;
    const long double nf = static_cast<long double>(factorialU(n));
    result.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        result.values[static_cast<std::size_t>(i)] = static_cast<double>(sums[static_cast<std::size_t>(i)] / nf);
    }
    result.residual = residualOf(result.values, table[game.fullMask()]);
    return result;
}

ShapleyResult shapleyExactSubset(const CoalitionGame& game, const ShapleyOptions& opts) {
    const int n = game.playerCount();
    if (n > opts.subsetCap) {
        throw SizeCapError("subset-form Shapley capped at " + std::to_string(opts.subsetCap) +
                           " players, got " + std::to_string(n));
    }
    const auto table = denseValues(game);

    // Weight for a subset of size s: s!(n-s-1)!/n! = 1/(n * C(n-1, s)).
    std::vector<double> weight(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        weight[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(n) * binomialD(n - 1, s));
    }

    std::vector<long double> sums(static_cast<std::size_t>(n), 0.0L);
    const CoalitionMask total = game.fullMask();
    for (CoalitionMask subset = 0; subset < total; ++subset) {
        const double w = weight[static_cast<std::size_t>(std::popcount(subset))];
        for (int i = 0; i < n; ++i) {
            const CoalitionMask bit = CoalitionMask{1} << i;
            if (subset & bit) continue;
            sums[static_cast<std::size_t>(i)] +=
                static_cast<long double>(w) *
                (static_cast<long double>(table[subset | bit]) - static_cast<long double>(table[subset]));
        }
    }

    ShapleyResult result;
    result.method = ShapleyMethod::ExactSubset;
    result.permutationCount = (std::uint64_t{1} << n);
    result.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) result.values[static_cast<std::size_t>(i)] = static_cast<double>(sums[static_cast<std::size_t>(i)]);
    result.residual = residualOf(result.values, table[total]);
    return result;
}

ShapleyResult shapleyMonteCarlo(const CoalitionGame& game, std::uint64_t samples, std::uint64_t seed) {
    if (samples == 0) throw Error("samples must be >= 1");
    const int n = game.playerCount();
    Rng rng(seed);

    std::vector<long double> sums(static_cast<std::size_t>(n), 0.0L);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (std::uint64_t s = 0; s < samples; ++s) {
        rng.shuffle(order);
        CoalitionMask prefix = 0;
        double previous = 0.0;
        for (int pos = 0; pos < n; ++pos) {
            const int player = order[static_cast<std::size_t>(pos)];
            prefix |= CoalitionMask{1} << player;
            const double current = game.value(prefix);
            sums[static_cast<std::size_t>(player)] += static_cast<long double>(current - previous);
            previous = current;
        }
    }

    ShapleyResult result;
    result.method = ShapleyMethod::MonteCarlo;
    result.sampleCount = samples;
    result.permutationCount = samples;
    result.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        result.values[static_cast<std::size_t>(i)] =
            static_cast<double>(sums[static_cast<std::size_t>(i)] / static_cast<long double>(samples));
    }

    // Rescale so the estimate distributes v(N) exactly; the downstream
    // payout mapping relies on the efficiency condition.
    const double grand = game.value(game.fullMask());
    const double total = result.total();
    if (total != 0.0) {
        const double scale = grand / total;
        for (auto& v : result.values) v *= scale;
        result.rescaled = true;
    }
    result.residual = residualOf(result.values, grand);
    return result;
}

AxiomReport axiomCheck(const CoalitionGame& game, const ShapleyResult& result, double tolerance,
                       const CoalitionGame* linearityWitness) {
    const int n = game.playerCount();
    if (n > kAxiomScanCap) {
        throw SizeCapError("axiomCheck subset scans capped at " + std::to_string(kAxiomScanCap) + " players");
    }
    if (static_cast<int>(result.values.size()) != n) throw Error("result does not match game size");

    AxiomReport report;
    const auto table = denseValues(game);
    const CoalitionMask total = game.fullMask();

    const double grand = table[total];
    report.efficiency = std::abs(result.total() - grand) <= tolerance * std::max(1.0, std::abs(grand));

    const bool exact =
        result.method == ShapleyMethod::ExactPermutation || result.method == ShapleyMethod::ExactSubset;
    if (exact) {
        // Symmetric pairs: v(S+i) == v(S+j) for every S avoiding both.
        bool symmetryOk = true;
        bool foundPair = false;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const CoalitionMask bi = CoalitionMask{1} << i;
                const CoalitionMask bj = CoalitionMask{1} << j;
                bool symmetric = true;
                for (CoalitionMask s = 0; s <= total && symmetric; ++s) {
                    if (s & (bi | bj)) continue;
                    if (std::abs(table[s | bi] - table[s | bj]) > tolerance) symmetric = false;
                }
                if (symmetric) {
                    foundPair = true;
                    report.symmetricPairs.emplace_back(i, j);
                    if (std::abs(result.values[static_cast<std::size_t>(i)] -
                                 result.values[static_cast<std::size_t>(j)]) > tolerance) {
                        symmetryOk = false;
                    }
                }
            }
        }
        if (foundPair) report.symmetry = symmetryOk;

        // Null players: v(S+i) == v(S) for every S.
        bool nullOk = true;
        bool foundNull = false;
        for (int i = 0; i < n; ++i) {
            const CoalitionMask bi = CoalitionMask{1} << i;
            bool isNull = true;
            for (CoalitionMask s = 0; s <= total && isNull; ++s) {
                if (s & bi) continue;
                if (std::abs(table[s | bi] - table[s]) > tolerance) isNull = false;
            }
            if (isNull) {
                foundNull = true;
                report.nullPlayers.push_back(i);
                if (std::abs(result.values[static_cast<std::size_t>(i)]) > tolerance) nullOk = false;
            }
        }
        if (foundNull) report.nullPlayer = nullOk;
    }

    // Linearity. Homogeneity is always checkable on the game itself;
    // additivity needs the witness game supplied by the caller.
    bool linear = true;
    const ShapleyOptions opts;
    const ShapleyResult base = shapleyExactSubset(game, opts);
    for (double alpha : {-1.0, 0.5, 3.0}) {
        CoalitionGame scaled(game.players(),
                             [&game, alpha](const std::vector<PlayerId>& coalition) {
                                 return alpha * game.valueOfPlayers(coalition);
                             });
        const ShapleyResult scaledResult = shapleyExactSubset(scaled, opts);
        for (int i = 0; i < n; ++i) {
            if (std::abs(scaledResult.values[static_cast<std::size_t>(i)] -
                         alpha * base.values[static_cast<std::size_t>(i)]) > tolerance) {
                linear = false;
            }
        }
    }
    if (linearityWitness != nullptr) {
        if (linearityWitness->playerCount() != n) throw Error("linearity witness has different player count");
        const CoalitionGame& w = *linearityWitness;
        CoalitionGame sumGame(game.players(), [&game, &w](const std::vector<PlayerId>& coalition) {
            return game.valueOfPlayers(coalition) + w.valueOfPlayers(coalition);
        });
        const ShapleyResult phiW = shapleyExactSubset(w, opts);
        const ShapleyResult phiSum = shapleyExactSubset(sumGame, opts);
        for (int i = 0; i < n; ++i) {
            if (std::abs(phiSum.values[static_cast<std::size_t>(i)] - base.values[static_cast<std::size_t>(i)] -
                         phiW.values[static_cast<std::size_t>(i)]) > tolerance) {
                linear = false;
            }
        }
    }
    report.linearity = linear;
    return report;
}

std::string gameToJson(const CoalitionGame& game) {
    const int n = game.playerCount();
    if (n > 20) throw SizeCapError("gameToJson enumerates all coalitions; capped at 20 players");
    nlohmann::json j = nlohmann::json::object();
    const CoalitionMask total = game.fullMask();
    for (CoalitionMask mask = 1; mask <= total; ++mask) {
        std::string key;
        for (int i = 0; i < n; ++i) {
            if (mask & (CoalitionMask{1} << i)) {
                if (!key.empty()) key += ',';
                key += std::to_string(i);
            }
        }
        j[key] = game.value(mask);
    }
    return j.dump(2);
}

CoalitionGame gameFromJson(const std::string& json, std::vector<PlayerId> players) {
    nlohmann::json j = nlohmann::json::parse(json);
    std::unordered_map<CoalitionMask, double> table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        CoalitionMask mask = 0;
        std::size_t pos = 0;
        const std::string& key = it.key();
        while (pos < key.size()) {
            std::size_t comma = key.find(',', pos);
            if (comma == std::string::npos) comma = key.size();
            const int index = std::stoi(key.substr(pos, comma - pos));
            if (index < 0 || index >= static_cast<int>(players.size())) {
                throw ParseError("coalition key '" + key + "' references player index out of range");
            }
            mask |= CoalitionMask{1} << index;
            pos = comma + 1;
        }
        table[mask] = it->get<double>();
    }
    return tableGame(std::move(players), std::move(table));
}

CoalitionGame tableGame(std::vector<PlayerId> players, std::unordered_map<CoalitionMask, double> table) {
    auto lookup = std::make_shared<std::unordered_map<CoalitionMask, double>>(std::move(table));
    auto playerList = std::make_shared<std::vector<PlayerId>>(players);
    return CoalitionGame(std::move(players), [lookup, playerList](const std::vector<PlayerId>& coalition) {
        CoalitionMask mask = 0;
        for (PlayerId p : coalition) {
            auto it = std::find(playerList->begin(), playerList->end(), p);
            mask |= CoalitionMask{1} << (it - playerList->begin());
        }
        auto found = lookup->find(mask);
        return found == lookup->end() ? 0.0 : found->second;
    });
}

} // namespace fairshare
