#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairshare {

using PlayerId = int;

/// Coalition encoded as a bitmask over player *indices* (bit i set means
/// players()[i] is in the coalition). Games are capped at 64 players.
using CoalitionMask = std::uint64_t;

/// A cooperative game: an ordered player list plus a characteristic
/// function v over coalitions. Values are memoized so a coalition is
/// never evaluated twice; the empty coalition is 0 by definition. The
/// value function must be pure; lookups are thread-safe.
class CoalitionGame {
public:
    /// Receives the coalition as sorted ascending player ids.
    using ValueFn = std::function<double(const std::vector<PlayerId>&)>;

    CoalitionGame(std::vector<PlayerId> players, ValueFn valueFn);

    int playerCount() const { return static_cast<int>(players_.size()); }
    const std::vector<PlayerId>& players() const { return players_; }
    CoalitionMask fullMask() const;

    double value(CoalitionMask coalition) const;
    double valueOfPlayers(const std::vector<PlayerId>& coalition) const;

    /// Number of distinct valueFn invocations so far (cache misses).
    std::uint64_t evaluationCount() const { return evaluations_.load(); }

    /// Evaluates every nonempty coalition up front. Coalitions are
    /// independent, so they may be computed on `threads` workers; the
    /// result is schedule-invariant because valueFn is pure.
    void precomputeAll(int threads = 1) const;

private:
    std::vector<PlayerId> players_;
    ValueFn valueFn_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<CoalitionMask, double> cache_;
    mutable std::atomic<std::uint64_t> evaluations_{0};
};

enum class ShapleyMethod { ExactPermutation, ExactSubset, MonteCarlo, AsveCluster };

struct ShapleyResult {
    std::vector<double> values; ///< by player index
    ShapleyMethod method = ShapleyMethod::ExactSubset;
    /// Permutations traversed (exact/MC) or subsets visited (subset form).
    std::uint64_t permutationCount = 0;
    std::uint64_t sampleCount = 0; ///< Monte Carlo only
    double residual = 0.0;         ///< |sum(values) - v(N)|
    bool rescaled = false;         ///< MC efficiency rescaling applied

    double total() const;
};

struct ShapleyOptions {
    int permutationCap = 10;
    int subsetCap = 20;
};

/// Average marginal contribution over all N! arrival orders, evaluated
/// by sweeping every permutation over the memoized coalition values.
ShapleyResult shapleyExactPermutation(const CoalitionGame& game, const ShapleyOptions& opts = {});

/// Same value computed by the subset regrouping
/// phi_i = sum_{S not containing i} |S|!(N-|S|-1)!/N! (v(S+i) - v(S)).
ShapleyResult shapleyExactSubset(const CoalitionGame& game, const ShapleyOptions& opts = {});

/// Monte Carlo estimate over `samples` uniformly random permutations,
/// deterministic per seed. Values are rescaled so they sum to v(N)
/// exactly (flagged in the result).
ShapleyResult shapleyMonteCarlo(const CoalitionGame& game, std::uint64_t samples, std::uint64_t seed);

/// Axiom verification report. Symmetry and null-player checks scan all
/// subsets and are capped at 12 players; they are skipped for Monte
/// Carlo results. Linearity checks phi(alpha*v) = alpha*phi(v) for
/// alpha in {-1, 0.5, 3}, and additivity against `witness` when given.
struct AxiomReport {
    bool efficiency = false;
    std::optional<bool> symmetry;   ///< unset when no symmetric pair exists / not checked
    std::optional<bool> nullPlayer; ///< unset when no null player exists / not checked
    bool linearity = false;
    std::vector<std::pair<int, int>> symmetricPairs;
    std::vector<int> nullPlayers;

    bool allPassed() const {
        return efficiency && linearity && symmetry.value_or(true) && nullPlayer.value_or(true);
    }
};

AxiomReport axiomCheck(const CoalitionGame& game, const ShapleyResult& result, double tolerance,
                       const CoalitionGame* linearityWitness = nullptr);

/// JSON map {"i,j,...": v} with comma-joined sorted player indices as
/// keys; covers every nonempty coalition. Inverse of gameFromJson.
std::string gameToJson(const CoalitionGame& game);
CoalitionGame gameFromJson(const std::string& json, std::vector<PlayerId> players);

/// Builds a game from an explicit mask -> value table (mask over player
/// indices). Missing entries default to 0.
CoalitionGame tableGame(std::vector<PlayerId> players,
                        std::unordered_map<CoalitionMask, double> table);

} // namespace fairshare
