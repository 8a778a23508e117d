#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fairshare {

// std::mt19937_64 output is fully specified by the standard, but the
// <random> distributions are not. All sampling used for reproducible
// results goes through the explicit transforms below so that a given
// seed yields the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    /// Uniform double in [0, 1).
    double nextDouble() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased via rejection. n must be > 0.
    std::uint64_t nextBelow(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    /// Standard normal via Box-Muller (both draws consumed every call).
    double nextGaussian() {
        double u1 = nextDouble();
        double u2 = nextDouble();
        while (u1 <= 0.0) u1 = nextDouble();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(nextBelow(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derives an independent seed from a base seed and a stream id
    /// (splitmix64 finalizer), so per-entity streams do not depend on
    /// iteration order.
    static std::uint64_t deriveStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fairshare
