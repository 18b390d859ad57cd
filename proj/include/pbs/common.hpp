#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbs {

using TokenId = std::uint32_t;
using SampleId = std::uint64_t;

// Error taxonomy. Every failure the library reports is one of these so the CLI
// can map them to a one-line diagnostic.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error("configuration error: " + key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class StateError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class EmptyBufferError : public Error {
public:
    using Error::Error;
};

class InsufficientSamplesError : public Error {
public:
    using Error::Error;
};

/// SplitMix64 finalizer. Used both to seed engines and to derive independent
/// per-consumer seeds from one root seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive the seed for a named consumer ("corpus", "model", "sampler", ...).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view consumer) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : consumer) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return splitmix64(root ^ splitmix64(h));
}

/// Portable deterministic RNG. The standard distributions are
/// implementation-defined, so all variates are derived from the raw engine
/// output here to keep generated data identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        if (n <= 1) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    /// Uniform integer in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) noexcept { return lo + below(hi - lo + 1); }

    /// Standard normal via Box-Muller (one variate per call, the pair's second half is discarded).
    double normal() noexcept;

private:
    std::uint64_t state_;
};

/// Nearest-rank percentile position: the 1-based rank ceil(percent/100 * m),
/// clamped to [1, m]. Integer arithmetic so that e.g. 20% of 15 is exactly rank 3.
constexpr std::size_t nearest_rank(unsigned percent, std::size_t m) noexcept {
    if (m == 0) return 0;
    std::size_t rank = (static_cast<std::size_t>(percent) * m + 99) / 100;
    if (rank < 1) rank = 1;
    if (rank > m) rank = m;
    return rank;
}

inline constexpr std::string_view kVersion = "pbs 1.0.0";

}  // namespace pbs
