#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbs/common.hpp"
#include "pbs/corpus.hpp"

namespace pbs {

/// Normalized token frequencies plus the rare-token classification.
/// Immutable once built; safe to share read-only.
class FrequencyTable {
public:
    FrequencyTable() = default;
    FrequencyTable(std::vector<std::uint64_t> counts, std::uint64_t total);

    double frequency(TokenId t) const;
    bool is_rare(TokenId t) const;

    double rare_threshold() const noexcept { return rare_threshold_; }
    std::uint32_t vocab_size() const noexcept { return static_cast<std::uint32_t>(freqs_.size()); }
    std::span<const double> frequencies() const noexcept { return freqs_; }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    // Stored as char to keep a contiguous span (vector<bool> has none).
    std::span<const char> rare_flags() const noexcept { return rare_; }

private:
    std::vector<std::uint64_t> counts_;
    std::vector<double> freqs_;
    std::vector<char> rare_;
    double rare_threshold_ = 0.0;
};

class FrequencyTracker {
public:
    explicit FrequencyTracker(std::uint32_t vocab_size);

    void observe(const Sample& sample);

    /// Builds the table and freezes the tracker. Calling it again returns an
    /// identical table.
    FrequencyTable finalize();

    /// Builds a table from the current counts without freezing (used when
    /// frequencies keep accumulating past warmup).
    FrequencyTable snapshot() const;

    bool frozen() const noexcept { return frozen_; }
    std::uint64_t total() const noexcept { return total_; }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    bool frozen_ = false;
};

/// Percentile used for the rare-token threshold.
inline constexpr unsigned kRarePercentile = 20;

}  // namespace pbs
