#pragma once

#include <array>
#include <cstdint>

#include "pbs/corpus.hpp"
#include "pbs/freqstats.hpp"

namespace pbs {

inline constexpr std::size_t kNumFeatures = 4;

struct FeatureVector {
    double avg_freq = 0.0;    // mean token frequency
    double length = 0.0;      // n / n_max
    double diversity = 0.0;   // distinct tokens / n
    double rare_ratio = 0.0;  // fraction of rare tokens

    std::array<double, kNumFeatures> as_array() const noexcept { return {avg_freq, length, diversity, rare_ratio}; }
    static FeatureVector from_array(const std::array<double, kNumFeatures>& a) noexcept {
        return {a[0], a[1], a[2], a[3]};
    }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// The four static difficulty features of a sample. Requires 1 <= n <= n_max.
FeatureVector extract_features(const Sample& sample, const FrequencyTable& table, std::uint32_t n_max);

}  // namespace pbs
