#include "pbs/features.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace pbs {

FeatureVector extract_features(const Sample& sample, const FrequencyTable& table, std::uint32_t n_max) {
    const std::size_t n = sample.size();
    if (n == 0 || n > n_max)
        throw ContractError("feature extraction needs 1 <= n <= n_max, got n=" + std::to_string(n) +
                            " n_max=" + std::to_string(n_max));

    // Accumulate over distinct tokens in sorted order so the result does not
    // depend on token order, and a single repeated token yields f_t exactly.
    std::vector<TokenId> sorted(sample.tokens);
    std::sort(sorted.begin(), sorted.end());
    const auto dn = static_cast<double>(n);
    double avg_freq = 0.0;
    std::size_t rare = 0;
    std::size_t unique = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const auto count = j - i;
        avg_freq += table.frequency(sorted[i]) * (static_cast<double>(count) / dn);
        if (table.is_rare(sorted[i])) rare += count;
        ++unique;
        i = j;
    }

    FeatureVector phi;
    phi.avg_freq = avg_freq;
    phi.length = dn / static_cast<double>(n_max);
    phi.diversity = static_cast<double>(unique) / dn;
    phi.rare_ratio = static_cast<double>(rare) / dn;
    return phi;
}

}  // namespace pbs
