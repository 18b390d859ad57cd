#include "pbs/freqstats.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace pbs {

FrequencyTracker::FrequencyTracker(std::uint32_t vocab_size) : counts_(vocab_size, 0) {
    if (vocab_size == 0) throw ContractError("frequency tracker needs a non-empty vocabulary");
}

void FrequencyTracker::observe(const Sample& sample) {
    if (frozen_) throw StateError("observe on a frozen frequency tracker");
    for (TokenId t : sample.tokens)
        if (t >= counts_.size())
            throw BoundsError("token " + std::to_string(t) + " outside vocabulary of size " + std::to_string(counts_.size()));
    for (TokenId t : sample.tokens) ++counts_[t];
    total_ += sample.size();
}

FrequencyTable FrequencyTracker::snapshot() const {
    if (total_ == 0) throw StateError("cannot build frequencies from an empty tracker");
    return FrequencyTable(counts_, total_);
}

FrequencyTable FrequencyTracker::finalize() {
    auto table = snapshot();
    frozen_ = true;
    return table;
}

FrequencyTable::FrequencyTable(std::vector<std::uint64_t> counts, std::uint64_t total)
    : counts_(std::move(counts)), freqs_(counts_.size()), rare_(counts_.size(), 0) {
    if (total == 0 || std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}) != total)
        throw StateError("frequency counts do not sum to the recorded total");

    std::vector<double> seen;
    seen.reserve(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        freqs_[i] = static_cast<double>(counts_[i]) / static_cast<double>(total);
        if (counts_[i] > 0) seen.push_back(freqs_[i]);
    }
    std::sort(seen.begin(), seen.end());
    rare_threshold_ = seen[nearest_rank(kRarePercentile, seen.size()) - 1];

    // Unseen tokens are rare regardless of the threshold.
    for (std::size_t i = 0; i < counts_.size(); ++i)
        rare_[i] = (counts_[i] == 0 || freqs_[i] < rare_threshold_) ? 1 : 0;
}

double FrequencyTable::frequency(TokenId t) const {
    if (t >= freqs_.size())
        throw BoundsError("token " + std::to_string(t) + " outside vocabulary of size " + std::to_string(freqs_.size()));
    return freqs_[t];
}

bool FrequencyTable::is_rare(TokenId t) const {
    if (t >= rare_.size())
        throw BoundsError("token " + std::to_string(t) + " outside vocabulary of size " + std::to_string(rare_.size()));
    return rare_[t] != 0;
}

}  // namespace pbs
