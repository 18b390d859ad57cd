#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbs/corpus.hpp"
#include "pbs/features.hpp"
#include "pbs/freqstats.hpp"
#include "pbs/predictor.hpp"

namespace pbs {

enum class Bucket : std::uint8_t { High = 0, Medium = 1, Low = 2 };
inline constexpr std::size_t kNumBuckets = 3;

struct ScoredSample {
    Sample sample;
    FeatureVector features;
    double predicted_loss = 0.0;
    Bucket bucket = Bucket::Low;
    // False until a frequency table exists (warmup admissions).
    bool has_features = false;
};

/// Bucket draw probabilities (r^2, r, 1) / (r^2 + r + 1) for high, medium, low.
struct SamplerPolicy {
    double ratio = 2.0;

    explicit SamplerPolicy(double r = 2.0);
    std::array<double, kNumBuckets> bucket_probs() const noexcept;
};

/// Draws a bucket index with the policy probabilities renormalized over the
/// buckets whose size is non-zero. At least one bucket must be non-empty.
Bucket choose_bucket(const std::array<double, kNumBuckets>& probs, const std::array<std::size_t, kNumBuckets>& sizes,
                     Rng& rng);

struct Batch {
    std::vector<ScoredSample> items;
    std::array<std::size_t, kNumBuckets> drawn_per_bucket{};
};

/// Nearest-rank percentile (integer percent) of an unsorted list.
double percentile_nearest_rank(std::span<const double> values, unsigned percent);

class SampleBuffer {
public:
    explicit SampleBuffer(std::size_t capacity);

    /// Pulls from the stream until the pool is full or the stream ends, then
    /// re-partitions. Without a table, admitted samples carry no features and
    /// score as the bias. Returns the number admitted. Throws EmptyBufferError
    /// if the pool is still empty afterwards.
    std::size_t refill(SampleStream& stream, const PredictorState& state, const FrequencyTable* table,
                       std::uint32_t n_max);

    /// Computes cached features for pooled samples that have none, or for all
    /// of them when `force` is set.
    void featurize(const FrequencyTable& table, std::uint32_t n_max, bool force = false);

    /// Recomputes every prediction from cached features, then re-partitions.
    void rescore(const PredictorState& state);

    /// Sets p33/p67 from the pool and assigns buckets: high > p67,
    /// p33 < medium <= p67, low <= p33.
    void partition();

    /// Priority draw without replacement; drawn samples leave the pool.
    Batch sample_batch(const SamplerPolicy& policy, std::size_t batch_size, Rng& rng);

    /// Uniform draw without replacement, ignoring buckets.
    Batch uniform_batch(std::size_t batch_size, Rng& rng);

    /// Removes and returns everything left in the pool.
    std::vector<ScoredSample> drain();

    std::size_t size() const noexcept { return pool_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool empty() const noexcept { return pool_.empty(); }
    std::span<const ScoredSample> pool() const noexcept { return pool_; }
    double p33() const noexcept { return p33_; }
    double p67() const noexcept { return p67_; }
    std::array<std::size_t, kNumBuckets> bucket_sizes() const noexcept;
    std::span<const std::size_t> bucket_members(Bucket b) const noexcept {
        return buckets_[static_cast<std::size_t>(b)];
    }

private:
    void rebuild_buckets();
    void remove_indices(std::vector<std::size_t> indices);

    std::size_t capacity_;
    std::vector<ScoredSample> pool_;
    std::array<std::vector<std::size_t>, kNumBuckets> buckets_;
    double p33_ = 0.0;
    double p67_ = 0.0;
};

}  // namespace pbs
