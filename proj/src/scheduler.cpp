#include "pbs/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace pbs {

SamplerPolicy::SamplerPolicy(double r) : ratio(r) {
    if (!std::isfinite(r) || r <= 0.0) throw ConfigError("pbs.ratio", "must be a positive finite number");
}

std::array<double, kNumBuckets> SamplerPolicy::bucket_probs() const noexcept {
    const double norm = ratio * ratio + ratio + 1.0;
    return {ratio * ratio / norm, ratio / norm, 1.0 / norm};
}

Bucket choose_bucket(const std::array<double, kNumBuckets>& probs, const std::array<std::size_t, kNumBuckets>& sizes,
                     Rng& rng) {
    double total = 0.0;
    for (std::size_t b = 0; b < kNumBuckets; ++b)
        if (sizes[b] > 0) total += probs[b];
    if (!(total > 0.0)) throw EmptyBufferError("no non-empty bucket to draw from");

    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t b = 0; b < kNumBuckets; ++b) {
        if (sizes[b] == 0) continue;
        last = b;
        acc += probs[b];
        if (u < acc) return static_cast<Bucket>(b);
    }
    return static_cast<Bucket>(last);
}

double percentile_nearest_rank(std::span<const double> values, unsigned percent) {
    if (values.empty()) throw ContractError("percentile of an empty list");
    std::vector<double> sorted(values.begin(), values.end());
    const auto k = nearest_rank(percent, sorted.size()) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    return sorted[k];
}

SampleBuffer::SampleBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ContractError("sample buffer capacity must be positive");
    pool_.reserve(capacity);
}

std::size_t SampleBuffer::refill(SampleStream& stream, const PredictorState& state, const FrequencyTable* table,
                                 std::uint32_t n_max) {
    std::size_t admitted = 0;
    while (pool_.size() < capacity_) {
        const Sample* s = stream.next();
        if (s == nullptr) break;
        ScoredSample scored;
        scored.sample = *s;
        if (table != nullptr) {
            scored.features = extract_features(*s, *table, n_max);
            scored.has_features = true;
        }
        scored.predicted_loss = predict(state, scored.features);
        pool_.push_back(std::move(scored));
        ++admitted;
    }
    if (pool_.empty()) throw EmptyBufferError("sample stream exhausted and the buffer is empty");
    partition();
    return admitted;
}

void SampleBuffer::featurize(const FrequencyTable& table, std::uint32_t n_max, bool force) {
    for (auto& s : pool_) {
        if (s.has_features && !force) continue;
        s.features = extract_features(s.sample, table, n_max);
        s.has_features = true;
    }
}

void SampleBuffer::rescore(const PredictorState& state) {
    for (auto& s : pool_) s.predicted_loss = predict(state, s.features);
    if (!pool_.empty()) partition();
}

void SampleBuffer::partition() {
    if (pool_.empty()) throw EmptyBufferError("cannot partition an empty buffer");
    std::vector<double> preds;
    preds.reserve(pool_.size());
    for (const auto& s : pool_) preds.push_back(s.predicted_loss);
    p33_ = percentile_nearest_rank(preds, 33);
    p67_ = percentile_nearest_rank(preds, 67);
    for (auto& s : pool_) {
        if (s.predicted_loss > p67_)
            s.bucket = Bucket::High;
        else if (s.predicted_loss > p33_)
            s.bucket = Bucket::Medium;
        else
            s.bucket = Bucket::Low;
    }
    rebuild_buckets();
}

void SampleBuffer::rebuild_buckets() {
    for (auto& b : buckets_) b.clear();
    for (std::size_t i = 0; i < pool_.size(); ++i) buckets_[static_cast<std::size_t>(pool_[i].bucket)].push_back(i);
}

std::array<std::size_t, kNumBuckets> SampleBuffer::bucket_sizes() const noexcept {
    return {buckets_[0].size(), buckets_[1].size(), buckets_[2].size()};
}

void SampleBuffer::remove_indices(std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    std::vector<ScoredSample> kept;
    kept.reserve(pool_.size() - indices.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
        if (next < indices.size() && indices[next] == i) {
            ++next;
            continue;
        }
        kept.push_back(std::move(pool_[i]));
    }
    pool_ = std::move(kept);
    rebuild_buckets();
}

Batch SampleBuffer::sample_batch(const SamplerPolicy& policy, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ContractError("batch size must be positive");
    if (pool_.size() < batch_size)
        throw InsufficientSamplesError("buffer holds " + std::to_string(pool_.size()) + " samples, batch needs " +
                                       std::to_string(batch_size));
    const auto probs = policy.bucket_probs();
    auto remaining = buckets_;
    Batch batch;
    batch.items.reserve(batch_size);
    std::vector<std::size_t> taken;
    taken.reserve(batch_size);
    for (std::size_t slot = 0; slot < batch_size; ++slot) {
        const std::array<std::size_t, kNumBuckets> sizes{remaining[0].size(), remaining[1].size(), remaining[2].size()};
        const auto b = static_cast<std::size_t>(choose_bucket(probs, sizes, rng));
        auto& members = remaining[b];
        const auto pick = static_cast<std::size_t>(rng.below(members.size()));
        const std::size_t index = members[pick];
        members[pick] = members.back();
        members.pop_back();
        taken.push_back(index);
        batch.items.push_back(pool_[index]);
        ++batch.drawn_per_bucket[b];
    }
    remove_indices(std::move(taken));
    return batch;
}

Batch SampleBuffer::uniform_batch(std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ContractError("batch size must be positive");
    if (pool_.size() < batch_size)
        throw InsufficientSamplesError("buffer holds " + std::to_string(pool_.size()) + " samples, batch needs " +
                                       std::to_string(batch_size));
    std::vector<std::size_t> order(pool_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Batch batch;
    batch.items.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
        batch.items.push_back(pool_[order[i]]);
    }
    order.resize(batch_size);
    remove_indices(std::move(order));
    return batch;
}

std::vector<ScoredSample> SampleBuffer::drain() {
    std::vector<ScoredSample> out = std::move(pool_);
    pool_.clear();
    for (auto& b : buckets_) b.clear();
    return out;
}

}  // namespace pbs
