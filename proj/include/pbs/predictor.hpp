#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pbs/features.hpp"

namespace pbs {

inline constexpr double kStdFloor = 1e-8;

/// Online linear loss predictor: prediction = bias + sum_j w_j * z_j, where z
/// is the feature vector standardized with the statistics of the most recent
/// update window (or the raw features when standardization is off).
struct PredictorState {
    std::array<double, kNumFeatures> weights{};
    double bias = 0.0;
    // One accumulator per weight, the last one for the bias.
    std::array<double, kNumFeatures + 1> momentum{};
    double beta = 0.9;
    double lr = 0.01;
    std::array<double, kNumFeatures> norm_mean{};
    std::array<double, kNumFeatures> norm_std{1.0, 1.0, 1.0, 1.0};
    bool standardize = true;
    bool bias_initialized = false;

    std::array<double, kNumFeatures> standardized(const FeatureVector& phi) const noexcept;
    bool finite() const noexcept;

    friend bool operator==(const PredictorState&, const PredictorState&) = default;
};

double predict(const PredictorState& state, const FeatureVector& phi) noexcept;

struct HistoryEntry {
    FeatureVector features;
    double loss = 0.0;
};

/// Bounded FIFO of (features, observed loss); evicts oldest first.
class LossHistory {
public:
    explicit LossHistory(std::size_t capacity);

    /// Throws DataError (and leaves the history unchanged) for a negative or
    /// non-finite loss.
    void record(const FeatureVector& phi, double loss);

    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return ring_.size(); }
    /// The most recent min(k, size) entries, oldest first.
    std::vector<HistoryEntry> recent(std::size_t k) const;
    const HistoryEntry& at(std::size_t i) const;  // 0 = oldest

private:
    std::vector<HistoryEntry> ring_;
    std::size_t head_ = 0;  // index of the oldest entry
    std::size_t size_ = 0;
};

struct UpdateOptions {
    std::size_t window = 2000;
    std::size_t min_entries = 64;
    // Set the bias to the window's mean loss before the first gradient step.
    bool warm_start_bias = true;
};

struct UpdateResult {
    PredictorState state;
    bool applied = false;
    std::array<double, kNumFeatures + 1> gradient{};
};

/// Gradient of L = (1/2k) * sum (prediction - loss)^2 with respect to
/// (w_1..w_4, bias), using the state's current normalization.
std::array<double, kNumFeatures + 1> loss_gradient(const PredictorState& state, std::span<const HistoryEntry> entries);

/// Mean and (floored, population) standard deviation of each feature.
void fit_normalization(PredictorState& state, std::span<const HistoryEntry> entries);

/// One momentum-SGD step on the most recent `window` entries. Skipped (state
/// returned unchanged, applied = false) when fewer than min_entries exist.
/// Throws NumericError if the step would produce a non-finite value.
UpdateResult update(const PredictorState& state, const LossHistory& history, const UpdateOptions& options);

struct Correlation {
    double r = 0.0;
    bool degenerate = false;
};

/// Pearson correlation. A constant input gives {0, degenerate}. Throws
/// ContractError on mismatched lengths or fewer than two points.
Correlation correlation(std::span<const double> predicted, std::span<const double> actual);

}  // namespace pbs
