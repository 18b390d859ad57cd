#include "pbs/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pbs {

std::array<double, kNumFeatures> PredictorState::standardized(const FeatureVector& phi) const noexcept {
    auto z = phi.as_array();
    if (standardize)
        for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (z[j] - norm_mean[j]) / norm_std[j];
    return z;
}

bool PredictorState::finite() const noexcept {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(weights.begin(), weights.end(), ok) && std::isfinite(bias) &&
           std::all_of(momentum.begin(), momentum.end(), ok) && std::all_of(norm_mean.begin(), norm_mean.end(), ok) &&
           std::all_of(norm_std.begin(), norm_std.end(), ok);
}

double predict(const PredictorState& state, const FeatureVector& phi) noexcept {
    const auto z = state.standardized(phi);
    double out = state.bias;
    for (std::size_t j = 0; j < kNumFeatures; ++j) out += state.weights[j] * z[j];
    return out;
}

LossHistory::LossHistory(std::size_t capacity) : ring_(capacity) {
    if (capacity == 0) throw ContractError("loss history capacity must be positive");
}

void LossHistory::record(const FeatureVector& phi, double loss) {
    if (!std::isfinite(loss) || loss < 0.0) throw DataError("loss history rejects loss " + std::to_string(loss));
    if (size_ < ring_.size()) {
        ring_[(head_ + size_) % ring_.size()] = {phi, loss};
        ++size_;
    } else {
        ring_[head_] = {phi, loss};
        head_ = (head_ + 1) % ring_.size();
    }
}

const HistoryEntry& LossHistory::at(std::size_t i) const {
    if (i >= size_) throw BoundsError("loss history index " + std::to_string(i) + " out of range");
    return ring_[(head_ + i) % ring_.size()];
}

std::vector<HistoryEntry> LossHistory::recent(std::size_t k) const {
    k = std::min(k, size_);
    std::vector<HistoryEntry> out;
    out.reserve(k);
    for (std::size_t i = size_ - k; i < size_; ++i) out.push_back(ring_[(head_ + i) % ring_.size()]);
    return out;
}

void fit_normalization(PredictorState& state, std::span<const HistoryEntry> entries) {
    const auto k = static_cast<double>(entries.size());
    std::array<double, kNumFeatures> mean{};
    for (const auto& e : entries) {
        const auto x = e.features.as_array();
        for (std::size_t j = 0; j < kNumFeatures; ++j) mean[j] += x[j];
    }
    for (double& m : mean) m /= k;
    std::array<double, kNumFeatures> var{};
    for (const auto& e : entries) {
        const auto x = e.features.as_array();
        for (std::size_t j = 0; j < kNumFeatures; ++j) var[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
    }
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        state.norm_mean[j] = mean[j];
        state.norm_std[j] = std::max(std::sqrt(var[j] / k), kStdFloor);
    }
}

std::array<double, kNumFeatures + 1> loss_gradient(const PredictorState& state, std::span<const HistoryEntry> entries) {
    std::array<double, kNumFeatures + 1> g{};
    if (entries.empty()) return g;
    for (const auto& e : entries) {
        const auto z = state.standardized(e.features);
        double pred = state.bias;
        for (std::size_t j = 0; j < kNumFeatures; ++j) pred += state.weights[j] * z[j];
        const double residual = pred - e.loss;
        for (std::size_t j = 0; j < kNumFeatures; ++j) g[j] += residual * z[j];
        g[kNumFeatures] += residual;
    }
    const auto k = static_cast<double>(entries.size());
    for (double& v : g) v /= k;
    return g;
}

UpdateResult update(const PredictorState& state, const LossHistory& history, const UpdateOptions& options) {
    const std::size_t window = std::max<std::size_t>(options.window, 1);
    if (history.size() < std::max<std::size_t>(options.min_entries, 1)) return {state, false, {}};

    const auto entries = history.recent(window);
    PredictorState next = state;
    if (next.standardize) fit_normalization(next, entries);
    if (options.warm_start_bias && !next.bias_initialized) {
        double mean_loss = 0.0;
        for (const auto& e : entries) mean_loss += e.loss;
        next.bias = mean_loss / static_cast<double>(entries.size());
    }
    next.bias_initialized = true;

    const auto g = loss_gradient(next, entries);
    for (std::size_t j = 0; j <= kNumFeatures; ++j)
        next.momentum[j] = next.beta * next.momentum[j] + (1.0 - next.beta) * g[j];
    for (std::size_t j = 0; j < kNumFeatures; ++j) next.weights[j] -= next.lr * next.momentum[j];
    next.bias -= next.lr * next.momentum[kNumFeatures];

    if (!next.finite()) throw NumericError("predictor update produced a non-finite parameter");
    return {next, true, g};
}

Correlation correlation(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size())
        throw ContractError("correlation needs equal lengths, got " + std::to_string(predicted.size()) + " and " +
                            std::to_string(actual.size()));
    if (predicted.size() < 2) throw ContractError("correlation needs at least two points");

    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(predicted) || constant(actual)) return {0.0, true};

    const auto n = static_cast<double>(predicted.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        mx += predicted[i];
        my += actual[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double dx = predicted[i] - mx;
        const double dy = actual[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0 && syy > 0.0)) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

}  // namespace pbs
