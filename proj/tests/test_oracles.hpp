#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it is used to check.

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "pbs/harness.hpp"
#include "pbs/predictor.hpp"

namespace oracle {

inline std::array<double, 4> standardize(const pbs::PredictorState& s, const pbs::FeatureVector& phi) {
    std::array<double, 4> x{phi.avg_freq, phi.length, phi.diversity, phi.rare_ratio};
    if (s.standardize)
        for (int j = 0; j < 4; ++j) x[j] = (x[j] - s.norm_mean[j]) / s.norm_std[j];
    return x;
}

// (1 / 2k) * sum (b + w.z - loss)^2 with theta = (w1..w4, b).
inline double squared_error(const std::array<double, 5>& theta, const pbs::PredictorState& s,
                            std::span<const pbs::HistoryEntry> entries) {
    double total = 0.0;
    for (const auto& e : entries) {
        const auto z = standardize(s, e.features);
        const double r = theta[4] + theta[0] * z[0] + theta[1] * z[1] + theta[2] * z[2] + theta[3] * z[3] - e.loss;
        total += r * r;
    }
    return total / (2.0 * static_cast<double>(entries.size()));
}

inline std::array<double, 5> finite_difference_gradient(const pbs::PredictorState& s,
                                                        std::span<const pbs::HistoryEntry> entries) {
    std::array<double, 5> theta{s.weights[0], s.weights[1], s.weights[2], s.weights[3], s.bias};
    std::array<double, 5> g{};
    for (int j = 0; j < 5; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
        auto plus = theta, minus = theta;
        plus[j] += h;
        minus[j] -= h;
        g[j] = (squared_error(plus, s, entries) - squared_error(minus, s, entries)) / (2.0 * h);
    }
    return g;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
template <std::size_t N>
std::array<double, N> solve(std::array<std::array<double, N>, N> a, std::array<double, N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < N; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

// Least-squares fit of loss on (z1..z4, 1) via the normal equations.
// Returns (w1..w4, b).
inline std::array<double, 5> least_squares(const pbs::PredictorState& s, std::span<const pbs::HistoryEntry> entries) {
    std::array<std::array<double, 5>, 5> xtx{};
    std::array<double, 5> xty{};
    for (const auto& e : entries) {
        const auto z = standardize(s, e.features);
        const std::array<double, 5> row{z[0], z[1], z[2], z[3], 1.0};
        for (int i = 0; i < 5; ++i) {
            xty[i] += row[i] * e.loss;
            for (int j = 0; j < 5; ++j) xtx[i][j] += row[i] * row[j];
        }
    }
    return solve<5>(xtx, xty);
}

// Pearson r from raw power sums.
inline double pearson_sums(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// Direct per-position softmax cross-entropy for the bigram model; no row
// caching or grouping.
inline double tiny_lm_objective(const pbs::TinyLM& m, std::span<const pbs::Sample> batch) {
    const std::size_t v = m.vocab_size(), d = m.dim();
    double total = 0.0;
    for (const auto& s : batch) {
        double sample_loss = 0.0;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            std::vector<double> logits(v, 0.0);
            for (std::size_t o = 0; o < v; ++o)
                for (std::size_t k = 0; k < d; ++k) logits[o] += m.embedding[s.tokens[i] * d + k] * m.projection[k * v + o];
            double z = 0.0;
            for (double l : logits) z += std::exp(l);
            sample_loss += std::log(z) - logits[s.tokens[i + 1]];
        }
        total += sample_loss / static_cast<double>(s.size() - 1);
    }
    return total / static_cast<double>(batch.size());
}

inline pbs::LmGradient tiny_lm_finite_difference(const pbs::TinyLM& model, std::span<const pbs::Sample> batch,
                                                 double h = 1e-5) {
    pbs::LmGradient g{std::vector<double>(model.embedding.size()), std::vector<double>(model.projection.size())};
    pbs::TinyLM m = model;
    for (std::size_t i = 0; i < m.embedding.size(); ++i) {
        const double keep = m.embedding[i];
        m.embedding[i] = keep + h;
        const double up = tiny_lm_objective(m, batch);
        m.embedding[i] = keep - h;
        const double down = tiny_lm_objective(m, batch);
        m.embedding[i] = keep;
        g.embedding[i] = (up - down) / (2.0 * h);
    }
    for (std::size_t i = 0; i < m.projection.size(); ++i) {
        const double keep = m.projection[i];
        m.projection[i] = keep + h;
        const double up = tiny_lm_objective(m, batch);
        m.projection[i] = keep - h;
        const double down = tiny_lm_objective(m, batch);
        m.projection[i] = keep;
        g.projection[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace oracle
