#include <algorithm>
#include <cmath>
#include <string>

#include "pbs/harness.hpp"

namespace pbs {

namespace {

// Log-softmax rows for each distinct conditioning token in a batch. Positions
// sharing an input token share the same distribution, so each row is
// computed once.
struct RowCache {
    std::vector<std::int32_t> slot;   // vocab -> row index or -1
    std::vector<TokenId> inputs;      // row index -> token
    std::vector<double> log_probs;    // rows x vocab

    RowCache(const TinyLM& model, std::span<const Sample> batch) : slot(model.vocab_size(), -1) {
        for (const auto& s : batch) {
            if (s.size() < 2)
                throw ContractError("sample " + std::to_string(s.id) + " has fewer than two tokens");
            for (std::size_t i = 0; i + 1 < s.size(); ++i) {
                const TokenId a = s.tokens[i];
                if (a >= model.vocab_size() || s.tokens[i + 1] >= model.vocab_size())
                    throw BoundsError("sample " + std::to_string(s.id) + " has a token outside the model vocabulary");
                if (slot[a] < 0) {
                    slot[a] = static_cast<std::int32_t>(inputs.size());
                    inputs.push_back(a);
                }
            }
        }
        const std::size_t vocab = model.vocab_size();
        const std::size_t dim = model.dim();
        log_probs.assign(inputs.size() * vocab, 0.0);
        for (std::size_t r = 0; r < inputs.size(); ++r) {
            double* z = &log_probs[r * vocab];
            const double* e = &model.embedding[inputs[r] * dim];
            for (std::size_t k = 0; k < dim; ++k) {
                const double ek = e[k];
                const double* w = &model.projection[k * vocab];
                for (std::size_t v = 0; v < vocab; ++v) z[v] += ek * w[v];
            }
            const double m = *std::max_element(z, z + vocab);
            double sum = 0.0;
            for (std::size_t v = 0; v < vocab; ++v) sum += std::exp(z[v] - m);
            const double lse = m + std::log(sum);
            for (std::size_t v = 0; v < vocab; ++v) z[v] -= lse;
        }
    }

    double log_prob(TokenId input, TokenId target, std::size_t vocab) const {
        return log_probs[static_cast<std::size_t>(slot[input]) * vocab + target];
    }
};

std::vector<double> losses_from_cache(const RowCache& cache, std::span<const Sample> batch, std::size_t vocab) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (const auto& s : batch) {
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) sum -= cache.log_prob(s.tokens[i], s.tokens[i + 1], vocab);
        out.push_back(sum / static_cast<double>(s.size() - 1));
    }
    return out;
}

}  // namespace

TinyLM::TinyLM(std::uint32_t vocab_size, std::uint32_t dim)
    : embedding(static_cast<std::size_t>(vocab_size) * dim, 0.0),
      projection(static_cast<std::size_t>(vocab_size) * dim, 0.0),
      vocab_(vocab_size),
      dim_(dim) {
    if (vocab_size < 2 || dim < 1) throw ContractError("model needs vocab >= 2 and dim >= 1");
}

TinyLM TinyLM::initialized(std::uint32_t vocab_size, std::uint32_t dim, double init_scale, Rng& rng) {
    TinyLM model(vocab_size, dim);
    for (double& e : model.embedding) e = init_scale * rng.normal();
    return model;
}

bool TinyLM::finite() const noexcept {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(embedding.begin(), embedding.end(), ok) && std::all_of(projection.begin(), projection.end(), ok);
}

std::vector<double> per_sample_loss(const TinyLM& model, std::span<const Sample> batch) {
    const RowCache cache(model, batch);
    return losses_from_cache(cache, batch, model.vocab_size());
}

double batch_objective(const TinyLM& model, std::span<const Sample> batch) {
    if (batch.empty()) throw ContractError("objective of an empty batch");
    const auto losses = per_sample_loss(model, batch);
    double sum = 0.0;
    for (double l : losses) sum += l;
    return sum / static_cast<double>(losses.size());
}

LmGradient objective_gradient(const TinyLM& model, std::span<const Sample> batch, std::vector<double>* losses) {
    if (batch.empty()) throw ContractError("gradient of an empty batch");
    const RowCache cache(model, batch);
    const std::size_t vocab = model.vocab_size();
    const std::size_t dim = model.dim();
    const std::size_t rows = cache.inputs.size();

    // d objective / d logits, accumulated per conditioning token:
    // sum over positions of weight * (softmax - onehot(target)).
    std::vector<double> weight(rows, 0.0);
    std::vector<double> dlogits(rows * vocab, 0.0);
    const double per_sample = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const double w = per_sample / static_cast<double>(s.size() - 1);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            const auto r = static_cast<std::size_t>(cache.slot[s.tokens[i]]);
            weight[r] += w;
            dlogits[r * vocab + s.tokens[i + 1]] -= w;
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const double* lp = &cache.log_probs[r * vocab];
        double* g = &dlogits[r * vocab];
        for (std::size_t v = 0; v < vocab; ++v) g[v] += weight[r] * std::exp(lp[v]);
    }

    LmGradient grad{std::vector<double>(model.embedding.size(), 0.0), std::vector<double>(model.projection.size(), 0.0)};
    for (std::size_t r = 0; r < rows; ++r) {
        const TokenId a = cache.inputs[r];
        const double* e = &model.embedding[a * dim];
        const double* g = &dlogits[r * vocab];
        double* ge = &grad.embedding[a * dim];
        for (std::size_t k = 0; k < dim; ++k) {
            const double* w = &model.projection[k * vocab];
            double* gw = &grad.projection[k * vocab];
            const double ek = e[k];
            double acc = 0.0;
            for (std::size_t v = 0; v < vocab; ++v) {
                gw[v] += ek * g[v];
                acc += w[v] * g[v];
            }
            ge[k] += acc;
        }
    }
    if (losses != nullptr) *losses = losses_from_cache(cache, batch, vocab);
    return grad;
}

std::vector<double> train_step(TinyLM& model, std::span<const Sample> batch, double lr) {
    std::vector<double> losses;
    const auto grad = objective_gradient(model, batch, &losses);
    auto ok = [](double v) { return std::isfinite(v); };
    if (!std::all_of(grad.embedding.begin(), grad.embedding.end(), ok) ||
        !std::all_of(grad.projection.begin(), grad.projection.end(), ok))
        throw NumericError("non-finite gradient; step aborted");
    if (lr != 0.0) {
        for (std::size_t i = 0; i < model.embedding.size(); ++i) model.embedding[i] -= lr * grad.embedding[i];
        for (std::size_t i = 0; i < model.projection.size(); ++i) model.projection[i] -= lr * grad.projection[i];
    }
    return losses;
}

double evaluate(const TinyLM& model, std::span<const Sample> eval_set) {
    if (eval_set.empty()) throw ContractError("evaluation set is empty");
    return batch_objective(model, eval_set);
}

}  // namespace pbs
