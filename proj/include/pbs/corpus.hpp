#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pbs/common.hpp"

namespace pbs {

struct Sample {
    SampleId id = 0;
    std::vector<TokenId> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class DifficultyMode { IidZipf, PlantedLinear };

std::string_view to_string(DifficultyMode mode) noexcept;
DifficultyMode parse_difficulty_mode(std::string_view text);

struct CorpusSpec {
    std::uint32_t vocab_size = 256;
    double zipf_exponent = 1.0;
    std::uint64_t num_samples = 20000;
    std::uint32_t min_len = 8;
    std::uint32_t max_len = 64;
    std::uint64_t seed = 0;
    DifficultyMode difficulty_mode = DifficultyMode::IidZipf;
    // Planted-linear only: spread of the per-sample Zipf exponent around
    // zipf_exponent. A sample with latent difficulty u in [0,1) uses exponent
    // zipf_exponent * (1 + planted_strength * (0.5 - u)).
    double planted_strength = 0.8;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct Corpus {
    std::uint32_t vocab_size = 0;
    std::uint32_t n_max = 0;
    std::vector<Sample> samples;
};

/// Normalized Zipf probabilities for ranks 1..vocab_size (index 0 is rank 1).
std::vector<double> zipf_probabilities(std::uint32_t vocab_size, double exponent);

/// Inverse-CDF sampler over a fixed discrete distribution.
class DiscreteSampler {
public:
    explicit DiscreteSampler(std::span<const double> probabilities);
    std::uint32_t operator()(Rng& rng) const;

private:
    std::vector<double> cdf_;
};

/// Pure function of the CorpusSpec: identical inputs give identical corpora.
/// Token id k-1 is the rank-k token.
Corpus generate_corpus(const CorpusSpec& spec);

/// Byte-level tokenizer: one token per byte, vocabulary 256.
std::vector<TokenId> tokenize(std::string_view text);
inline constexpr std::uint32_t kByteVocabSize = 256;

/// Throws DataError if the sample violates 2 <= n <= n_max or has an
/// out-of-vocabulary token.
void validate_sample(const Sample& sample, std::uint32_t vocab_size, std::uint32_t n_max);

/// Deterministic held-out split: the last max(1, floor(fraction * N)) samples
/// are the evaluation slice. Returns {train, eval}.
std::pair<std::vector<Sample>, std::vector<Sample>> split_holdout(const Corpus& corpus, double eval_fraction);

/// Single-consumer forward cursor over a sample sequence. Yields each sample
/// once in order, then nullptr forever.
class SampleStream {
public:
    explicit SampleStream(std::span<const Sample> samples) noexcept : samples_(samples) {}

    const Sample* next() noexcept {
        if (pos_ >= samples_.size()) return nullptr;
        return &samples_[pos_++];
    }
    bool exhausted() const noexcept { return pos_ >= samples_.size(); }
    std::size_t position() const noexcept { return pos_; }

private:
    std::span<const Sample> samples_;
    std::size_t pos_ = 0;
};

// "PBS-CORPUS v1 vocab=<V> n_max=<n>" header, then one sample per line.
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);

}  // namespace pbs
