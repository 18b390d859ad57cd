#include "pbs/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace pbs {

std::string_view to_string(DifficultyMode mode) noexcept {
    switch (mode) {
        case DifficultyMode::IidZipf: return "iid-zipf";
        case DifficultyMode::PlantedLinear: return "planted-linear";
    }
    return "iid-zipf";
}

DifficultyMode parse_difficulty_mode(std::string_view text) {
    if (text == "iid-zipf") return DifficultyMode::IidZipf;
    if (text == "planted-linear") return DifficultyMode::PlantedLinear;
    throw ConfigError("corpus.difficulty_mode", "expected iid-zipf or planted-linear, got '" + std::string(text) + "'");
}

void CorpusSpec::validate() const {
    if (vocab_size < 2) throw ConfigError("corpus.vocab_size", "must be >= 2");
    if (!std::isfinite(zipf_exponent) || zipf_exponent < 0.0)
        throw ConfigError("corpus.zipf_exponent", "must be a finite non-negative number");
    if (num_samples < 1) throw ConfigError("corpus.num_samples", "must be >= 1");
    if (min_len < 2) throw ConfigError("corpus.min_len", "must be >= 2");
    if (max_len < min_len) throw ConfigError("corpus.max_len", "must be >= min_len");
    if (!std::isfinite(planted_strength) || planted_strength < 0.0 || planted_strength >= 2.0)
        throw ConfigError("corpus.planted_strength", "must be in [0, 2)");
}

std::vector<double> zipf_probabilities(std::uint32_t vocab_size, double exponent) {
    std::vector<double> p(vocab_size);
    double norm = 0.0;
    for (std::uint32_t k = 0; k < vocab_size; ++k) {
        p[k] = 1.0 / std::pow(static_cast<double>(k + 1), exponent);
        norm += p[k];
    }
    for (double& v : p) v /= norm;
    return p;
}

DiscreteSampler::DiscreteSampler(std::span<const double> probabilities) : cdf_(probabilities.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += probabilities[i];
        cdf_[i] = acc;
    }
    for (double& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
}

std::uint32_t DiscreteSampler::operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<std::uint32_t>(it - cdf_.begin());
}

Corpus generate_corpus(const CorpusSpec& spec) {
    spec.validate();
    Corpus corpus;
    corpus.vocab_size = spec.vocab_size;
    corpus.n_max = spec.max_len;
    corpus.samples.reserve(spec.num_samples);

    Rng rng(spec.seed);
    const auto base = zipf_probabilities(spec.vocab_size, spec.zipf_exponent);
    const DiscreteSampler base_sampler(base);

    for (std::uint64_t i = 0; i < spec.num_samples; ++i) {
        Sample s;
        s.id = i;
        const auto n = static_cast<std::size_t>(rng.between(spec.min_len, spec.max_len));
        s.tokens.resize(n);
        if (spec.difficulty_mode == DifficultyMode::IidZipf) {
            for (auto& t : s.tokens) t = base_sampler(rng);
        } else {
            const double difficulty = rng.uniform();
            const double exponent = spec.zipf_exponent * (1.0 + spec.planted_strength * (0.5 - difficulty));
            const auto probs = zipf_probabilities(spec.vocab_size, exponent);
            const DiscreteSampler sampler(probs);
            for (auto& t : s.tokens) t = sampler(rng);
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

std::vector<TokenId> tokenize(std::string_view text) {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (char c : text) out.push_back(static_cast<unsigned char>(c));
    return out;
}

void validate_sample(const Sample& sample, std::uint32_t vocab_size, std::uint32_t n_max) {
    if (sample.size() < 2 || sample.size() > n_max)
        throw DataError("sample " + std::to_string(sample.id) + " has length " + std::to_string(sample.size()) +
                        ", expected 2.." + std::to_string(n_max));
    for (TokenId t : sample.tokens)
        if (t >= vocab_size)
            throw DataError("sample " + std::to_string(sample.id) + " has token " + std::to_string(t) +
                            " outside vocabulary of size " + std::to_string(vocab_size));
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_holdout(const Corpus& corpus, double eval_fraction) {
    const std::size_t n = corpus.samples.size();
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw ConfigError("corpus.eval_fraction", "must be in (0, 1)");
    if (n < 2) throw ConfigError("corpus.num_samples", "need at least 2 samples to hold out an evaluation slice");
    const auto eval_count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(n))));
    if (eval_count >= n) throw ConfigError("corpus.eval_fraction", "leaves no training samples");
    const auto cut = corpus.samples.begin() + static_cast<std::ptrdiff_t>(n - eval_count);
    return {std::vector<Sample>(corpus.samples.begin(), cut), std::vector<Sample>(cut, corpus.samples.end())};
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    out << "PBS-CORPUS v1 vocab=" << corpus.vocab_size << " n_max=" << corpus.n_max << '\n';
    for (const auto& s : corpus.samples) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (i) out << ' ';
            out << s.tokens[i];
        }
        out << '\n';
    }
}

Corpus read_corpus(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("corpus file is empty");
    Corpus corpus;
    {
        std::istringstream header(line);
        std::string magic, version, vocab, nmax;
        header >> magic >> version >> vocab >> nmax;
        if (magic != "PBS-CORPUS" || version != "v1" || vocab.rfind("vocab=", 0) != 0 || nmax.rfind("n_max=", 0) != 0)
            throw DataError("bad corpus header: '" + line + "'");
        try {
            corpus.vocab_size = static_cast<std::uint32_t>(std::stoul(vocab.substr(6)));
            corpus.n_max = static_cast<std::uint32_t>(std::stoul(nmax.substr(6)));
        } catch (const std::exception&) {
            throw DataError("bad corpus header: '" + line + "'");
        }
    }
    SampleId id = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Sample s;
        s.id = id++;
        std::istringstream row(line);
        long long v = 0;
        while (row >> v) {
            if (v < 0) throw DataError("negative token id on corpus line " + std::to_string(id + 1));
            s.tokens.push_back(static_cast<TokenId>(v));
        }
        if (!row.eof()) throw DataError("non-numeric token on corpus line " + std::to_string(id + 1));
        validate_sample(s, corpus.vocab_size, corpus.n_max);
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace pbs
