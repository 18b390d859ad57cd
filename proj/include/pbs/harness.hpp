#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pbs/corpus.hpp"
#include "pbs/predictor.hpp"
#include "pbs/scheduler.hpp"

namespace pbs {

// ---------------------------------------------------------------------------
// Tiny next-token model
// ---------------------------------------------------------------------------

/// Bigram neural LM: logits(next | t) = E[t] * W, softmax over the vocabulary.
/// E is vocab x dim, W is dim x vocab, both row-major.
class TinyLM {
public:
    TinyLM(std::uint32_t vocab_size, std::uint32_t dim);

    /// E ~ N(0, init_scale^2), W = 0, so a fresh model predicts the uniform
    /// distribution.
    static TinyLM initialized(std::uint32_t vocab_size, std::uint32_t dim, double init_scale, Rng& rng);

    std::uint32_t vocab_size() const noexcept { return vocab_; }
    std::uint32_t dim() const noexcept { return dim_; }
    bool finite() const noexcept;

    std::vector<double> embedding;   // vocab x dim
    std::vector<double> projection;  // dim x vocab

    friend bool operator==(const TinyLM&, const TinyLM&) = default;

private:
    std::uint32_t vocab_;
    std::uint32_t dim_;
};

struct LmGradient {
    std::vector<double> embedding;
    std::vector<double> projection;
};

/// Per-sample mean shifted cross-entropy: position i predicts token i+1 from
/// token i. Every sample needs at least two tokens.
std::vector<double> per_sample_loss(const TinyLM& model, std::span<const Sample> batch);

/// Training objective: the mean of per-sample losses.
double batch_objective(const TinyLM& model, std::span<const Sample> batch);

/// Analytic gradient of batch_objective. Optionally returns the per-sample
/// losses computed on the way.
LmGradient objective_gradient(const TinyLM& model, std::span<const Sample> batch,
                              std::vector<double>* losses = nullptr);

/// One SGD step on the mean loss. Returns the pre-update per-sample losses.
/// Throws NumericError (model untouched) on a non-finite gradient.
std::vector<double> train_step(TinyLM& model, std::span<const Sample> batch, double lr);

/// Mean per-sample loss over the set; no parameter updates.
double evaluate(const TinyLM& model, std::span<const Sample> eval_set);

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

enum class Mode { Pbs, Uniform };
std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view text);

struct TrainConfig {
    // Scheduling hyperparameters.
    std::uint64_t warmup_steps = 100;
    std::uint64_t update_interval = 100;
    std::size_t history_capacity = 10000;
    std::size_t update_window = 2000;
    std::size_t min_update_entries = 64;
    std::size_t buffer_size = 1000;
    double ratio = 2.0;
    double predictor_lr = 0.01;
    double momentum = 0.9;
    bool standardize_features = true;
    bool freeze_freqs = true;

    // Model training.
    std::size_t batch_size = 16;
    std::uint64_t total_steps = 2000;
    std::uint64_t eval_interval = 500;
    double model_lr_peak = 0.5;
    double model_lr_final = 0.05;
    double lr_warmup_fraction = 0.05;
    std::uint32_t embedding_dim = 16;
    double init_scale = 0.1;
    std::size_t train_loss_window = 100;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending key.
    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Linear warmup over the first lr_warmup_fraction of steps to the peak, then
/// linear decay to the final rate at total_steps. `step` is 1-based.
double learning_rate_at(const TrainConfig& config, std::uint64_t step) noexcept;

struct Dataset {
    std::uint32_t vocab_size = 0;
    std::uint32_t n_max = 0;
    std::vector<Sample> train;
    std::vector<Sample> eval;
};

Dataset make_dataset(const Corpus& corpus, double eval_fraction);

struct CheckpointRecord {
    std::uint64_t step = 0;
    Mode mode = Mode::Pbs;
    double train_loss = 0.0;
    double eval_loss = 0.0;
    double correlation = 0.0;
    bool degenerate = false;
    std::array<double, kNumFeatures> weights{};
    double bias = 0.0;

    friend bool operator==(const CheckpointRecord&, const CheckpointRecord&) = default;
};

struct TraceRow {
    std::uint64_t step = 0;
    std::array<std::size_t, kNumBuckets> bucket_counts{};  // pool buckets before the draw
    std::array<std::size_t, kNumBuckets> drawn{};          // all zero for uniform draws

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Per-epoch bookkeeping for the conservation audit.
struct EpochLog {
    std::vector<SampleId> admitted;
    std::vector<SampleId> drawn;
    std::vector<SampleId> flushed;  // left in the pool when the epoch rolled over
};

struct ExperimentResult {
    std::vector<CheckpointRecord> records;
    std::vector<TraceRow> trace;
    std::vector<EpochLog> epochs;
    std::vector<std::vector<SampleId>> batches;  // drawn ids per step
    TinyLM initial_model{2, 1};
    PredictorState final_predictor;
};

/// Runs one training experiment end to end. Deterministic in (config, data,
/// mode). The corpus must be able to fill at least one batch.
ExperimentResult run_experiment(const TrainConfig& config, const Dataset& data, Mode mode);

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

/// (baseline - pbs) / baseline as a percentage.
double improvement_percent(double baseline_eval, double pbs_eval);

struct ComparisonRow {
    std::uint64_t step = 0;
    double pbs_eval = 0.0;
    double baseline_eval = 0.0;
    double improvement_pct = 0.0;
    double correlation = 0.0;
    bool degenerate = false;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double final_train_loss_ratio = 0.0;  // pbs / baseline at the last checkpoint
};

/// Throws ContractError if the checkpoint schedules differ.
ComparisonReport compare(std::span<const CheckpointRecord> pbs, std::span<const CheckpointRecord> baseline);

}  // namespace pbs
