#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <string>

#include "pbs/harness.hpp"
#include "pbs/log.hpp"

namespace pbs {

std::string_view to_string(Mode mode) noexcept { return mode == Mode::Pbs ? "pbs" : "uniform"; }

Mode parse_mode(std::string_view text) {
    if (text == "pbs") return Mode::Pbs;
    if (text == "uniform") return Mode::Uniform;
    throw ConfigError("mode", "expected pbs or uniform, got '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (warmup_steps < 1) throw ConfigError("pbs.warmup_steps", "must be >= 1");
    if (update_interval < 1) throw ConfigError("pbs.update_interval", "must be >= 1");
    if (history_capacity < 1) throw ConfigError("pbs.history_capacity", "must be >= 1");
    if (update_window < 1) throw ConfigError("pbs.update_window", "must be >= 1");
    if (update_window > history_capacity) throw ConfigError("pbs.update_window", "must not exceed history_capacity");
    if (min_update_entries < 1) throw ConfigError("pbs.min_update_entries", "must be >= 1");
    if (buffer_size < 1) throw ConfigError("pbs.buffer_size", "must be >= 1");
    if (!positive(ratio)) throw ConfigError("pbs.ratio", "must be a positive number");
    if (!positive(predictor_lr)) throw ConfigError("pbs.predictor_lr", "must be a positive number");
    if (!(std::isfinite(momentum) && momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("pbs.momentum", "must be in [0, 1)");
    if (batch_size < 1) throw ConfigError("training.batch_size", "must be >= 1");
    if (batch_size > buffer_size) throw ConfigError("training.batch_size", "must not exceed pbs.buffer_size");
    if (total_steps < 1) throw ConfigError("training.total_steps", "must be >= 1");
    if (eval_interval < 1) throw ConfigError("training.eval_interval", "must be >= 1");
    if (!(std::isfinite(model_lr_peak) && model_lr_peak >= 0.0))
        throw ConfigError("training.model_lr_peak", "must be a finite non-negative number");
    if (!(std::isfinite(model_lr_final) && model_lr_final >= 0.0))
        throw ConfigError("training.model_lr_final", "must be a finite non-negative number");
    if (!(std::isfinite(lr_warmup_fraction) && lr_warmup_fraction >= 0.0 && lr_warmup_fraction <= 1.0))
        throw ConfigError("training.lr_warmup_fraction", "must be in [0, 1]");
    if (embedding_dim < 1) throw ConfigError("training.embedding_dim", "must be >= 1");
    if (!(std::isfinite(init_scale) && init_scale >= 0.0))
        throw ConfigError("training.init_scale", "must be a finite non-negative number");
    if (train_loss_window < 1) throw ConfigError("training.train_loss_window", "must be >= 1");
}

double learning_rate_at(const TrainConfig& config, std::uint64_t step) noexcept {
    const auto total = static_cast<double>(config.total_steps);
    const double warm = std::floor(config.lr_warmup_fraction * total);
    const auto s = static_cast<double>(step);
    if (warm > 0.0 && s <= warm) return config.model_lr_peak * s / warm;
    if (total <= warm) return config.model_lr_peak;
    const double t = std::clamp((s - warm) / (total - warm), 0.0, 1.0);
    return config.model_lr_peak + (config.model_lr_final - config.model_lr_peak) * t;
}

Dataset make_dataset(const Corpus& corpus, double eval_fraction) {
    auto [train, eval] = split_holdout(corpus, eval_fraction);
    return {corpus.vocab_size, corpus.n_max, std::move(train), std::move(eval)};
}

namespace {

std::vector<Sample> samples_of(const Batch& batch) {
    std::vector<Sample> out;
    out.reserve(batch.items.size());
    for (const auto& item : batch.items) out.push_back(item.sample);
    return out;
}

}  // namespace

ExperimentResult run_experiment(const TrainConfig& config, const Dataset& data, Mode mode) {
    config.validate();
    if (data.train.empty()) throw ContractError("training set is empty");
    if (data.eval.empty()) throw ContractError("evaluation set is empty");

    Rng model_rng(derive_seed(config.seed, "model"));
    Rng sampler_rng(derive_seed(config.seed, "sampler"));

    ExperimentResult result;
    TinyLM model = TinyLM::initialized(data.vocab_size, config.embedding_dim, config.init_scale, model_rng);
    result.initial_model = model;

    FrequencyTracker tracker(data.vocab_size);
    std::optional<FrequencyTable> table;
    PredictorState predictor;
    predictor.beta = config.momentum;
    predictor.lr = config.predictor_lr;
    predictor.standardize = config.standardize_features;
    LossHistory history(config.history_capacity);
    const UpdateOptions update_options{config.update_window, config.min_update_entries, true};
    const SamplerPolicy policy(config.ratio);

    SampleBuffer buffer(config.buffer_size);
    auto stream = std::make_optional<SampleStream>(data.train);
    result.epochs.emplace_back();

    // Warmup draws are held until the frequency table exists.
    std::vector<std::pair<Sample, double>> warmup_pending;
    std::vector<double> window_predicted;
    std::vector<double> window_actual;
    std::deque<double> recent_train;
    double recent_train_sum = 0.0;

    auto refill = [&] {
        const auto before = buffer.size();
        const auto start = stream->position();
        buffer.refill(*stream, predictor, table ? &*table : nullptr, data.n_max);
        for (std::size_t i = start; i < stream->position(); ++i) result.epochs.back().admitted.push_back(data.train[i].id);
        return buffer.size() - before;
    };

    auto on_table_ready = [&] {
        buffer.featurize(*table, data.n_max);
        for (const auto& [sample, loss] : warmup_pending) history.record(extract_features(sample, *table, data.n_max), loss);
        warmup_pending.clear();
        buffer.rescore(predictor);
    };

    for (std::uint64_t step = 1; step <= config.total_steps; ++step) {
        if (buffer.size() < buffer.capacity() && !stream->exhausted()) refill();
        if (buffer.size() < config.batch_size) {
            if (!stream->exhausted())
                throw InsufficientSamplesError("buffer cannot hold a full batch");
            for (const auto& left : buffer.drain()) result.epochs.back().flushed.push_back(left.sample.id);
            stream.emplace(data.train);
            result.epochs.emplace_back();
            PBS_LOG_DEBUG("step " << step << ": starting epoch " << result.epochs.size());
            refill();
            if (buffer.size() < config.batch_size)
                throw InsufficientSamplesError("training set has " + std::to_string(data.train.size()) +
                                               " samples, fewer than one batch of " +
                                               std::to_string(config.batch_size));
        }

        const bool warmup = step <= config.warmup_steps;
        TraceRow trace{step, buffer.bucket_sizes(), {}};
        Batch batch = (mode == Mode::Pbs && !warmup) ? buffer.sample_batch(policy, config.batch_size, sampler_rng)
                                                     : buffer.uniform_batch(config.batch_size, sampler_rng);
        trace.drawn = batch.drawn_per_bucket;
        result.trace.push_back(trace);

        std::vector<SampleId> ids;
        ids.reserve(batch.items.size());
        for (const auto& item : batch.items) ids.push_back(item.sample.id);
        auto& drawn_log = result.epochs.back().drawn;
        drawn_log.insert(drawn_log.end(), ids.begin(), ids.end());
        result.batches.push_back(std::move(ids));

        const auto samples = samples_of(batch);
        const auto losses = train_step(model, samples, learning_rate_at(config, step));
        if (!model.finite()) throw NumericError("model parameters became non-finite at step " + std::to_string(step));

        double batch_mean = 0.0;
        for (double l : losses) batch_mean += l;
        batch_mean /= static_cast<double>(losses.size());
        recent_train.push_back(batch_mean);
        recent_train_sum += batch_mean;
        if (recent_train.size() > config.train_loss_window) {
            recent_train_sum -= recent_train.front();
            recent_train.pop_front();
        }

        if (!table) {
            for (std::size_t i = 0; i < samples.size(); ++i) {
                tracker.observe(samples[i]);
                warmup_pending.emplace_back(samples[i], losses[i]);
            }
            if (step == config.warmup_steps) {
                table = config.freeze_freqs ? tracker.finalize() : tracker.snapshot();
                on_table_ready();
                PBS_LOG_INFO(to_string(mode) << " step " << step << ": warmup done, rare threshold "
                                             << table->rare_threshold());
            }
        } else {
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const auto& item = batch.items[i];
                const FeatureVector phi =
                    item.has_features ? item.features : extract_features(item.sample, *table, data.n_max);
                history.record(phi, losses[i]);
                window_predicted.push_back(item.predicted_loss);
                window_actual.push_back(losses[i]);
                if (!config.freeze_freqs) tracker.observe(item.sample);
            }
        }

        if (mode == Mode::Pbs && table && step % config.update_interval == 0) {
            if (!config.freeze_freqs) {
                table = tracker.snapshot();
                buffer.featurize(*table, data.n_max, /*force=*/true);
            }
            const auto updated = update(predictor, history, update_options);
            if (updated.applied) {
                predictor = updated.state;
                buffer.rescore(predictor);
            }
        }

        if (step % config.eval_interval == 0 || step == config.total_steps) {
            CheckpointRecord rec;
            rec.step = step;
            rec.mode = mode;
            rec.train_loss = recent_train_sum / static_cast<double>(recent_train.size());
            rec.eval_loss = evaluate(model, data.eval);
            if (window_predicted.size() >= 2) {
                const auto c = correlation(window_predicted, window_actual);
                rec.correlation = c.r;
                rec.degenerate = c.degenerate;
            } else {
                rec.correlation = 0.0;
                rec.degenerate = true;
            }
            rec.weights = predictor.weights;
            rec.bias = predictor.bias;
            if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.eval_loss))
                throw NumericError("non-finite loss at checkpoint step " + std::to_string(step));
            PBS_LOG_INFO(to_string(mode) << " step " << step << ": train " << rec.train_loss << " eval "
                                         << rec.eval_loss << " corr " << rec.correlation);
            result.records.push_back(rec);
            window_predicted.clear();
            window_actual.clear();
        }
    }
    result.final_predictor = predictor;
    return result;
}

double improvement_percent(double baseline_eval, double pbs_eval) {
    if (!(baseline_eval > 0.0)) {
        if (baseline_eval == pbs_eval) return 0.0;
        throw ContractError("improvement needs a positive baseline loss");
    }
    return 100.0 * (baseline_eval - pbs_eval) / baseline_eval;
}

ComparisonReport compare(std::span<const CheckpointRecord> pbs, std::span<const CheckpointRecord> baseline) {
    if (pbs.size() != baseline.size() || pbs.empty())
        throw ContractError("comparison needs two non-empty runs with the same checkpoint schedule");
    ComparisonReport report;
    for (std::size_t i = 0; i < pbs.size(); ++i) {
        if (pbs[i].step != baseline[i].step)
            throw ContractError("checkpoint schedules differ at row " + std::to_string(i));
        report.rows.push_back({pbs[i].step, pbs[i].eval_loss, baseline[i].eval_loss,
                               improvement_percent(baseline[i].eval_loss, pbs[i].eval_loss), pbs[i].correlation,
                               pbs[i].degenerate});
    }
    const double base_train = baseline.back().train_loss;
    report.final_train_loss_ratio = base_train > 0.0 ? pbs.back().train_loss / base_train : 0.0;
    return report;
}

}  // namespace pbs
