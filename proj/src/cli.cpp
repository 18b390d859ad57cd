#include "pbs/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <vector>

#include <CLI11.hpp>

#include "pbs/config.hpp"
#include "pbs/corpus.hpp"
#include "pbs/harness.hpp"
#include "pbs/log.hpp"
#include "pbs/report.hpp"

namespace fs = std::filesystem;

namespace pbs {

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out;
    std::optional<double> ratio;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> steps;
    std::string mode = "pbs";
    bool trace_sampler = false;
    std::vector<std::string> inputs;
};

RunConfig resolved_config(const CommonOptions& opts) {
    RunConfig config = load_config(opts.config_path);
    apply_overrides(config, {opts.ratio, opts.seed, opts.steps});
    resolve_config(config);
    return config;
}

Corpus load_corpus(const RunConfig& config) {
    if (config.corpus_path.empty()) return generate_corpus(config.corpus);
    std::ifstream in(config.corpus_path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus '" + config.corpus_path + "'");
    return read_corpus(in);
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void write_manifest(const fs::path& dir, const RunConfig& config, const std::string& mode) {
    fs::create_directories(dir);
    auto out = open_output(dir / "manifest.toml");
    write_config(out, config, ManifestInfo{dir.string(), mode});
}

ExperimentResult run_and_write(const RunConfig& config, const Dataset& data, Mode mode, const fs::path& dir,
                               bool trace) {
    auto result = run_experiment(config.train, data, mode);
    const std::string suffix(to_string(mode));
    {
        auto out = open_output(dir / ("metrics_" + suffix + ".csv"));
        write_metrics_csv(out, result.records);
    }
    if (trace) {
        auto out = open_output(dir / ("trace_" + suffix + ".csv"));
        write_trace_csv(out, result.trace);
    }
    return result;
}

void write_comparison_files(const fs::path& dir, const ComparisonReport& report) {
    {
        auto out = open_output(dir / "comparison.csv");
        write_comparison_csv(out, report);
    }
    auto out = open_output(dir / "comparison.json");
    write_comparison_json(out, report);
}

std::vector<CheckpointRecord> read_metrics_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open metrics file '" + path + "'");
    return read_metrics_csv(in);
}

int cmd_generate(const CommonOptions& opts, std::ostream& out) {
    const auto config = resolved_config(opts);
    const auto corpus = generate_corpus(config.corpus);
    auto file = open_output(opts.out);
    write_corpus(file, corpus);
    out << "wrote " << corpus.samples.size() << " samples to " << opts.out << '\n';
    return 0;
}

int cmd_train(const CommonOptions& opts, std::ostream& out) {
    const auto config = resolved_config(opts);
    const Mode mode = parse_mode(opts.mode);
    const fs::path dir(opts.out);
    write_manifest(dir, config, opts.mode);
    const auto data = make_dataset(load_corpus(config), config.eval_fraction);
    const auto result = run_and_write(config, data, mode, dir, opts.trace_sampler);
    write_metrics_table(out, result.records);
    return 0;
}

int cmd_compare(const CommonOptions& opts, std::ostream& out) {
    const auto config = resolved_config(opts);
    const fs::path dir(opts.out);
    write_manifest(dir, config, "compare");
    const auto data = make_dataset(load_corpus(config), config.eval_fraction);
    const auto pbs_run = run_and_write(config, data, Mode::Pbs, dir, opts.trace_sampler);
    const auto base_run = run_and_write(config, data, Mode::Uniform, dir, opts.trace_sampler);
    const auto report = compare(pbs_run.records, base_run.records);
    write_comparison_files(dir, report);
    write_comparison_table(out, report);
    return 0;
}

int cmd_report(const CommonOptions& opts, std::ostream& out) {
    if (opts.inputs.size() == 1) {
        write_metrics_table(out, read_metrics_file(opts.inputs[0]));
        return 0;
    }
    auto first = read_metrics_file(opts.inputs[0]);
    auto second = read_metrics_file(opts.inputs[1]);
    if (!first.empty() && first.front().mode == Mode::Uniform) std::swap(first, second);
    const auto report = compare(first, second);
    write_comparison_table(out, report);
    if (!opts.out.empty()) {
        fs::create_directories(opts.out);
        write_comparison_files(opts.out, report);
    }
    return 0;
}

int cmd_dump_freqs(const CommonOptions& opts, std::ostream& out) {
    const auto config = resolved_config(opts);
    const auto data = make_dataset(load_corpus(config), config.eval_fraction);
    FrequencyTracker tracker(data.vocab_size);
    for (const auto& s : data.train) tracker.observe(s);
    const auto table = tracker.finalize();
    auto file = open_output(opts.out);
    write_frequency_csv(file, table);
    out << "wrote frequencies for " << table.vocab_size() << " tokens to " << opts.out << '\n';
    return 0;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Predictive batch scheduling: corpus generation, training and comparison", "pbs"};
    app.require_subcommand(1);
    CommonOptions opts;

    auto add_config = [&](CLI::App* cmd) { cmd->add_option("--config", opts.config_path, "Config file")->check(CLI::ExistingFile); };
    auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", opts.seed, "Root seed override"); };
    auto add_run_flags = [&](CLI::App* cmd) {
        add_config(cmd);
        add_seed(cmd);
        cmd->add_option("--ratio", opts.ratio, "High-loss sampling ratio override");
        cmd->add_option("--steps", opts.steps, "Total training steps override");
        cmd->add_flag("--trace-sampler", opts.trace_sampler, "Write per-step sampler trace CSVs");
        cmd->add_option("--out", opts.out, "Output directory")->required();
    };

    auto* gen = app.add_subcommand("generate-corpus", "Write a synthetic corpus file");
    add_config(gen);
    add_seed(gen);
    gen->add_option("--out", opts.out, "Corpus output path")->required();

    auto* train = app.add_subcommand("train", "Train one mode and write its metrics");
    add_run_flags(train);
    train->add_option("--mode", opts.mode, "Sampling mode")->check(CLI::IsMember({"pbs", "uniform"}));

    auto* cmp = app.add_subcommand("compare", "Train both modes and compare them");
    add_run_flags(cmp);

    auto* report = app.add_subcommand("report", "Re-render one or two metrics CSVs");
    report->add_option("metrics", opts.inputs, "Metrics CSV files (pbs and uniform)")->required()->expected(1, 2);
    report->add_option("--out", opts.out, "Directory for comparison files");

    auto* dump = app.add_subcommand("dump-freqs", "Write token frequency statistics of the training split");
    add_config(dump);
    add_seed(dump);
    dump->add_option("--out", opts.out, "CSV output path")->required();

    if (args.size() <= 1) {
        err << app.help();
        return 2;
    }
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "pbs: " << e.what() << '\n' << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(opts, out);
        if (train->parsed()) return cmd_train(opts, out);
        if (cmp->parsed()) return cmd_compare(opts, out);
        if (report->parsed()) return cmd_report(opts, out);
        if (dump->parsed()) return cmd_dump_freqs(opts, out);
    } catch (const std::exception& e) {
        err << "pbs: error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace pbs
