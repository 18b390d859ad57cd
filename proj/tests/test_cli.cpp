#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "pbs/cli.hpp"
#include "pbs/config.hpp"
#include "pbs/report.hpp"

using namespace pbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("pbs_cli_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallConfig = R"(# tiny run
[corpus]
vocab_size = 24
num_samples = 400
min_len = 4
max_len = 12

[training]
total_steps = 60
eval_interval = 20
batch_size = 4
embedding_dim = 4

[pbs]
warmup_steps = 10
update_interval = 10
min_update_entries = 16
buffer_size = 50
ratio = 2.0
)";

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "pbs");
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

}  // namespace

TEST_CASE("scheduling defaults") {
    const TrainConfig c;
    CHECK(c.warmup_steps == 100);
    CHECK(c.update_interval == 100);
    CHECK(c.history_capacity == 10000);
    CHECK(c.update_window == 2000);
    CHECK(c.min_update_entries == 64);
    CHECK(c.buffer_size == 1000);
    CHECK(c.ratio == 2.0);
    CHECK(c.predictor_lr == 0.01);
    CHECK(c.momentum == 0.9);
    CHECK(c.standardize_features);
    CHECK(c.freeze_freqs);
    const CorpusSpec s;
    CHECK(s.vocab_size == 256);
    CHECK(s.max_len == 64);
    CHECK(s.num_samples == 20000);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text and overrides") {
    SUBCASE("command-line ratio wins over the file") {
        RunConfig rc;
        apply_config_text(rc, "[pbs]\nratio = 2.0\n");
        apply_overrides(rc, {3.0, std::nullopt, std::nullopt});
        resolve_config(rc);
        CHECK(rc.train.ratio == 3.0);
    }
    SUBCASE("invalid ratio names the key") {
        RunConfig rc;
        apply_config_text(rc, "[pbs]\nratio = -1\n");
        try {
            resolve_config(rc);
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "pbs.ratio");
        }
    }
    SUBCASE("unknown key") {
        RunConfig rc;
        try {
            apply_config_text(rc, "[pbs]\nratoi = 2\n");
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "pbs.ratoi");
        }
    }
    SUBCASE("type mismatch") {
        RunConfig rc;
        try {
            apply_config_text(rc, "[training]\nbatch_size = many\n");
            FAIL("expected a ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key() == "training.batch_size");
        }
    }
    SUBCASE("corpus seed follows the root seed unless pinned") {
        RunConfig a, b;
        apply_overrides(a, {std::nullopt, 1, std::nullopt});
        apply_overrides(b, {std::nullopt, 2, std::nullopt});
        resolve_config(a);
        resolve_config(b);
        CHECK(a.corpus.seed != b.corpus.seed);
        RunConfig pinned;
        apply_config_text(pinned, "[corpus]\nseed = 77\n");
        apply_overrides(pinned, {std::nullopt, 5, std::nullopt});
        resolve_config(pinned);
        CHECK(pinned.corpus.seed == 77);
    }
    SUBCASE("write and read back") {
        RunConfig rc;
        apply_config_text(rc, kSmallConfig);
        rc.train.predictor_lr = 0.1 + 0.2;
        resolve_config(rc);
        std::ostringstream os;
        write_config(os, rc, ManifestInfo{"out", "pbs"});
        RunConfig back;
        apply_config_text(back, os.str());
        resolve_config(back);
        CHECK(back.train == rc.train);
        CHECK(back.corpus.seed == rc.corpus.seed);
        CHECK(back.corpus.vocab_size == rc.corpus.vocab_size);
    }
}

TEST_CASE("cli exit codes") {
    std::string err;
    CHECK(cli({}, nullptr, &err) != 0);
    CHECK(err.find("compare") != std::string::npos);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"train"}) == 2);

    TempDir tmp("codes");
    write_file(tmp.path / "bad.toml", "[pbs]\nratio = -1\n");
    CHECK(cli({"train", "--config", (tmp.path / "bad.toml").string(), "--out", (tmp.path / "o").string()}, nullptr,
              &err) == 1);
    CHECK(err.find("pbs.ratio") != std::string::npos);
}

TEST_CASE("compare writes every artifact") {
    TempDir tmp("compare");
    write_file(tmp.path / "small.toml", kSmallConfig);
    const auto out = tmp.path / "run";
    std::string text;
    REQUIRE(cli({"compare", "--config", (tmp.path / "small.toml").string(), "--seed", "3", "--out", out.string(),
                 "--trace-sampler"},
                &text) == 0);
    for (const char* name : {"manifest.toml", "metrics_pbs.csv", "metrics_uniform.csv", "comparison.csv",
                             "comparison.json", "trace_pbs.csv", "trace_uniform.csv"})
        CHECK(fs::exists(out / name));
    CHECK(text.find("Improvement") != std::string::npos);

    std::ifstream metrics(out / "metrics_pbs.csv");
    const auto records = read_metrics_csv(metrics);
    CHECK(records.size() == 3);

    std::ifstream trace(out / "trace_uniform.csv");
    for (const auto& row : read_trace_csv(trace)) CHECK(row.drawn == std::array<std::size_t, 3>{});

    const auto json = slurp(out / "comparison.json");
    CHECK(json.find("final_train_loss_ratio") != std::string::npos);

    // Re-rendering from the two CSVs reproduces the comparison files.
    const auto again = tmp.path / "again";
    REQUIRE(cli({"report", (out / "metrics_pbs.csv").string(), (out / "metrics_uniform.csv").string(), "--out",
                 again.string()}) == 0);
    CHECK(slurp(again / "comparison.csv") == slurp(out / "comparison.csv"));
}

TEST_CASE("a manifest reproduces its run") {
    TempDir tmp("manifest");
    write_file(tmp.path / "small.toml", kSmallConfig);
    const auto first = tmp.path / "first";
    REQUIRE(cli({"train", "--config", (tmp.path / "small.toml").string(), "--seed", "11", "--ratio", "3.0", "--mode",
                 "uniform", "--trace-sampler", "--out", first.string()}) == 0);
    const auto manifest = slurp(first / "manifest.toml");
    CHECK(manifest.find("ratio = 3") != std::string::npos);

    const auto second = tmp.path / "second";
    REQUIRE(cli({"train", "--config", (first / "manifest.toml").string(), "--mode", "uniform", "--trace-sampler",
                 "--out", second.string()}) == 0);
    CHECK(slurp(first / "metrics_uniform.csv") == slurp(second / "metrics_uniform.csv"));
    CHECK(slurp(first / "trace_uniform.csv") == slurp(second / "trace_uniform.csv"));

    std::ifstream trace(first / "trace_uniform.csv");
    for (const auto& row : read_trace_csv(trace)) CHECK(row.drawn == std::array<std::size_t, 3>{});
}

TEST_CASE("generate-corpus and dump-freqs") {
    TempDir tmp("corpus");
    write_file(tmp.path / "small.toml", kSmallConfig);
    const auto corpus = tmp.path / "c.txt";
    REQUIRE(cli({"generate-corpus", "--config", (tmp.path / "small.toml").string(), "--out", corpus.string()}) == 0);
    std::ifstream in(corpus);
    const auto c = read_corpus(in);
    CHECK(c.samples.size() == 400);
    CHECK(c.vocab_size == 24);

    // The corpus file can stand in for generation.
    write_file(tmp.path / "from_file.toml", std::string(kSmallConfig) + "\n[corpus]\npath = \"" + corpus.string() + "\"\n");
    const auto freqs = tmp.path / "f.csv";
    REQUIRE(cli({"dump-freqs", "--config", (tmp.path / "from_file.toml").string(), "--out", freqs.string()}) == 0);
    const auto text = slurp(freqs);
    CHECK(text.rfind("token_id,count,frequency,rare\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 25);
}
