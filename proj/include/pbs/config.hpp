#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "pbs/corpus.hpp"
#include "pbs/harness.hpp"

namespace pbs {

/// Everything one run needs. Defaults are the standard PBS hyperparameters
/// plus a desk-scale corpus and model.
struct RunConfig {
    CorpusSpec corpus;
    // When false the corpus seed is derived from training.seed.
    bool corpus_seed_pinned = false;
    double eval_fraction = 0.05;
    // Load the corpus from this file instead of generating it.
    std::string corpus_path;
    TrainConfig train;
};

/// Parses a flat sectioned key-value file ([corpus], [training], [pbs],
/// [manifest]) on top of `config`. Unknown keys, bad values and malformed
/// lines raise ConfigError naming the key (section.key).
void apply_config_text(RunConfig& config, std::string_view text);

/// Defaults, then the file at `path` if non-empty.
RunConfig load_config(const std::string& path);

struct ConfigOverrides {
    std::optional<double> ratio;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> steps;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

/// Derives unpinned seeds and validates every field.
void resolve_config(RunConfig& config);

struct ManifestInfo {
    std::string output_dir;
    std::string mode;
};

/// Writes the config in the same format apply_config_text reads, with every
/// value spelled out (doubles round-trip exactly). A [manifest] section
/// records version, output directory and mode.
void write_config(std::ostream& out, const RunConfig& config, const std::optional<ManifestInfo>& manifest = {});

}  // namespace pbs
