#include "pbs/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace pbs {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
    if (out > std::numeric_limits<T>::max()) throw ConfigError(key, "value out of range");
    return static_cast<T>(out);
}

double parse_double(const std::string& key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
    return out;
}

bool parse_bool(const std::string& key, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + std::string(v) + "'");
}

std::string parse_string(const std::string& key, std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    if (v.find('"') != std::string_view::npos) throw ConfigError(key, "unbalanced quotes");
    return std::string(v);
}

using Setter = std::function<void(RunConfig&, const std::string&, std::string_view)>;

template <typename T, typename Member>
Setter uint_field(Member member) {
    return [member](RunConfig& c, const std::string& key, std::string_view v) {
        std::invoke(member, c) = parse_unsigned<T>(key, v);
    };
}

template <typename Member>
Setter double_field(Member member) {
    return [member](RunConfig& c, const std::string& key, std::string_view v) {
        std::invoke(member, c) = parse_double(key, v);
    };
}

template <typename Member>
Setter bool_field(Member member) {
    return [member](RunConfig& c, const std::string& key, std::string_view v) {
        std::invoke(member, c) = parse_bool(key, v);
    };
}

Setter ignored() {
    return [](RunConfig&, const std::string& key, std::string_view v) { (void)parse_string(key, v); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"corpus.vocab_size", uint_field<std::uint32_t>([](RunConfig& c) -> auto& { return c.corpus.vocab_size; })},
        {"corpus.zipf_exponent", double_field([](RunConfig& c) -> auto& { return c.corpus.zipf_exponent; })},
        {"corpus.num_samples", uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.corpus.num_samples; })},
        {"corpus.min_len", uint_field<std::uint32_t>([](RunConfig& c) -> auto& { return c.corpus.min_len; })},
        {"corpus.max_len", uint_field<std::uint32_t>([](RunConfig& c) -> auto& { return c.corpus.max_len; })},
        {"corpus.seed",
         [](RunConfig& c, const std::string& key, std::string_view v) {
             c.corpus.seed = parse_unsigned<std::uint64_t>(key, v);
             c.corpus_seed_pinned = true;
         }},
        {"corpus.difficulty_mode",
         [](RunConfig& c, const std::string& key, std::string_view v) {
             c.corpus.difficulty_mode = parse_difficulty_mode(parse_string(key, v));
         }},
        {"corpus.planted_strength", double_field([](RunConfig& c) -> auto& { return c.corpus.planted_strength; })},
        {"corpus.eval_fraction", double_field([](RunConfig& c) -> auto& { return c.eval_fraction; })},
        {"corpus.path",
         [](RunConfig& c, const std::string& key, std::string_view v) { c.corpus_path = parse_string(key, v); }},

        {"training.batch_size", uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.batch_size; })},
        {"training.total_steps", uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.total_steps; })},
        {"training.eval_interval",
         uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.eval_interval; })},
        {"training.model_lr_peak", double_field([](RunConfig& c) -> auto& { return c.train.model_lr_peak; })},
        {"training.model_lr_final", double_field([](RunConfig& c) -> auto& { return c.train.model_lr_final; })},
        {"training.lr_warmup_fraction",
         double_field([](RunConfig& c) -> auto& { return c.train.lr_warmup_fraction; })},
        {"training.embedding_dim",
         uint_field<std::uint32_t>([](RunConfig& c) -> auto& { return c.train.embedding_dim; })},
        {"training.init_scale", double_field([](RunConfig& c) -> auto& { return c.train.init_scale; })},
        {"training.train_loss_window",
         uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.train_loss_window; })},
        {"training.seed", uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.seed; })},

        {"pbs.warmup_steps", uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.warmup_steps; })},
        {"pbs.update_interval",
         uint_field<std::uint64_t>([](RunConfig& c) -> auto& { return c.train.update_interval; })},
        {"pbs.history_capacity",
         uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.history_capacity; })},
        {"pbs.update_window", uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.update_window; })},
        {"pbs.min_update_entries",
         uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.min_update_entries; })},
        {"pbs.buffer_size", uint_field<std::size_t>([](RunConfig& c) -> auto& { return c.train.buffer_size; })},
        {"pbs.ratio", double_field([](RunConfig& c) -> auto& { return c.train.ratio; })},
        {"pbs.predictor_lr", double_field([](RunConfig& c) -> auto& { return c.train.predictor_lr; })},
        {"pbs.momentum", double_field([](RunConfig& c) -> auto& { return c.train.momentum; })},
        {"pbs.standardize_features",
         bool_field([](RunConfig& c) -> auto& { return c.train.standardize_features; })},
        {"pbs.freeze_freqs", bool_field([](RunConfig& c) -> auto& { return c.train.freeze_freqs; })},

        {"manifest.version", ignored()},
        {"manifest.output_dir", ignored()},
        {"manifest.mode", ignored()},
    };
    return table;
}

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // Keep it recognizably a real number.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

void apply_config_text(RunConfig& config, std::string_view text) {
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;

        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no), "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const auto name = std::string(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const std::string key = section.empty() ? name : section + "." + name;
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(key, "unknown key");
        if (value.empty()) throw ConfigError(key, "missing value");
        it->second(config, key, value);
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig config;
    if (path.empty()) return config;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(config, buf.str());
    return config;
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
    if (overrides.ratio) config.train.ratio = *overrides.ratio;
    if (overrides.seed) config.train.seed = *overrides.seed;
    if (overrides.steps) config.train.total_steps = *overrides.steps;
}

void resolve_config(RunConfig& config) {
    if (!config.corpus_seed_pinned) config.corpus.seed = derive_seed(config.train.seed, "corpus");
    config.corpus.validate();
    config.train.validate();
    if (!(config.eval_fraction > 0.0 && config.eval_fraction < 1.0))
        throw ConfigError("corpus.eval_fraction", "must be in (0, 1)");
}

void write_config(std::ostream& out, const RunConfig& c, const std::optional<ManifestInfo>& manifest) {
    auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
    if (manifest) {
        out << "[manifest]\n";
        out << "version = " << quoted(std::string(kVersion)) << '\n';
        out << "output_dir = " << quoted(manifest->output_dir) << '\n';
        out << "mode = " << quoted(manifest->mode) << "\n\n";
    }
    out << "[corpus]\n";
    out << "vocab_size = " << c.corpus.vocab_size << '\n';
    out << "zipf_exponent = " << number(c.corpus.zipf_exponent) << '\n';
    out << "num_samples = " << c.corpus.num_samples << '\n';
    out << "min_len = " << c.corpus.min_len << '\n';
    out << "max_len = " << c.corpus.max_len << '\n';
    out << "seed = " << c.corpus.seed << '\n';
    out << "difficulty_mode = " << quoted(std::string(to_string(c.corpus.difficulty_mode))) << '\n';
    out << "planted_strength = " << number(c.corpus.planted_strength) << '\n';
    out << "eval_fraction = " << number(c.eval_fraction) << '\n';
    out << "path = " << quoted(c.corpus_path) << "\n\n";

    const auto& t = c.train;
    out << "[training]\n";
    out << "batch_size = " << t.batch_size << '\n';
    out << "total_steps = " << t.total_steps << '\n';
    out << "eval_interval = " << t.eval_interval << '\n';
    out << "model_lr_peak = " << number(t.model_lr_peak) << '\n';
    out << "model_lr_final = " << number(t.model_lr_final) << '\n';
    out << "lr_warmup_fraction = " << number(t.lr_warmup_fraction) << '\n';
    out << "embedding_dim = " << t.embedding_dim << '\n';
    out << "init_scale = " << number(t.init_scale) << '\n';
    out << "train_loss_window = " << t.train_loss_window << '\n';
    out << "seed = " << t.seed << "\n\n";

    out << "[pbs]\n";
    out << "warmup_steps = " << t.warmup_steps << '\n';
    out << "update_interval = " << t.update_interval << '\n';
    out << "history_capacity = " << t.history_capacity << '\n';
    out << "update_window = " << t.update_window << '\n';
    out << "min_update_entries = " << t.min_update_entries << '\n';
    out << "buffer_size = " << t.buffer_size << '\n';
    out << "ratio = " << number(t.ratio) << '\n';
    out << "predictor_lr = " << number(t.predictor_lr) << '\n';
    out << "momentum = " << number(t.momentum) << '\n';
    out << "standardize_features = " << (t.standardize_features ? "true" : "false") << '\n';
    out << "freeze_freqs = " << (t.freeze_freqs ? "true" : "false") << '\n';
}

}  // namespace pbs
