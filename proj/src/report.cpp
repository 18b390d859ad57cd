#include "pbs/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace pbs {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

std::uint64_t to_uint(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line) + ": bad integer '" + s + "'");
    return v;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string signed_percent(double v) {
    const long rounded = std::lround(v);
    return (rounded > 0 ? "+" : "") + std::to_string(rounded) + "%";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& out, std::span<const CheckpointRecord> records) {
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << r.step << ',' << to_string(r.mode) << ',' << format_double(r.train_loss) << ','
            << format_double(r.eval_loss) << ',' << format_double(r.correlation) << ',' << (r.degenerate ? 1 : 0);
        for (double w : r.weights) out << ',' << format_double(w);
        out << ',' << format_double(r.bias) << '\n';
    }
}

std::vector<CheckpointRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw DataError("metrics file has an unexpected header");
    std::vector<CheckpointRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 11) throw DataError("line " + std::to_string(line_no) + ": expected 11 fields");
        CheckpointRecord r;
        r.step = to_uint(f[0], line_no);
        try {
            r.mode = parse_mode(f[1]);
        } catch (const ConfigError&) {
            throw DataError("line " + std::to_string(line_no) + ": bad mode '" + f[1] + "'");
        }
        r.train_loss = to_double(f[2], line_no);
        r.eval_loss = to_double(f[3], line_no);
        r.correlation = to_double(f[4], line_no);
        r.degenerate = to_uint(f[5], line_no) != 0;
        for (std::size_t j = 0; j < kNumFeatures; ++j) r.weights[j] = to_double(f[6 + j], line_no);
        r.bias = to_double(f[10], line_no);
        out.push_back(r);
    }
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
    out << kTraceHeader << '\n';
    for (const auto& r : rows)
        out << r.step << ',' << r.bucket_counts[0] << ',' << r.bucket_counts[1] << ',' << r.bucket_counts[2] << ','
            << r.drawn[0] << ',' << r.drawn[1] << ',' << r.drawn[2] << '\n';
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) throw DataError("trace file has an unexpected header");
    std::vector<TraceRow> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) throw DataError("line " + std::to_string(line_no) + ": expected 7 fields");
        TraceRow r;
        r.step = to_uint(f[0], line_no);
        for (std::size_t b = 0; b < kNumBuckets; ++b) {
            r.bucket_counts[b] = to_uint(f[1 + b], line_no);
            r.drawn[b] = to_uint(f[4 + b], line_no);
        }
        out.push_back(r);
    }
    return out;
}

void write_frequency_csv(std::ostream& out, const FrequencyTable& table) {
    out << "token_id,count,frequency,rare\n";
    const auto counts = table.counts();
    const auto freqs = table.frequencies();
    const auto rare = table.rare_flags();
    for (std::size_t t = 0; t < freqs.size(); ++t)
        out << t << ',' << counts[t] << ',' << format_double(freqs[t]) << ',' << (rare[t] ? 1 : 0) << '\n';
}

void write_comparison_table(std::ostream& out, const ComparisonReport& report) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%10s  %12s  %13s  %11s  %11s\n", "Steps", "PBS Loss", "Baseline Loss",
                  "Improvement", "Correlation");
    out << buf;
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%10llu  %12s  %13s  %11s  %11s%s\n", static_cast<unsigned long long>(r.step),
                      fixed(r.pbs_eval, 4).c_str(), fixed(r.baseline_eval, 4).c_str(),
                      signed_percent(r.improvement_pct).c_str(), fixed(r.correlation, 3).c_str(),
                      r.degenerate ? " (degenerate)" : "");
        out << buf;
    }
    out << "Final train loss ratio (pbs / baseline): " << fixed(report.final_train_loss_ratio, 3) << '\n';
}

void write_comparison_csv(std::ostream& out, const ComparisonReport& report) {
    out << "step,pbs_loss,baseline_loss,improvement_pct,correlation\n";
    for (const auto& r : report.rows)
        out << r.step << ',' << format_double(r.pbs_eval) << ',' << format_double(r.baseline_eval) << ','
            << format_double(r.improvement_pct) << ',' << format_double(r.correlation) << '\n';
}

void write_comparison_json(std::ostream& out, const ComparisonReport& report) {
    nlohmann::json doc;
    doc["final_train_loss_ratio"] = report.final_train_loss_ratio;
    auto& rows = doc["checkpoints"] = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"step", r.step},
                        {"pbs_loss", r.pbs_eval},
                        {"baseline_loss", r.baseline_eval},
                        {"improvement_pct", r.improvement_pct},
                        {"correlation", r.correlation},
                        {"degenerate", r.degenerate}});
    out << doc.dump(2) << '\n';
}

void write_metrics_table(std::ostream& out, std::span<const CheckpointRecord> records) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%10s  %8s  %10s  %10s  %11s  %s\n", "Steps", "Mode", "Train Loss", "Eval Loss",
                  "Correlation", "Weights (w1..w4, bias)");
    out << buf;
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%10llu  %8s  %10s  %10s  %11s  %s %s %s %s %s\n",
                      static_cast<unsigned long long>(r.step), std::string(to_string(r.mode)).c_str(),
                      fixed(r.train_loss, 4).c_str(), fixed(r.eval_loss, 4).c_str(), fixed(r.correlation, 3).c_str(),
                      fixed(r.weights[0], 4).c_str(), fixed(r.weights[1], 4).c_str(), fixed(r.weights[2], 4).c_str(),
                      fixed(r.weights[3], 4).c_str(), fixed(r.bias, 4).c_str());
        out << buf;
    }
}

}  // namespace pbs
