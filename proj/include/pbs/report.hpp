#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pbs/freqstats.hpp"
#include "pbs/harness.hpp"

namespace pbs {

inline constexpr std::string_view kMetricsHeader = "step,mode,train_loss,eval_loss,correlation,degenerate,w1,w2,w3,w4,bias";
inline constexpr std::string_view kTraceHeader =
    "step,bucket_counts_high,medium,low,drawn_high,drawn_medium,drawn_low";

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

void write_metrics_csv(std::ostream& out, std::span<const CheckpointRecord> records);
/// Throws DataError on a malformed file.
std::vector<CheckpointRecord> read_metrics_csv(std::istream& in);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// token_id,count,frequency,rare
void write_frequency_csv(std::ostream& out, const FrequencyTable& table);

/// Human-readable comparison table.
void write_comparison_table(std::ostream& out, const ComparisonReport& report);
/// step,pbs_loss,baseline_loss,improvement_pct,correlation
void write_comparison_csv(std::ostream& out, const ComparisonReport& report);
void write_comparison_json(std::ostream& out, const ComparisonReport& report);

/// Plain table of one run's checkpoints.
void write_metrics_table(std::ostream& out, std::span<const CheckpointRecord> records);

}  // namespace pbs
