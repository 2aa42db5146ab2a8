#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "stagger/core.hpp"
#include "stagger/stream_gen.hpp"

namespace stagger {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

enum class ReportFormat { csv, json, both };

ReportFormat report_format_from_string(const std::string& s);

/// Renders one cell. Numbers go through the same shortest-round-trip
/// formatter used by the JSON output, so CSV and JSON carry identical
/// digit strings.
std::string cell_text(const Cell& cell);

std::string table_to_csv(const Table& table);
std::string table_to_json(const Table& table);

/// Writes <out_dir>/<table.name>.{csv,json}; returns the written paths.
/// Output is byte-stable for identical input tables.
std::vector<std::string> emit_report(const std::vector<Table>& tables, ReportFormat format,
                                     const std::string& out_dir);

struct BenchOptions {
    std::uint64_t seed = 0;
    int frames = 100;        // frames per measured run
    int warmup_frames = 100; // one warm-up run of this many frames
    int repeats = 5;         // median-of-k
    int d_latent = 8;
};

/// Predicted stream-batch over sequential speedup:
/// n*(C_call + C_elem) / (C_call + n*C_elem).
double stream_batch_speedup_model(int n, double cost_per_call_us, double cost_per_element_us);

/// Stream-batch vs sequential timing over the synthetic-cost backend.
/// Sequential runs the plain per-frame loop; the stream side drives the
/// threaded pipeline and takes the median steady-state inter-emission gap,
/// so pipeline fill and drain are excluded. Columns:
/// (n, sequential_ms, stream_ms, speedup, model_speedup).
Table bench_stream_batch(const std::vector<int>& n_list, double cost_per_call_us,
                         double cost_per_element_us, const BenchOptions& opts);

/// Guidance-mode comparison. Returns two tables: "guidance_time" with
/// threaded steady-state per-frame times and ratios against cfg, and
/// "guidance_calls" with exact per-frame element evaluations from the
/// deterministic mode.
std::vector<Table> bench_guidance(const std::vector<int>& n_list, double cost_per_call_us,
                                  double cost_per_element_us, const BenchOptions& opts);

/// SSF energy-proxy comparison on a generated stream: summary (with and
/// without the filter), a per-window work-unit time series, and the
/// smoothness comparison against the hard-threshold filter on a
/// near-threshold stream. Deterministic counters only.
std::vector<Table> bench_ssf(StreamGenerator::Kind kind, double eta, int n_steps,
                             const BenchOptions& opts);

std::vector<Table> bench_all(const BenchOptions& opts);

}  // namespace stagger
