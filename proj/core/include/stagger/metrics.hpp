#pragma once

#include <cstdint>
#include <string>

namespace stagger {

/// Aggregate counters and timings for one pipeline run. Serialized as a
/// schema-versioned JSON document; in deterministic mode every field is
/// reproducible bit for bit under a fixed seed (time is virtual: one tick
/// is one millisecond).
struct MetricsReport {
    int schema_version = 1;
    std::string mode = "deterministic";  // "deterministic" | "threaded"
    bool incomplete = false;
    std::string error;

    std::uint64_t frames_in = 0;
    std::uint64_t frames_out = 0;     // engine emissions + duplicates
    std::uint64_t duplicates = 0;     // outputs replayed for skipped frames
    std::uint64_t stale_skips = 0;    // skips with no prior output to replay
    std::uint64_t input_drops = 0;
    std::uint64_t output_drops = 0;

    std::uint64_t ticks = 0;
    std::uint64_t denoiser_calls = 0;
    std::uint64_t element_evals = 0;
    double work_units = 0.0;  // element_evals x per-element cost proxy

    std::uint64_t ssf_examined = 0;
    std::uint64_t ssf_skipped = 0;
    double skip_rate = 0.0;

    double latency_ticks_mean = 0.0;
    std::int64_t latency_ticks_min = 0;
    std::int64_t latency_ticks_max = 0;

    double mean_frame_time_ms = 0.0;
    double throughput_fps = 0.0;
    double wall_ms = 0.0;
};

/// Stable, ordered JSON rendering (byte-identical for identical reports).
std::string report_to_json(const MetricsReport& report);

void write_report(const MetricsReport& report, const std::string& path);

}  // namespace stagger
