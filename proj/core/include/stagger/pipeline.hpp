#pragma once

#include <string>

#include "stagger/core.hpp"
#include "stagger/metrics.hpp"
#include "stagger/stream_gen.hpp"

namespace stagger {

/// Pipeline execution options.
///
/// Deterministic mode runs the three stages round-robin on one thread with
/// strict-FIFO queues and virtual time (one tick = one millisecond), so a
/// fixed seed reproduces the report byte for byte. Threaded mode runs
/// pre-processing, engine, and post-processing on separate threads joined
/// only by the bounded queues, with freshest-wins input dequeue.
struct PipelineOptions {
    bool threaded = false;
    bool strict_fifo = true;   // forced true in deterministic mode
    std::string trace_path;    // JSON-lines tick trace, empty = off
    double pace_us = 0.0;      // source pacing (threaded mode only)
};

/// Drives source -> SSF gate -> codec -> stream-batch engine -> codec ->
/// sink until the source is exhausted, then returns the aggregated report.
/// Skipped frames are replayed as duplicates of the last delivered output,
/// inserted at their sequence position so sink ids strictly increase.
/// A stage failure aborts the run and returns a partial report flagged
/// incomplete.
MetricsReport run_pipeline(const EngineConfig& cfg, FrameSource source, FrameSink sink,
                           const PipelineOptions& opts = {});

}  // namespace stagger
