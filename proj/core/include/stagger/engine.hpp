#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "stagger/core.hpp"
#include "stagger/denoiser.hpp"
#include "stagger/guidance.hpp"
#include "stagger/precompute.hpp"

namespace stagger {

/// Per-frame pipeline record while the frame moves through the staggered
/// batch. step_idx increments by exactly one per tick; after n ticks the
/// frame is emitted and removed.
struct InFlightFrame {
    std::int64_t seq_id = 0;
    Latent x0;        // encoded input latent
    Latent eps0;      // entry noise actually used (from the precompute cache)
    Latent current;   // latent at the frame's current step
    int step_idx = 0;
    Condition cond;
    GuidanceState gstate;
    Latent eps_pred;  // latest guided prediction, feeds the attention mix
    std::int64_t ingest_tick = 0;
};

struct EmittedFrame {
    std::int64_t seq_id = 0;
    Latent x0_hat;
    std::int64_t ingest_tick = 0;
    std::int64_t emit_tick = 0;
};

struct TickResult {
    std::optional<EmittedFrame> emitted;
    std::uint64_t denoiser_calls = 0;
    std::uint64_t element_evals = 0;
};

struct TickLogEntry {
    std::int64_t tick = 0;
    std::optional<std::int64_t> ingested;
    std::optional<std::int64_t> emitted;
    std::uint64_t denoiser_calls = 0;
    std::uint64_t element_evals = 0;
    std::int64_t elapsed_ns = 0;
};

/// The staggered denoising engine: one tick ingests at most one frame,
/// runs a single batched guided-noise prediction that advances every
/// in-flight frame one step, and emits the frame that just finished its
/// last step. Ticks are counted on boundaries: a frame ingested when k
/// ticks have completed is emitted when k + n_steps have, for every frame,
/// whether or not upstream starvation inserted bubbles in between.
class StreamBatchEngine {
  public:
    StreamBatchEngine(const EngineConfig& cfg, PrecomputeCache cache,
                      std::shared_ptr<DenoiserBackend> backend);

    /// Adds a frame at step 0. Throws if a frame is already waiting at
    /// step 0 (two ingests without a tick) or seq ids do not increase.
    void ingest(std::int64_t seq_id, Latent x0, Condition cond);

    /// Advances the whole batch one step. Throws if nothing is in flight.
    TickResult tick();

    std::size_t inflight_size() const { return inflight_.size(); }
    bool idle() const { return inflight_.empty(); }
    std::int64_t ticks_completed() const { return ticks_; }

    /// Multiset of in-flight step indices, ascending (staggering audit).
    std::vector<int> step_indices() const;

    /// Smallest in-flight sequence id, or nullopt when idle.
    std::optional<std::int64_t> min_inflight_seq() const;

    const std::vector<TickLogEntry>& log() const { return log_; }
    void set_logging(bool on) { logging_ = on; }

    const PrecomputeCache& cache() const { return cache_; }
    DenoiserBackend& backend() { return *backend_; }

  private:
    EngineConfig cfg_;
    PrecomputeCache cache_;
    std::shared_ptr<DenoiserBackend> backend_;
    GuidanceConfig guidance_;
    std::vector<InFlightFrame> inflight_;  // ordered oldest first (highest step)
    std::int64_t ticks_ = 0;
    std::int64_t last_seq_ = -1;
    std::optional<std::int64_t> ingested_since_tick_;
    bool logging_ = true;
    std::vector<TickLogEntry> log_;
};

/// Conventional per-frame loop over the same schedule, noise cache, and
/// guidance path: n sequential denoiser calls producing the final x0_hat.
/// With cross-frame attention disabled this is the engine's exact oracle.
Latent run_sequential_reference(const Latent& x0, const Condition& cond,
                                const PrecomputeCache& cache, DenoiserBackend& backend,
                                const GuidanceConfig& g);

struct WaitAndBatchResult {
    std::vector<Latent> outputs;
    std::vector<std::int64_t> latency_ticks;  // per frame: m + n - j
};

/// Wait-and-batch baseline: collect all m frames (m ticks), then run the
/// n denoising steps over the full batch and emit everything at once.
/// Frame j arrives on tick boundary j, so its latency is m + n - j ticks.
WaitAndBatchResult run_wait_and_batch_reference(const std::vector<Latent>& x0s,
                                                const std::vector<Condition>& conds,
                                                const PrecomputeCache& cache,
                                                DenoiserBackend& backend,
                                                const GuidanceConfig& g);

}  // namespace stagger
