// Microbenchmarks for the hot paths: engine ticks, attention, schedule
// construction, the similarity gate, and queue traffic. These measure the
// library's own overhead; the paper-style comparisons live in the `stagger
// bench` subcommands.

#include <benchmark/benchmark.h>

#include "stagger/attention.hpp"
#include "stagger/engine.hpp"
#include "stagger/precompute.hpp"
#include "stagger/queue.hpp"
#include "stagger/rng.hpp"
#include "stagger/ssf.hpp"
#include "stagger/stream_gen.hpp"

using namespace stagger;

namespace {

EngineConfig bm_config(int n_steps, int d_latent) {
    EngineConfig cfg;
    cfg.n_steps = n_steps;
    cfg.d_latent = d_latent;
    cfg.backend = "analytic";
    return cfg;
}

void BM_EngineTick(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    EngineConfig cfg = bm_config(n, 8);
    Rng rng(1);
    Condition cond{"c", sample_gaussian(rng, 8)};
    StreamBatchEngine engine(cfg, build_precompute(cfg, {cond}), make_backend(cfg));
    engine.set_logging(false);
    std::int64_t seq = 0;
    for (int i = 0; i < n; ++i) {
        engine.ingest(seq++, sample_gaussian(rng, 8), cond);
        engine.tick();
    }
    for (auto _ : state) {
        engine.ingest(seq++, sample_gaussian(rng, 8), cond);
        benchmark::DoNotOptimize(engine.tick());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EngineTick)->Arg(1)->Arg(4)->Arg(10);

void BM_CrossFrameAttention(benchmark::State& state) {
    const std::size_t blocks = static_cast<std::size_t>(state.range(0));
    const std::size_t tokens = 4, d = 8;
    Rng rng(2);
    AttentionBatch batch;
    batch.k = lift_tokens(sample_gaussian(rng, blocks * tokens * d), blocks * tokens, d);
    batch.v = lift_tokens(sample_gaussian(rng, blocks * tokens * d), blocks * tokens, d);
    for (std::size_t b = 0; b < blocks; ++b)
        batch.provenance.emplace_back(static_cast<std::int64_t>(b), static_cast<int>(b));
    const Mat q = lift_tokens(sample_gaussian(rng, d), tokens, d);
    for (auto _ : state) benchmark::DoNotOptimize(cross_frame_attention(q, batch));
}
BENCHMARK(BM_CrossFrameAttention)->Arg(1)->Arg(4)->Arg(10);

void BM_BuildSchedule(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(build_schedule(static_cast<int>(state.range(0)), 1000, 1.0));
}
BENCHMARK(BM_BuildSchedule)->Arg(4)->Arg(50);

void BM_SsfGate(benchmark::State& state) {
    SsfState gate(0.98, Rng(3));
    StreamGenerator gen(StreamGenerator::Kind::dynamic_walk, 8, 3, 0.12);
    for (auto _ : state) benchmark::DoNotOptimize(gate.gate(gen.next()));
}
BENCHMARK(BM_SsfGate);

void BM_QueueEnqueueDequeue(benchmark::State& state) {
    BoundedQueue<Frame> q(8);
    Frame f;
    f.payload.assign(8, 1.0);
    for (auto _ : state) {
        q.enqueue(f);
        benchmark::DoNotOptimize(q.dequeue_fifo());
    }
}
BENCHMARK(BM_QueueEnqueueDequeue);

}  // namespace

BENCHMARK_MAIN();
