#include "stagger/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stagger/codec.hpp"
#include "stagger/engine.hpp"
#include "stagger/precompute.hpp"
#include "stagger/queue.hpp"
#include "stagger/ssf.hpp"

namespace stagger {

namespace {

struct InputItem {
    bool skip_token = false;  // skipped frame: carries only the seq id
    Frame frame;              // payload already encoded when !skip_token
};

Condition resolve_condition(const EngineConfig& cfg) {
    if (!cfg.condition.empty()) return Condition{"cond", cfg.condition};
    Rng rng(derive_seed(cfg.seed, kStreamCondition));
    return Condition{"cond", sample_gaussian(rng, static_cast<size_t>(cfg.d_latent))};
}

// The engine-owning stage. Holds the skip tokens that are waiting for
// every earlier frame to leave the engine, so duplicates enter the output
// queue at their sequence position.
class EngineStage {
  public:
    EngineStage(const EngineConfig& cfg, BoundedQueue<Frame>& out, bool logging)
        : cfg_(cfg),
          codec_(make_codec(cfg)),
          cond_(resolve_condition(cfg)),
          out_(out) {
        std::vector<Condition> conds{cond_};
        if (!cfg.negative_condition.empty())
            conds.push_back(Condition{"negative", cfg.negative_condition});
        auto cache = build_precompute(cfg, conds);
        engine_ = std::make_unique<StreamBatchEngine>(cfg, std::move(cache),
                                                      make_backend(cfg));
        engine_->set_logging(logging);
    }

    void on_item(InputItem item) {
        if (item.skip_token) {
            pending_skips_.push_back(item.frame.seq_id);
            return;
        }
        engine_->ingest(item.frame.seq_id, std::move(item.frame.payload), cond_);
    }

    // One engine tick; emission goes to the output queue after any skip
    // duplicates that must precede it.
    void tick_once() {
        const TickResult r = engine_->tick();
        if (r.emitted) {
            flush_skips_below(r.emitted->seq_id);
            Frame out;
            out.seq_id = r.emitted->seq_id;
            out.payload = codec_.decode(r.emitted->x0_hat);
            out.tick_in = r.emitted->ingest_tick;
            latencies_.push_back(r.emitted->emit_tick - r.emitted->ingest_tick);
            push_output(std::move(out));
        }
    }

    // Releases every pending skip whose ordering can no longer be violated
    // by a future emission.
    void flush_ready_skips() {
        flush_skips_below(min_inflight_seq());
    }

    void finish() {
        flush_skips_below(std::numeric_limits<std::int64_t>::max());
    }

    bool idle() const { return engine_->idle(); }
    bool no_pending_skips() const { return pending_skips_.empty(); }
    StreamBatchEngine& engine() { return *engine_; }
    const LatentCodec& codec() const { return codec_; }
    const std::vector<std::int64_t>& latencies() const { return latencies_; }
    std::uint64_t duplicates() const { return duplicates_; }
    std::uint64_t stale_skips() const { return stale_skips_; }

  private:
    std::int64_t min_inflight_seq() const {
        const auto seq = engine_->min_inflight_seq();
        return seq ? *seq : std::numeric_limits<std::int64_t>::max();
    }

    void flush_skips_below(std::int64_t limit_seq) {
        while (!pending_skips_.empty() && pending_skips_.front() < limit_seq) {
            const std::int64_t seq = pending_skips_.front();
            pending_skips_.pop_front();
            if (!last_output_) {
                stale_skips_ += 1;
                continue;
            }
            Frame dup;
            dup.seq_id = seq;
            dup.payload = *last_output_;
            duplicates_ += 1;
            out_.enqueue(std::move(dup));
        }
    }

    void push_output(Frame f) {
        last_output_ = f.payload;
        out_.enqueue(std::move(f));
    }

    EngineConfig cfg_;
    LatentCodec codec_;
    Condition cond_;
    BoundedQueue<Frame>& out_;
    std::unique_ptr<StreamBatchEngine> engine_;
    std::deque<std::int64_t> pending_skips_;
    std::optional<Latent> last_output_;
    std::vector<std::int64_t> latencies_;
    std::uint64_t duplicates_ = 0;
    std::uint64_t stale_skips_ = 0;
};

void write_trace(const StreamBatchEngine& engine, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("run_pipeline: cannot open trace path " + path);
    for (const auto& e : engine.log()) {
        nlohmann::ordered_json j;
        j["tick"] = e.tick;
        if (e.ingested) j["ingested"] = *e.ingested; else j["ingested"] = nullptr;
        if (e.emitted) j["emitted"] = *e.emitted; else j["emitted"] = nullptr;
        j["calls"] = e.denoiser_calls;
        j["element_evals"] = e.element_evals;
        j["elapsed_ns"] = e.elapsed_ns;
        out << j.dump() << '\n';
    }
}

}  // namespace

MetricsReport run_pipeline(const EngineConfig& raw_cfg, FrameSource source, FrameSink sink,
                           const PipelineOptions& opts) {
    const EngineConfig cfg = validated(raw_cfg);
    MetricsReport report;
    report.mode = opts.threaded ? "threaded" : "deterministic";

    const std::size_t in_cap = static_cast<size_t>(cfg.queue_capacity);
    BoundedQueue<InputItem> in_q(in_cap);
    BoundedQueue<Frame> out_q(in_cap * 8);  // engine must never block on output

    const bool want_trace = !opts.trace_path.empty();
    EngineStage stage(cfg, out_q, want_trace);
    LatentCodec codec = make_codec(cfg);

    std::optional<SsfState> ssf;
    if (cfg.ssf_enabled) ssf.emplace(cfg.eta, Rng(derive_seed(cfg.seed, kStreamSsf)));

    std::uint64_t frames_in = 0;
    std::uint64_t frames_out = 0;

    // Pre-stage step: pull one frame, gate it, encode it, queue it.
    auto pre_step = [&]() -> bool {
        auto f = source();
        if (!f) return false;
        frames_in += 1;
        InputItem item;
        item.frame.seq_id = f->seq_id;
        if (ssf && ssf->gate(*f) == GateDecision::skip) {
            item.skip_token = true;
        } else {
            item.frame.payload = codec.encode(f->payload);
        }
        in_q.enqueue(std::move(item));
        return true;
    };

    const auto wall_start = std::chrono::steady_clock::now();

    if (!opts.threaded) {
        try {
            bool source_done = false;
            while (true) {
                if (!source_done && !pre_step()) source_done = true;
                if (auto item = in_q.dequeue_fifo()) stage.on_item(std::move(*item));
                if (!stage.idle()) stage.tick_once();
                stage.flush_ready_skips();
                while (auto of = out_q.dequeue_fifo()) {
                    sink(*of);
                    frames_out += 1;
                }
                if (source_done && in_q.empty() && stage.idle()) {
                    stage.finish();
                    while (auto of = out_q.dequeue_fifo()) {
                        sink(*of);
                        frames_out += 1;
                    }
                    break;
                }
            }
        } catch (const std::exception& e) {
            report.incomplete = true;
            report.error = e.what();
        }
    } else {
        std::exception_ptr pre_err, engine_err, post_err;

        std::thread pre([&] {
            try {
                while (pre_step()) {
                    if (opts.pace_us > 0.0) {
                        std::this_thread::sleep_for(std::chrono::duration<double, std::micro>(
                            opts.pace_us));
                    }
                }
                in_q.close();
            } catch (...) {
                pre_err = std::current_exception();
                in_q.close();
            }
        });

        std::thread engine([&] {
            try {
                while (true) {
                    std::optional<InputItem> item;
                    if (stage.idle()) {
                        item = in_q.wait_dequeue(!opts.strict_fifo,
                                                 std::chrono::microseconds(200));
                    } else {
                        item = opts.strict_fifo ? in_q.dequeue_fifo() : in_q.dequeue_latest();
                    }
                    if (item) stage.on_item(std::move(*item));
                    if (!stage.idle()) stage.tick_once();
                    stage.flush_ready_skips();
                    if (in_q.closed() && in_q.empty() && stage.idle()) {
                        stage.finish();
                        break;
                    }
                }
            } catch (...) {
                engine_err = std::current_exception();
            }
            out_q.close();
        });

        std::thread post([&] {
            try {
                while (true) {
                    auto of = out_q.wait_dequeue(false, std::chrono::microseconds(200));
                    if (of) {
                        sink(*of);
                        frames_out += 1;
                    } else if (out_q.closed() && out_q.empty()) {
                        break;
                    }
                }
            } catch (...) {
                post_err = std::current_exception();
            }
        });

        pre.join();
        engine.join();
        post.join();

        for (auto err : {pre_err, engine_err, post_err}) {
            if (!err) continue;
            report.incomplete = true;
            try {
                std::rethrow_exception(err);
            } catch (const std::exception& e) {
                report.error = e.what();
            }
        }
    }

    const auto wall_end = std::chrono::steady_clock::now();

    auto& eng = stage.engine();
    report.frames_in = frames_in;
    report.frames_out = frames_out;
    report.duplicates = stage.duplicates();
    report.stale_skips = stage.stale_skips();
    report.input_drops = in_q.dropped();
    report.output_drops = out_q.dropped();
    report.ticks = static_cast<std::uint64_t>(eng.ticks_completed());
    report.denoiser_calls = eng.backend().counters().calls;
    report.element_evals = eng.backend().counters().element_evals;
    const double unit_cost = cfg.cost_per_element_us > 0.0 ? cfg.cost_per_element_us : 1.0;
    report.work_units = static_cast<double>(report.element_evals) * unit_cost;
    if (ssf) {
        report.ssf_examined = ssf->examined();
        report.ssf_skipped = ssf->skipped();
        report.skip_rate = ssf->examined() == 0
                               ? 0.0
                               : static_cast<double>(ssf->skipped()) /
                                     static_cast<double>(ssf->examined());
    }
    const auto& lats = stage.latencies();
    if (!lats.empty()) {
        std::int64_t lo = lats[0], hi = lats[0], sum = 0;
        for (auto l : lats) {
            lo = std::min(lo, l);
            hi = std::max(hi, l);
            sum += l;
        }
        report.latency_ticks_min = lo;
        report.latency_ticks_max = hi;
        report.latency_ticks_mean = static_cast<double>(sum) / static_cast<double>(lats.size());
    }
    if (opts.threaded) {
        report.wall_ms =
            std::chrono::duration<double, std::milli>(wall_end - wall_start).count();
        if (frames_out > 0) {
            report.mean_frame_time_ms = report.wall_ms / static_cast<double>(frames_out);
            report.throughput_fps = 1000.0 / report.mean_frame_time_ms;
        }
    } else {
        // Virtual time: one tick is one millisecond, so reports are
        // byte-identical across runs with the same seed and stream.
        if (frames_out > 0) {
            report.mean_frame_time_ms =
                static_cast<double>(report.ticks) / static_cast<double>(frames_out);
            report.throughput_fps = 1000.0 / report.mean_frame_time_ms;
            report.wall_ms = static_cast<double>(report.ticks);
        }
    }

    if (want_trace) write_trace(eng, opts.trace_path);
    return report;
}

}  // namespace stagger
