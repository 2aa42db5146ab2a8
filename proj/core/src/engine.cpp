#include "stagger/engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "stagger/attention.hpp"

namespace stagger {

namespace {

constexpr std::size_t kAttentionTokens = 4;

// Guidance combination for one already-predicted row. eps_neg is the
// negative-condition row (cfg only); x0_ref resolves self vs onetime.
Latent combine_row(const GuidanceConfig& g, const Latent& current, const ScheduleStep& step,
                   const Latent& eps_cond, const Latent* eps_neg, const Latent& x0_ref) {
    switch (g.mode) {
        case GuidanceMode::none:
            return eps_cond;
        case GuidanceMode::cfg:
            return cfg_combine(*eps_neg, eps_cond, g.gamma);
        case GuidanceMode::self_negative:
        case GuidanceMode::onetime_negative: {
            if (step.beta <= 0.0) return eps_cond;
            const Latent eps_virtual = virtual_residual_noise(current, step, x0_ref);
            return rcfg_combine(eps_virtual, eps_cond, g.gamma, g.delta);
        }
    }
    throw std::logic_error("unreachable guidance mode");
}

}  // namespace

StreamBatchEngine::StreamBatchEngine(const EngineConfig& cfg, PrecomputeCache cache,
                                     std::shared_ptr<DenoiserBackend> backend)
    : cfg_(validated(cfg)),
      cache_(std::move(cache)),
      backend_(std::move(backend)),
      guidance_(guidance_from_config(cfg_)) {
    if (!backend_) throw std::invalid_argument("StreamBatchEngine: null backend");
    if (cache_.schedule.n() != cfg_.n_steps)
        throw std::invalid_argument("StreamBatchEngine: schedule length != n_steps");
    if (cache_.eps_cached.size() != static_cast<size_t>(cfg_.n_steps))
        throw std::invalid_argument("StreamBatchEngine: noise cache length != n_steps");
    const bool needs_negative = guidance_.mode == GuidanceMode::cfg ||
                                guidance_.mode == GuidanceMode::onetime_negative;
    if (needs_negative && !guidance_.negative)
        throw std::invalid_argument("StreamBatchEngine: guidance mode requires negative_cond");
}

void StreamBatchEngine::ingest(std::int64_t seq_id, Latent x0, Condition cond) {
    if (x0.size() != static_cast<size_t>(cfg_.d_latent))
        throw std::invalid_argument("ingest: latent length != d_latent");
    if (cond.embedding.size() != static_cast<size_t>(cfg_.d_latent))
        throw std::invalid_argument("ingest: condition embedding length != d_latent");
    if (!all_finite(x0)) throw std::invalid_argument("ingest: non-finite latent");
    if (seq_id <= last_seq_)
        throw std::invalid_argument("ingest: seq ids must strictly increase");
    for (const auto& f : inflight_) {
        if (f.step_idx == 0)
            throw std::logic_error("ingest: step-0 slot already occupied, tick first");
    }

    InFlightFrame f;
    f.seq_id = seq_id;
    f.eps0 = cache_.eps_cached[0];
    f.current = forward_diffuse(x0, cache_.schedule.steps[0], f.eps0);
    f.x0 = std::move(x0);
    f.cond = std::move(cond);
    f.ingest_tick = ticks_;
    inflight_.push_back(std::move(f));
    last_seq_ = seq_id;
    ingested_since_tick_ = seq_id;
}

TickResult StreamBatchEngine::tick() {
    if (inflight_.empty()) throw std::logic_error("tick: no in-flight frames");
    const auto t_start = std::chrono::steady_clock::now();
    const CallCounters before = backend_->counters();

    const auto& steps = cache_.schedule.steps;
    const int n = cache_.schedule.n();
    const std::size_t b = inflight_.size();

    // One batched call per tick: conditional rows for every in-flight
    // frame, plus negative rows (cfg) or the one-time init rows for frames
    // that just entered at step 0 (onetime_negative).
    std::vector<Latent> xs;
    std::vector<ScheduleStep> ss;
    std::vector<Condition> cs;
    std::vector<std::size_t> init_frames;
    xs.reserve(2 * b);
    ss.reserve(2 * b);
    cs.reserve(2 * b);
    for (const auto& f : inflight_) {
        xs.push_back(f.current);
        ss.push_back(steps[static_cast<size_t>(f.step_idx)]);
        cs.push_back(f.cond);
    }
    if (guidance_.mode == GuidanceMode::cfg) {
        for (const auto& f : inflight_) {
            xs.push_back(f.current);
            ss.push_back(steps[static_cast<size_t>(f.step_idx)]);
            cs.push_back(*guidance_.negative);
        }
    } else if (guidance_.mode == GuidanceMode::onetime_negative) {
        for (std::size_t i = 0; i < b; ++i) {
            const auto& f = inflight_[i];
            if (f.step_idx == 0 && !f.gstate.initialized) {
                xs.push_back(f.current);
                ss.push_back(steps[0]);
                cs.push_back(*guidance_.negative);
                init_frames.push_back(i);
            }
        }
    }

    const auto eps_out = backend_->predict_eps_batch(xs, ss, cs);

    for (std::size_t k = 0; k < init_frames.size(); ++k) {
        auto& f = inflight_[init_frames[k]];
        f.gstate.x0_ref = predict_x0(f.current, steps[0], eps_out[b + k]);
        f.gstate.initialized = true;
    }

    std::vector<Latent> eps(b);
    for (std::size_t i = 0; i < b; ++i) {
        const auto& f = inflight_[i];
        const ScheduleStep& step = steps[static_cast<size_t>(f.step_idx)];
        const Latent* neg_row =
            guidance_.mode == GuidanceMode::cfg ? &eps_out[b + i] : nullptr;
        const Latent& x0_ref =
            guidance_.mode == GuidanceMode::onetime_negative ? f.gstate.x0_ref : f.x0;
        eps[i] = combine_row(guidance_, f.current, step, eps_out[i], neg_row, x0_ref);
    }

    if (cfg_.cross_frame_attention) {
        const std::size_t d_attn = static_cast<size_t>(cfg_.d_latent);
        for (std::size_t i = 0; i < b; ++i) inflight_[i].eps_pred = eps[i];
        const AttentionBatch batch =
            build_attention_batch(inflight_, kAttentionTokens, d_attn);
        for (std::size_t i = 0; i < b; ++i) {
            const Mat q = lift_tokens(inflight_[i].current, kAttentionTokens, d_attn);
            eps[i] = unlift_tokens(cross_frame_attention(q, batch),
                                   static_cast<size_t>(cfg_.d_latent));
        }
    }

    ++ticks_;

    static const Latent kNoRenoise;
    std::optional<EmittedFrame> emitted;
    std::size_t emit_index = b;  // past the end = none
    for (std::size_t i = 0; i < b; ++i) {
        auto& f = inflight_[i];
        const int next_idx = f.step_idx + 1;
        const ScheduleStep next =
            next_idx < n ? steps[static_cast<size_t>(next_idx)] : ScheduleStep::terminal();
        const Latent& renoise =
            next_idx < n ? cache_.eps_cached[static_cast<size_t>(next_idx)] : kNoRenoise;
        f.current = consistency_step(f.current, steps[static_cast<size_t>(f.step_idx)], next,
                                     eps[i], renoise, cache_.lcm);
        f.step_idx = next_idx;
        if (f.step_idx == n) {
            if (!all_finite(f.current))
                throw std::runtime_error("tick: non-finite latent at emission");
            emitted = EmittedFrame{f.seq_id, f.current, f.ingest_tick, ticks_};
            emit_index = i;
        }
    }
    if (emit_index < b) inflight_.erase(inflight_.begin() + static_cast<long>(emit_index));

    const CallCounters after = backend_->counters();
    TickResult result;
    result.emitted = std::move(emitted);
    result.denoiser_calls = after.calls - before.calls;
    result.element_evals = after.element_evals - before.element_evals;

    if (logging_) {
        const auto elapsed = std::chrono::steady_clock::now() - t_start;
        TickLogEntry e;
        e.tick = ticks_;
        e.ingested = ingested_since_tick_;
        if (result.emitted) e.emitted = result.emitted->seq_id;
        e.denoiser_calls = result.denoiser_calls;
        e.element_evals = result.element_evals;
        e.elapsed_ns =
            std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count();
        log_.push_back(e);
    }
    ingested_since_tick_.reset();
    return result;
}

std::vector<int> StreamBatchEngine::step_indices() const {
    std::vector<int> idx;
    idx.reserve(inflight_.size());
    for (const auto& f : inflight_) idx.push_back(f.step_idx);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::optional<std::int64_t> StreamBatchEngine::min_inflight_seq() const {
    std::optional<std::int64_t> min_seq;
    for (const auto& f : inflight_) {
        if (!min_seq || f.seq_id < *min_seq) min_seq = f.seq_id;
    }
    return min_seq;
}

Latent run_sequential_reference(const Latent& x0, const Condition& cond,
                                const PrecomputeCache& cache, DenoiserBackend& backend,
                                const GuidanceConfig& g) {
    const auto& steps = cache.schedule.steps;
    const int n = cache.schedule.n();
    Latent x = forward_diffuse(x0, steps[0], cache.eps_cached[0]);

    GuidanceState gs;
    if (g.mode == GuidanceMode::onetime_negative) {
        if (!g.negative)
            throw std::invalid_argument("run_sequential_reference: missing negative_cond");
        gs = init_onetime_negative(x, steps[0], backend, *g.negative);
    }

    static const Latent kNoRenoise;
    for (int i = 0; i < n; ++i) {
        const Latent eps =
            guided_eps(x, x0, gs, steps[static_cast<size_t>(i)], backend, cond, g);
        const ScheduleStep next =
            i + 1 < n ? steps[static_cast<size_t>(i + 1)] : ScheduleStep::terminal();
        const Latent& renoise =
            i + 1 < n ? cache.eps_cached[static_cast<size_t>(i + 1)] : kNoRenoise;
        x = consistency_step(x, steps[static_cast<size_t>(i)], next, eps, renoise, cache.lcm);
    }
    return x;
}

WaitAndBatchResult run_wait_and_batch_reference(const std::vector<Latent>& x0s,
                                                const std::vector<Condition>& conds,
                                                const PrecomputeCache& cache,
                                                DenoiserBackend& backend,
                                                const GuidanceConfig& g) {
    const std::size_t m = x0s.size();
    if (m == 0) throw std::invalid_argument("run_wait_and_batch_reference: empty batch");
    if (conds.size() != m)
        throw std::invalid_argument("run_wait_and_batch_reference: conds length mismatch");

    const auto& steps = cache.schedule.steps;
    const int n = cache.schedule.n();

    std::vector<Latent> xs(m);
    for (std::size_t j = 0; j < m; ++j)
        xs[j] = forward_diffuse(x0s[j], steps[0], cache.eps_cached[0]);
    std::vector<GuidanceState> gs(m);

    static const Latent kNoRenoise;
    for (int i = 0; i < n; ++i) {
        const ScheduleStep& step = steps[static_cast<size_t>(i)];
        std::vector<Latent> rows;
        std::vector<ScheduleStep> ss;
        std::vector<Condition> cs;
        rows.reserve(2 * m);
        ss.reserve(2 * m);
        cs.reserve(2 * m);
        for (std::size_t j = 0; j < m; ++j) {
            rows.push_back(xs[j]);
            ss.push_back(step);
            cs.push_back(conds[j]);
        }
        const bool init_now = g.mode == GuidanceMode::onetime_negative && i == 0;
        if (g.mode == GuidanceMode::cfg || init_now) {
            if (!g.negative)
                throw std::invalid_argument(
                    "run_wait_and_batch_reference: missing negative_cond");
            for (std::size_t j = 0; j < m; ++j) {
                rows.push_back(xs[j]);
                ss.push_back(step);
                cs.push_back(*g.negative);
            }
        }
        const auto out = backend.predict_eps_batch(rows, ss, cs);
        if (init_now) {
            for (std::size_t j = 0; j < m; ++j) {
                gs[j].x0_ref = predict_x0(xs[j], steps[0], out[m + j]);
                gs[j].initialized = true;
            }
        }
        const ScheduleStep next =
            i + 1 < n ? steps[static_cast<size_t>(i + 1)] : ScheduleStep::terminal();
        const Latent& renoise =
            i + 1 < n ? cache.eps_cached[static_cast<size_t>(i + 1)] : kNoRenoise;
        for (std::size_t j = 0; j < m; ++j) {
            const Latent* neg_row = g.mode == GuidanceMode::cfg ? &out[m + j] : nullptr;
            const Latent& x0_ref =
                g.mode == GuidanceMode::onetime_negative ? gs[j].x0_ref : x0s[j];
            const Latent eps = combine_row(g, xs[j], step, out[j], neg_row, x0_ref);
            xs[j] = consistency_step(xs[j], step, next, eps, renoise, cache.lcm);
        }
    }

    WaitAndBatchResult result;
    result.outputs = std::move(xs);
    result.latency_ticks.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        result.latency_ticks[j] = static_cast<std::int64_t>(m + static_cast<size_t>(n) - j);
    return result;
}

}  // namespace stagger
