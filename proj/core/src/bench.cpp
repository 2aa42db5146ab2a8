#include "stagger/bench.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stagger/engine.hpp"
#include "stagger/pipeline.hpp"
#include "stagger/precompute.hpp"
#include "stagger/ssf.hpp"

namespace stagger {

namespace {

using clock_t_ = std::chrono::steady_clock;

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Condition bench_condition(std::uint64_t seed, int d, std::uint64_t tag) {
    Rng rng(derive_seed(seed, tag));
    return Condition{tag == kStreamCondition ? "cond" : "negative",
                     sample_gaussian(rng, static_cast<size_t>(d))};
}

EngineConfig bench_config(const BenchOptions& opts, int n, GuidanceMode mode,
                          double c_call_us, double c_elem_us) {
    EngineConfig cfg;
    cfg.n_steps = n;
    cfg.guidance_mode = mode;
    cfg.seed = opts.seed;
    cfg.d_latent = opts.d_latent;
    cfg.backend = "synthetic";
    cfg.cost_per_call_us = c_call_us;
    cfg.cost_per_element_us = c_elem_us;
    cfg.queue_capacity = opts.frames + opts.warmup_frames + 16;  // strict FIFO, no drops
    if (mode == GuidanceMode::cfg || mode == GuidanceMode::onetime_negative)
        cfg.negative_condition =
            bench_condition(opts.seed, opts.d_latent, kStreamCondition + 1).embedding;
    return cfg;
}

// Median steady-state inter-emission gap (ms) of one threaded pipeline
// run: the first and last n gaps are pipeline fill/drain and are dropped.
double stream_run_ms_per_frame(const EngineConfig& cfg, int frames, std::uint64_t seed) {
    StreamGenerator gen(StreamGenerator::Kind::dynamic_walk, cfg.d_latent, seed);
    auto source = StreamGenerator::as_source(std::move(gen), frames);

    std::vector<clock_t_::time_point> stamps;
    stamps.reserve(static_cast<size_t>(frames));
    auto sink = [&stamps](const Frame&) { stamps.push_back(clock_t_::now()); };

    PipelineOptions popts;
    popts.threaded = true;
    popts.strict_fifo = true;
    const MetricsReport report = run_pipeline(cfg, source, sink, popts);
    if (report.incomplete)
        throw std::runtime_error("bench: pipeline run failed: " + report.error);

    const int n = cfg.n_steps;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        const auto lo = static_cast<std::size_t>(n);
        const auto hi = stamps.size() > static_cast<std::size_t>(n) ? stamps.size() - n : 0;
        if (i < lo || i >= hi) continue;
        gaps.push_back(
            std::chrono::duration<double, std::milli>(stamps[i] - stamps[i - 1]).count());
    }
    if (gaps.empty() && stamps.size() >= 2) {
        for (std::size_t i = 1; i < stamps.size(); ++i)
            gaps.push_back(
                std::chrono::duration<double, std::milli>(stamps[i] - stamps[i - 1]).count());
    }
    return median(std::move(gaps));
}

double sequential_run_ms_per_frame(const EngineConfig& cfg, int frames, std::uint64_t seed) {
    const Condition cond = bench_condition(cfg.seed, cfg.d_latent, kStreamCondition);
    std::vector<Condition> conds{cond};
    GuidanceConfig g = guidance_from_config(cfg);
    if (g.negative) conds.push_back(*g.negative);
    const PrecomputeCache cache = build_precompute(cfg, conds);
    auto backend = make_backend(cfg);

    StreamGenerator gen(StreamGenerator::Kind::dynamic_walk, cfg.d_latent, seed);
    std::vector<Latent> inputs;
    inputs.reserve(static_cast<size_t>(frames));
    for (int i = 0; i < frames; ++i) inputs.push_back(gen.next().payload);

    const auto t0 = clock_t_::now();
    for (const auto& x0 : inputs) run_sequential_reference(x0, cond, cache, *backend, g);
    const auto t1 = clock_t_::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / frames;
}

// One warm-up run, then median of `repeats` measured runs.
template <typename Fn>
double timed_median(const BenchOptions& opts, Fn&& run_ms) {
    if (opts.warmup_frames > 0) run_ms(opts.warmup_frames);
    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(opts.repeats));
    for (int r = 0; r < std::max(1, opts.repeats); ++r) samples.push_back(run_ms(opts.frames));
    return median(std::move(samples));
}

// Deterministic counting run; returns exact element evaluations per frame.
std::int64_t evals_per_frame(const BenchOptions& opts, int n, GuidanceMode mode) {
    EngineConfig cfg = bench_config(opts, n, mode, 0.0, 0.0);
    const int frames = 25;
    StreamGenerator gen(StreamGenerator::Kind::dynamic_walk, cfg.d_latent, opts.seed);
    auto source = StreamGenerator::as_source(std::move(gen), frames);
    const MetricsReport report = run_pipeline(cfg, source, [](const Frame&) {});
    if (report.incomplete)
        throw std::runtime_error("bench: counting run failed: " + report.error);
    if (report.element_evals % report.frames_in != 0)
        throw std::logic_error("bench: element evaluations not divisible by frame count");
    return static_cast<std::int64_t>(report.element_evals / report.frames_in);
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    if (s == "both") return ReportFormat::both;
    throw std::invalid_argument("unknown report format: " + s);
}

std::string cell_text(const Cell& cell) {
    if (std::holds_alternative<std::int64_t>(cell))
        return nlohmann::json(std::get<std::int64_t>(cell)).dump();
    if (std::holds_alternative<double>(cell))
        return nlohmann::json(std::get<double>(cell)).dump();
    return std::get<std::string>(cell);
}

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string table_to_csv(const Table& table) {
    std::ostringstream os;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) os << ',';
        os << csv_quote(table.columns[c]);
    }
    os << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::logic_error("table_to_csv: row width mismatch in " + table.name);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            os << csv_quote(cell_text(row[c]));
        }
        os << '\n';
    }
    return os.str();
}

std::string table_to_json(const Table& table) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["name"] = table.name;
    j["columns"] = table.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::logic_error("table_to_json: row width mismatch in " + table.name);
        nlohmann::ordered_json r = nlohmann::ordered_json::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<std::int64_t>(cell)) r.push_back(std::get<std::int64_t>(cell));
            else if (std::holds_alternative<double>(cell)) r.push_back(std::get<double>(cell));
            else r.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::vector<std::string> emit_report(const std::vector<Table>& tables, ReportFormat format,
                                     const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    for (const auto& table : tables) {
        if (format == ReportFormat::csv || format == ReportFormat::both) {
            const auto path = (fs::path(out_dir) / (table.name + ".csv")).string();
            std::ofstream out(path, std::ios::binary);
            if (!out) throw std::runtime_error("emit_report: cannot open " + path);
            out << table_to_csv(table);
            written.push_back(path);
        }
        if (format == ReportFormat::json || format == ReportFormat::both) {
            const auto path = (fs::path(out_dir) / (table.name + ".json")).string();
            std::ofstream out(path, std::ios::binary);
            if (!out) throw std::runtime_error("emit_report: cannot open " + path);
            out << table_to_json(table);
            written.push_back(path);
        }
    }
    return written;
}

double stream_batch_speedup_model(int n, double cost_per_call_us, double cost_per_element_us) {
    const double seq = n * (cost_per_call_us + cost_per_element_us);
    const double stream = cost_per_call_us + n * cost_per_element_us;
    return seq / stream;
}

Table bench_stream_batch(const std::vector<int>& n_list, double cost_per_call_us,
                         double cost_per_element_us, const BenchOptions& opts) {
    Table t;
    t.name = "stream_batch";
    t.columns = {"n", "sequential_ms", "stream_ms", "speedup", "model_speedup"};
    for (int n : n_list) {
        const EngineConfig cfg =
            bench_config(opts, n, GuidanceMode::none, cost_per_call_us, cost_per_element_us);
        const double seq_ms = timed_median(
            opts, [&](int frames) { return sequential_run_ms_per_frame(cfg, frames, opts.seed); });
        const double stream_ms = timed_median(
            opts, [&](int frames) { return stream_run_ms_per_frame(cfg, frames, opts.seed); });
        t.rows.push_back({static_cast<std::int64_t>(n), seq_ms, stream_ms, seq_ms / stream_ms,
                          stream_batch_speedup_model(n, cost_per_call_us, cost_per_element_us)});
    }
    return t;
}

std::vector<Table> bench_guidance(const std::vector<int>& n_list, double cost_per_call_us,
                                  double cost_per_element_us, const BenchOptions& opts) {
    Table times;
    times.name = "guidance_time";
    times.columns = {"n",       "cfg_ms",        "self_negative_ms", "onetime_negative_ms",
                     "cfg_over_self", "cfg_over_onetime"};
    Table calls;
    calls.name = "guidance_calls";
    calls.columns = {"n", "cfg_evals_per_frame", "self_negative_evals_per_frame",
                     "onetime_negative_evals_per_frame"};

    for (int n : n_list) {
        auto time_mode = [&](GuidanceMode mode) {
            const EngineConfig cfg =
                bench_config(opts, n, mode, cost_per_call_us, cost_per_element_us);
            return timed_median(opts, [&](int frames) {
                return stream_run_ms_per_frame(cfg, frames, opts.seed);
            });
        };
        const double cfg_ms = time_mode(GuidanceMode::cfg);
        const double self_ms = time_mode(GuidanceMode::self_negative);
        const double onetime_ms = time_mode(GuidanceMode::onetime_negative);
        times.rows.push_back({static_cast<std::int64_t>(n), cfg_ms, self_ms, onetime_ms,
                              cfg_ms / self_ms, cfg_ms / onetime_ms});
        calls.rows.push_back({static_cast<std::int64_t>(n),
                              evals_per_frame(opts, n, GuidanceMode::cfg),
                              evals_per_frame(opts, n, GuidanceMode::self_negative),
                              evals_per_frame(opts, n, GuidanceMode::onetime_negative)});
    }
    return {times, calls};
}

std::vector<Table> bench_ssf(StreamGenerator::Kind kind, double eta, int n_steps,
                             const BenchOptions& opts) {
    const int frames = std::max(opts.frames, 40);
    const int window = 10;

    auto make_cfg = [&](bool ssf_on) {
        EngineConfig cfg;
        cfg.n_steps = n_steps;
        cfg.seed = opts.seed;
        cfg.d_latent = opts.d_latent;
        cfg.backend = "synthetic";  // zero cost: counters only
        cfg.ssf_enabled = ssf_on;
        cfg.eta = eta;
        cfg.queue_capacity = 8;
        return cfg;
    };
    auto run = [&](bool ssf_on) {
        StreamGenerator gen(kind, opts.d_latent, opts.seed);
        auto source = StreamGenerator::as_source(std::move(gen), frames);
        MetricsReport r = run_pipeline(make_cfg(ssf_on), source, [](const Frame&) {});
        if (r.incomplete) throw std::runtime_error("bench_ssf: run failed: " + r.error);
        return r;
    };
    const MetricsReport off = run(false);
    const MetricsReport on = run(true);

    Table summary;
    summary.name = "ssf_summary";
    summary.columns = {"ssf",     "examined",  "skipped",          "skip_rate",
                       "element_evals", "work_units", "work_units_saved", "reduction"};
    const double saved = off.work_units - on.work_units;
    const double reduction = on.work_units > 0.0 ? off.work_units / on.work_units : 0.0;
    summary.rows.push_back({std::string("off"), static_cast<std::int64_t>(off.frames_in),
                            static_cast<std::int64_t>(0), 0.0,
                            static_cast<std::int64_t>(off.element_evals), off.work_units, 0.0,
                            1.0});
    summary.rows.push_back({std::string("on"), static_cast<std::int64_t>(on.ssf_examined),
                            static_cast<std::int64_t>(on.ssf_skipped), on.skip_rate,
                            static_cast<std::int64_t>(on.element_evals), on.work_units, saved,
                            reduction});

    // Per-window time series rebuilt from the gate decisions: a processed
    // frame costs n element evaluations, a skipped one costs none. The
    // gate replay uses the same derived rng stream as the pipeline run, so
    // decisions are identical.
    Table series;
    series.name = "ssf_timeseries";
    series.columns = {"window", "frames", "processed", "evals_without_ssf", "evals_with_ssf"};
    {
        StreamGenerator gen(kind, opts.d_latent, opts.seed);
        SsfState gate_state(eta, Rng(derive_seed(opts.seed, kStreamSsf)));
        std::vector<int> processed((frames + window - 1) / window, 0);
        std::vector<int> total(processed.size(), 0);
        for (int i = 0; i < frames; ++i) {
            const Frame f = gen.next();
            const auto w = static_cast<std::size_t>(i / window);
            total[w] += 1;
            if (gate_state.gate(f) == GateDecision::process) processed[w] += 1;
        }
        for (std::size_t w = 0; w < processed.size(); ++w) {
            series.rows.push_back({static_cast<std::int64_t>(w),
                                   static_cast<std::int64_t>(total[w]),
                                   static_cast<std::int64_t>(processed[w]),
                                   static_cast<std::int64_t>(total[w] * n_steps),
                                   static_cast<std::int64_t>(processed[w] * n_steps)});
        }
    }

    // Smoothness: longest consecutive skip run on a near-threshold stream,
    // probabilistic gate vs hard threshold. The hard filter tends to latch
    // onto its reference and stall.
    Table smooth;
    smooth.name = "ssf_smoothness";
    smooth.columns = {"filter", "examined", "skipped", "longest_skip_run"};
    {
        const int near_frames = 2000;
        auto longest_run = [&](auto& filter) {
            StreamGenerator gen(StreamGenerator::Kind::dynamic_walk, opts.d_latent, opts.seed,
                                0.12);
            std::int64_t longest = 0, current = 0, skipped = 0;
            for (int i = 0; i < near_frames; ++i) {
                if (filter.gate(gen.next()) == GateDecision::skip) {
                    current += 1;
                    skipped += 1;
                    longest = std::max(longest, current);
                } else {
                    current = 0;
                }
            }
            return std::pair{skipped, longest};
        };
        SsfState prob(eta, Rng(derive_seed(opts.seed, kStreamSsf)));
        HardThresholdFilter hard(eta);
        const auto [pskip, prun] = longest_run(prob);
        const auto [hskip, hrun] = longest_run(hard);
        smooth.rows.push_back({std::string("ssf"), static_cast<std::int64_t>(near_frames),
                               pskip, prun});
        smooth.rows.push_back({std::string("hard_threshold"),
                               static_cast<std::int64_t>(near_frames), hskip, hrun});
    }

    return {summary, series, smooth};
}

std::vector<Table> bench_all(const BenchOptions& opts) {
    std::vector<Table> tables;
    tables.push_back(bench_stream_batch({1, 2, 4, 10}, 9000.0, 1000.0, opts));
    for (auto& t : bench_guidance({1, 2, 3, 4, 5}, 200.0, 2000.0, opts)) tables.push_back(t);
    for (auto& t : bench_ssf(StreamGenerator::Kind::periodic_static, 0.98, 2, opts))
        tables.push_back(t);
    return tables;
}

}  // namespace stagger
