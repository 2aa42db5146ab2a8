// stagger CLI: drive the streaming pipeline, dump schedules, and run the
// comparison benches. See README.md for the config and report schemas.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stagger/bench.hpp"
#include "stagger/config_io.hpp"
#include "stagger/metrics.hpp"
#include "stagger/pipeline.hpp"
#include "stagger/schedule.hpp"
#include "stagger/stream_gen.hpp"

using namespace stagger;

namespace {

int cmd_run(const std::string& config_path, const std::string& source_kind,
            std::int64_t frames, const std::string& input_path,
            const std::string& report_path, const std::string& trace_path, bool threaded,
            double pace_us, bool print_report) {
    EngineConfig cfg = config_path.empty() ? EngineConfig{} : load_config(config_path);
    cfg = validated(cfg);

    FrameSource source;
    if (source_kind == "file") {
        if (input_path.empty()) {
            std::cerr << "run: --source file requires --input\n";
            return 2;
        }
        source = vector_source(load_frames_json(input_path));
    } else {
        StreamGenerator gen(stream_kind_from_string(source_kind), cfg.d_latent, cfg.seed);
        source = StreamGenerator::as_source(std::move(gen), frames);
    }

    PipelineOptions opts;
    opts.threaded = threaded;
    opts.strict_fifo = !threaded;
    opts.trace_path = trace_path;
    opts.pace_us = pace_us;

    std::uint64_t delivered = 0;
    MetricsReport report =
        run_pipeline(cfg, source, [&delivered](const Frame&) { ++delivered; }, opts);

    if (!report_path.empty()) write_report(report, report_path);
    if (print_report || report_path.empty()) std::cout << report_to_json(report);
    if (report.incomplete) {
        std::cerr << "run: pipeline aborted: " << report.error << "\n";
        return 1;
    }
    return 0;
}

int cmd_schedule(int n, int t_grid, double entry, const std::string& out_path) {
    const NoiseSchedule sched = build_schedule(n, t_grid, entry);
    if (out_path.empty()) {
        dump_schedule_csv(sched, std::cout);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "schedule: cannot open " << out_path << "\n";
            return 1;
        }
        dump_schedule_csv(sched, out);
    }
    return 0;
}

void write_tables(const std::vector<Table>& tables, const std::string& format,
                  const std::string& out_dir) {
    const auto written = emit_report(tables, report_format_from_string(format), out_dir);
    for (const auto& path : written) std::cout << "wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stagger: staggered-batch streaming denoising pipeline"};
    app.require_subcommand(1);

    // run
    std::string config_path, source_kind = "dynamic", input_path, report_path, trace_path;
    std::int64_t frames = 100;
    bool threaded = false, print_report = false;
    double pace_us = 0.0;
    auto* run = app.add_subcommand("run", "Run the pipeline over a frame stream");
    run->add_option("--config", config_path, "JSON config file (defaults when omitted)");
    run->add_option("--source", source_kind, "static|dynamic|periodic|file")
        ->default_val("dynamic");
    run->add_option("--frames", frames, "frame count for generated sources")
        ->default_val(100);
    run->add_option("--input", input_path, "frame file for --source file");
    run->add_option("--report", report_path, "write the metrics report JSON here");
    run->add_option("--trace", trace_path, "write a JSON-lines tick trace here");
    run->add_flag("--threaded", threaded, "three-stage concurrent mode");
    run->add_option("--pace-us", pace_us, "source pacing in microseconds (threaded)");
    run->add_flag("--print", print_report, "print the report to stdout");

    // schedule
    int sched_n = 4, sched_t = 1000;
    double sched_entry = 1.0;
    std::string sched_out;
    auto* schedule = app.add_subcommand("schedule", "Dump a noise schedule as CSV");
    schedule->add_option("--n", sched_n, "denoising steps")->default_val(4);
    schedule->add_option("--t-grid", sched_t, "grid size")->default_val(1000);
    schedule->add_option("--entry", sched_entry, "entry strength in (0,1]")->default_val(1.0);
    schedule->add_option("--out", sched_out, "output path (stdout when omitted)");

    // bench
    BenchOptions bopts;
    std::string bench_format = "both", out_dir = "bench_out";
    auto* bench = app.add_subcommand("bench", "Comparison benches");
    bench->require_subcommand(1);
    bench->add_option("--seed", bopts.seed, "rng seed")->default_val(0);
    bench->add_option("--out-dir", out_dir, "output directory")->default_val("bench_out");
    bench->add_option("--format", bench_format, "csv|json|both")->default_val("both");
    bench->add_option("--frames", bopts.frames, "frames per measured run")->default_val(100);
    bench->add_option("--warmup-frames", bopts.warmup_frames, "warm-up run length")
        ->default_val(100);
    bench->add_option("--repeats", bopts.repeats, "median-of-k repeats")->default_val(5);

    double c_call_us = 9000.0, c_elem_us = 1000.0;
    auto* bsb = bench->add_subcommand("stream-batch", "staggered batch vs sequential loop");
    bsb->fallthrough();
    bsb->add_option("--cost-call-us", c_call_us, "per-call cost")->default_val(9000.0);
    bsb->add_option("--cost-elem-us", c_elem_us, "per-element cost")->default_val(1000.0);

    double g_call_us = 200.0, g_elem_us = 2000.0;
    auto* bgu = bench->add_subcommand("guidance", "guidance mode comparison");
    bgu->fallthrough();
    bgu->add_option("--cost-call-us", g_call_us, "per-call cost")->default_val(200.0);
    bgu->add_option("--cost-elem-us", g_elem_us, "per-element cost")->default_val(2000.0);

    std::string ssf_gen = "periodic";
    double ssf_eta = 0.98;
    int ssf_steps = 2;
    auto* bss = bench->add_subcommand("ssf", "similarity filter energy proxy");
    bss->fallthrough();
    bss->add_option("--gen", ssf_gen, "static|dynamic|periodic")->default_val("periodic");
    bss->add_option("--eta", ssf_eta, "similarity threshold")->default_val(0.98);
    bss->add_option("--n-steps", ssf_steps, "denoising steps")->default_val(2);

    auto* ball = bench->add_subcommand("all", "every bench at its defaults");
    ball->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(config_path, source_kind, frames, input_path, report_path,
                           trace_path, threaded, pace_us, print_report);
        if (*schedule) return cmd_schedule(sched_n, sched_t, sched_entry, sched_out);
        if (*bsb) {
            write_tables({bench_stream_batch({1, 2, 4, 10}, c_call_us, c_elem_us, bopts)},
                         bench_format, out_dir);
            return 0;
        }
        if (*bgu) {
            write_tables(bench_guidance({1, 2, 3, 4, 5}, g_call_us, g_elem_us, bopts),
                         bench_format, out_dir);
            return 0;
        }
        if (*bss) {
            write_tables(bench_ssf(stream_kind_from_string(ssf_gen), ssf_eta, ssf_steps, bopts),
                         bench_format, out_dir);
            return 0;
        }
        if (*ball) {
            write_tables(bench_all(bopts), bench_format, out_dir);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
