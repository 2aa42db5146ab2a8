#include "stagger/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace stagger {

std::string report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = r.schema_version;
    j["mode"] = r.mode;
    j["incomplete"] = r.incomplete;
    j["error"] = r.error;
    j["frames_in"] = r.frames_in;
    j["frames_out"] = r.frames_out;
    j["duplicates"] = r.duplicates;
    j["stale_skips"] = r.stale_skips;
    j["input_drops"] = r.input_drops;
    j["output_drops"] = r.output_drops;
    j["ticks"] = r.ticks;
    j["denoiser_calls"] = r.denoiser_calls;
    j["element_evals"] = r.element_evals;
    j["work_units"] = r.work_units;
    j["ssf_examined"] = r.ssf_examined;
    j["ssf_skipped"] = r.ssf_skipped;
    j["skip_rate"] = r.skip_rate;
    j["latency_ticks_mean"] = r.latency_ticks_mean;
    j["latency_ticks_min"] = r.latency_ticks_min;
    j["latency_ticks_max"] = r.latency_ticks_max;
    j["mean_frame_time_ms"] = r.mean_frame_time_ms;
    j["throughput_fps"] = r.throughput_fps;
    j["wall_ms"] = r.wall_ms;
    return j.dump(2) + "\n";
}

void write_report(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_report: cannot open " + path);
    out << report_to_json(report);
}

}  // namespace stagger
