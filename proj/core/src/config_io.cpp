#include "stagger/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace stagger {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "n_steps",        "guidance_mode",   "gamma",
        "delta",          "ssf_enabled",     "eta",
        "seed",           "cross_frame_attention", "d_latent",
        "t_grid",         "entry_strength",  "backend",
        "data_variance",  "cost_per_call_us", "cost_per_element_us",
        "synthetic_output", "lcm_mode",      "codec",
        "queue_capacity", "condition",       "negative_condition",
    };
    return keys;
}

}  // namespace

EngineConfig config_from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_object())
        throw std::invalid_argument("config: top-level document must be a JSON object");

    std::vector<std::string> unknown;
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys().count(key)) unknown.push_back(key);
    }
    if (!unknown.empty()) {
        std::ostringstream oss;
        oss << "config: unknown key(s):";
        for (const auto& k : unknown) oss << " \"" << k << "\"";
        throw std::invalid_argument(oss.str());
    }

    EngineConfig cfg;
    if (doc.contains("n_steps")) cfg.n_steps = doc["n_steps"].get<int>();
    if (doc.contains("guidance_mode"))
        cfg.guidance_mode = guidance_mode_from_string(doc["guidance_mode"].get<std::string>());
    if (doc.contains("gamma")) cfg.gamma = doc["gamma"].get<double>();
    if (doc.contains("delta")) cfg.delta = doc["delta"].get<double>();
    if (doc.contains("ssf_enabled")) cfg.ssf_enabled = doc["ssf_enabled"].get<bool>();
    if (doc.contains("eta")) cfg.eta = doc["eta"].get<double>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("cross_frame_attention"))
        cfg.cross_frame_attention = doc["cross_frame_attention"].get<bool>();
    if (doc.contains("d_latent")) cfg.d_latent = doc["d_latent"].get<int>();
    if (doc.contains("t_grid")) cfg.t_grid = doc["t_grid"].get<int>();
    if (doc.contains("entry_strength")) cfg.entry_strength = doc["entry_strength"].get<double>();
    if (doc.contains("backend")) cfg.backend = doc["backend"].get<std::string>();
    if (doc.contains("data_variance")) cfg.data_variance = doc["data_variance"].get<double>();
    if (doc.contains("cost_per_call_us"))
        cfg.cost_per_call_us = doc["cost_per_call_us"].get<double>();
    if (doc.contains("cost_per_element_us"))
        cfg.cost_per_element_us = doc["cost_per_element_us"].get<double>();
    if (doc.contains("synthetic_output"))
        cfg.synthetic_output = doc["synthetic_output"].get<std::string>();
    if (doc.contains("lcm_mode")) cfg.lcm_mode = doc["lcm_mode"].get<std::string>();
    if (doc.contains("codec")) cfg.codec = doc["codec"].get<std::string>();
    if (doc.contains("queue_capacity")) cfg.queue_capacity = doc["queue_capacity"].get<int>();
    if (doc.contains("condition")) cfg.condition = doc["condition"].get<std::vector<double>>();
    if (doc.contains("negative_condition"))
        cfg.negative_condition = doc["negative_condition"].get<std::vector<double>>();

    return validated(cfg);
}

EngineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const EngineConfig& cfg) {
    nlohmann::ordered_json j;
    j["n_steps"] = cfg.n_steps;
    j["guidance_mode"] = to_string(cfg.guidance_mode);
    j["gamma"] = cfg.gamma;
    j["delta"] = cfg.delta;
    j["ssf_enabled"] = cfg.ssf_enabled;
    j["eta"] = cfg.eta;
    j["seed"] = cfg.seed;
    j["cross_frame_attention"] = cfg.cross_frame_attention;
    j["d_latent"] = cfg.d_latent;
    j["t_grid"] = cfg.t_grid;
    j["entry_strength"] = cfg.entry_strength;
    j["backend"] = cfg.backend;
    j["data_variance"] = cfg.data_variance;
    j["cost_per_call_us"] = cfg.cost_per_call_us;
    j["cost_per_element_us"] = cfg.cost_per_element_us;
    j["synthetic_output"] = cfg.synthetic_output;
    j["lcm_mode"] = cfg.lcm_mode;
    j["codec"] = cfg.codec;
    j["queue_capacity"] = cfg.queue_capacity;
    j["condition"] = cfg.condition;
    j["negative_condition"] = cfg.negative_condition;
    return j.dump(2) + "\n";
}

}  // namespace stagger
