#include "stagger/core.hpp"

#include <sstream>
#include <stdexcept>

namespace stagger {

std::string to_string(GuidanceMode mode) {
    switch (mode) {
        case GuidanceMode::none: return "none";
        case GuidanceMode::cfg: return "cfg";
        case GuidanceMode::self_negative: return "self_negative";
        case GuidanceMode::onetime_negative: return "onetime_negative";
    }
    throw std::logic_error("unreachable guidance mode");
}

GuidanceMode guidance_mode_from_string(const std::string& s) {
    if (s == "none") return GuidanceMode::none;
    if (s == "cfg") return GuidanceMode::cfg;
    if (s == "self_negative") return GuidanceMode::self_negative;
    if (s == "onetime_negative") return GuidanceMode::onetime_negative;
    throw std::invalid_argument("unknown guidance_mode: " + s);
}

std::vector<std::string> validate_config(const EngineConfig& cfg) {
    std::vector<std::string> errs;
    if (cfg.n_steps < 1) errs.push_back("n_steps must be >= 1");
    if (!(cfg.eta >= 0.0 && cfg.eta < 1.0))
        errs.push_back("eta out of range: must lie in [0,1) so 1-eta stays positive");
    if (!(cfg.gamma >= 0.0)) errs.push_back("gamma must be >= 0");
    if (!(cfg.delta >= 0.0 && cfg.delta <= 1.0)) errs.push_back("delta must lie in [0,1]");
    if (cfg.d_latent < 1) errs.push_back("d_latent must be >= 1");
    if (cfg.t_grid < 1) errs.push_back("t_grid must be >= 1");
    if (cfg.n_steps > cfg.t_grid) errs.push_back("n_steps must not exceed t_grid");
    if (!(cfg.entry_strength > 0.0 && cfg.entry_strength <= 1.0))
        errs.push_back("entry_strength must lie in (0,1]");
    if (cfg.backend != "analytic" && cfg.backend != "synthetic")
        errs.push_back("backend must be \"analytic\" or \"synthetic\"");
    if (!(cfg.data_variance > 0.0)) errs.push_back("data_variance must be > 0");
    if (cfg.cost_per_call_us < 0.0) errs.push_back("cost_per_call_us must be >= 0");
    if (cfg.cost_per_element_us < 0.0) errs.push_back("cost_per_element_us must be >= 0");
    if (cfg.synthetic_output != "zeros" && cfg.synthetic_output != "passthrough")
        errs.push_back("synthetic_output must be \"zeros\" or \"passthrough\"");
    if (cfg.lcm_mode != "exact" && cfg.lcm_mode != "boundary_approx")
        errs.push_back("lcm_mode must be \"exact\" or \"boundary_approx\"");
    if (cfg.codec != "identity" && cfg.codec != "affine")
        errs.push_back("codec must be \"identity\" or \"affine\"");
    if (cfg.queue_capacity < 1) errs.push_back("queue_capacity must be >= 1");
    if (!cfg.condition.empty() && cfg.condition.size() != static_cast<size_t>(cfg.d_latent))
        errs.push_back("condition length must equal d_latent");
    const bool needs_negative = cfg.guidance_mode == GuidanceMode::cfg ||
                                cfg.guidance_mode == GuidanceMode::onetime_negative;
    if (needs_negative && cfg.negative_condition.empty())
        errs.push_back("negative_condition is required for cfg/onetime_negative modes");
    if (!cfg.negative_condition.empty() &&
        cfg.negative_condition.size() != static_cast<size_t>(cfg.d_latent))
        errs.push_back("negative_condition length must equal d_latent");
    return errs;
}

EngineConfig validated(const EngineConfig& cfg) {
    auto errs = validate_config(cfg);
    if (errs.empty()) return cfg;
    std::ostringstream oss;
    oss << "invalid config:";
    for (const auto& e : errs) oss << "\n  - " << e;
    throw std::invalid_argument(oss.str());
}

void require_same_dim(const Latent& a, const Latent& b, const char* where) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

}  // namespace stagger
