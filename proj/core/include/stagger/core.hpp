#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stagger {

/// A latent is a flat vector of doubles. All math in this library runs in
/// one precision (fp64) end to end; there are no per-call conversions.
using Latent = std::vector<double>;

/// A raw stream sample: the stand-in for an input/output image.
struct Frame {
    std::int64_t seq_id = 0;
    Latent payload;
    std::optional<std::int64_t> tick_in;
};

/// A conditioning vector. For the analytic backend the embedding is the
/// target mean the denoiser pulls predictions toward.
struct Condition {
    std::string id;
    Latent embedding;
};

enum class GuidanceMode {
    none,
    cfg,
    self_negative,
    onetime_negative,
};

std::string to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& s);

/// Full engine configuration. Mirrored 1:1 by the JSON config file
/// (snake_case keys, unknown keys rejected).
struct EngineConfig {
    int n_steps = 4;
    GuidanceMode guidance_mode = GuidanceMode::none;
    double gamma = 1.4;
    double delta = 1.0;
    bool ssf_enabled = false;
    double eta = 0.98;
    std::uint64_t seed = 0;
    bool cross_frame_attention = false;

    int d_latent = 8;
    int t_grid = 1000;
    double entry_strength = 1.0;

    std::string backend = "analytic";      // "analytic" | "synthetic"
    double data_variance = 1.0;            // analytic backend sigma^2_x
    double cost_per_call_us = 0.0;         // synthetic backend costs
    double cost_per_element_us = 0.0;
    std::string synthetic_output = "zeros";  // "zeros" | "passthrough"

    std::string lcm_mode = "exact";        // "exact" | "boundary_approx"
    std::string codec = "identity";        // "identity" | "affine"
    int queue_capacity = 8;

    // Condition means. Empty condition => derived deterministically from
    // the seed. negative_condition is mandatory for cfg/onetime_negative.
    std::vector<double> condition;
    std::vector<double> negative_condition;
};

/// Returns the complete list of invariant violations; empty means valid.
std::vector<std::string> validate_config(const EngineConfig& cfg);

/// Returns cfg unchanged if valid, otherwise throws std::invalid_argument
/// with all violations joined into one message.
EngineConfig validated(const EngineConfig& cfg);

inline bool all_finite(const Latent& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void require_same_dim(const Latent& a, const Latent& b, const char* where);

}  // namespace stagger
