#pragma once

#include <optional>

#include "stagger/core.hpp"
#include "stagger/denoiser.hpp"
#include "stagger/schedule.hpp"

namespace stagger {

struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::none;
    double gamma = 1.4;
    double delta = 1.0;
    std::optional<Condition> negative;  // required for cfg / onetime_negative
};

GuidanceConfig guidance_from_config(const EngineConfig& cfg);

/// Per-frame guidance state. x0_ref is the reference point the virtual
/// residual noise aims at: the input latent itself (self-negative) or the
/// negatively-conditioned x0 estimate computed once at the entry step
/// (onetime-negative).
struct GuidanceState {
    Latent x0_ref;
    bool initialized = false;
};

/// eps_neg + gamma * (eps_cond - eps_neg).
Latent cfg_combine(const Latent& eps_neg, const Latent& eps_cond, double gamma);

/// (x_tau - sqrt(alpha) * x0_ref) / sqrt(beta). Throws when beta = 0:
/// there is no virtual noise at a noiseless step.
Latent virtual_residual_noise(const Latent& x_tau, const ScheduleStep& step,
                              const Latent& x0_ref);

/// delta * eps_virtual + gamma * (eps_cond - delta * eps_virtual).
Latent rcfg_combine(const Latent& eps_virtual, const Latent& eps_cond, double gamma,
                    double delta);

/// Runs the one extra negatively-conditioned denoiser evaluation at the
/// entry step and stores the resulting reference point.
GuidanceState init_onetime_negative(const Latent& x_tau0, const ScheduleStep& step0,
                                    DenoiserBackend& backend, const Condition& neg);

/// One guided noise prediction for a frame at `step`. Element evaluations
/// per call: none/self_negative/onetime_negative 1, cfg 2 (conditional and
/// negative rows batched into a single denoiser call). onetime_negative
/// requires an initialized GuidanceState. At a noiseless step (beta = 0)
/// the residual modes fall back to the plain conditional prediction.
Latent guided_eps(const Latent& current, const Latent& x0, GuidanceState& gstate,
                  const ScheduleStep& step, DenoiserBackend& backend,
                  const Condition& cond, const GuidanceConfig& g);

}  // namespace stagger
