#include "stagger/guidance.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace stagger {

GuidanceConfig guidance_from_config(const EngineConfig& cfg) {
    GuidanceConfig g;
    g.mode = cfg.guidance_mode;
    g.gamma = cfg.gamma;
    g.delta = cfg.delta;
    if (!cfg.negative_condition.empty())
        g.negative = Condition{"negative", cfg.negative_condition};
    return g;
}

Latent cfg_combine(const Latent& eps_neg, const Latent& eps_cond, double gamma) {
    require_same_dim(eps_neg, eps_cond, "cfg_combine");
    Latent out(eps_neg.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = eps_neg[i] + gamma * (eps_cond[i] - eps_neg[i]);
    return out;
}

Latent virtual_residual_noise(const Latent& x_tau, const ScheduleStep& step,
                              const Latent& x0_ref) {
    require_same_dim(x_tau, x0_ref, "virtual_residual_noise");
    if (step.beta <= 0.0)
        throw std::invalid_argument("virtual_residual_noise: singular step (beta = 0)");
    const double sa = std::sqrt(step.alpha);
    const double sb = std::sqrt(step.beta);
    Latent out(x_tau.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = (x_tau[i] - sa * x0_ref[i]) / sb;
    return out;
}

Latent rcfg_combine(const Latent& eps_virtual, const Latent& eps_cond, double gamma,
                    double delta) {
    require_same_dim(eps_virtual, eps_cond, "rcfg_combine");
    Latent out(eps_virtual.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double dv = delta * eps_virtual[i];
        out[i] = dv + gamma * (eps_cond[i] - dv);
    }
    return out;
}

GuidanceState init_onetime_negative(const Latent& x_tau0, const ScheduleStep& step0,
                                    DenoiserBackend& backend, const Condition& neg) {
    if (step0.alpha <= 0.0)
        throw std::invalid_argument("init_onetime_negative: singular step (alpha = 0)");
    const std::array<Latent, 1> xs{x_tau0};
    const std::array<ScheduleStep, 1> ss{step0};
    const std::array<Condition, 1> cs{neg};
    const auto eps = backend.predict_eps_batch(xs, ss, cs);
    GuidanceState st;
    st.x0_ref = predict_x0(x_tau0, step0, eps[0]);
    st.initialized = true;
    return st;
}

Latent guided_eps(const Latent& current, const Latent& x0, GuidanceState& gstate,
                  const ScheduleStep& step, DenoiserBackend& backend,
                  const Condition& cond, const GuidanceConfig& g) {
    switch (g.mode) {
        case GuidanceMode::none: {
            const std::array<Latent, 1> xs{current};
            const std::array<ScheduleStep, 1> ss{step};
            const std::array<Condition, 1> cs{cond};
            return backend.predict_eps_batch(xs, ss, cs)[0];
        }
        case GuidanceMode::cfg: {
            if (!g.negative)
                throw std::invalid_argument("guided_eps: cfg mode requires negative_cond");
            // Conditional + negative rows share one doubled denoiser call.
            const std::array<Latent, 2> xs{current, current};
            const std::array<ScheduleStep, 2> ss{step, step};
            const std::array<Condition, 2> cs{cond, *g.negative};
            const auto eps = backend.predict_eps_batch(xs, ss, cs);
            return cfg_combine(eps[1], eps[0], g.gamma);
        }
        case GuidanceMode::self_negative:
        case GuidanceMode::onetime_negative: {
            const Latent* x0_ref = &x0;
            if (g.mode == GuidanceMode::onetime_negative) {
                if (!gstate.initialized)
                    throw std::logic_error(
                        "guided_eps: onetime_negative requires an initialized GuidanceState");
                x0_ref = &gstate.x0_ref;
            }
            const std::array<Latent, 1> xs{current};
            const std::array<ScheduleStep, 1> ss{step};
            const std::array<Condition, 1> cs{cond};
            const Latent eps_cond = backend.predict_eps_batch(xs, ss, cs)[0];
            if (step.beta <= 0.0) return eps_cond;  // noiseless step, guidance undefined
            const Latent eps_virtual = virtual_residual_noise(current, step, *x0_ref);
            return rcfg_combine(eps_virtual, eps_cond, g.gamma, g.delta);
        }
    }
    throw std::logic_error("unreachable guidance mode");
}

}  // namespace stagger
