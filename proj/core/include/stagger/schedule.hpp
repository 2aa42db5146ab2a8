#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "stagger/core.hpp"

namespace stagger {

/// One denoising step on the T-grid. alpha is the cumulative signal
/// fraction at tau, beta = 1 - alpha the noise fraction; the pair is
/// variance preserving by construction.
struct ScheduleStep {
    int tau = 0;
    double alpha = 1.0;
    double beta = 0.0;

    bool is_terminal() const { return beta == 0.0; }

    /// Noiseless end of the trajectory (tau = 0, alpha = 1, beta = 0).
    static ScheduleStep terminal() { return ScheduleStep{0, 1.0, 0.0}; }
};

/// The n selected steps, ordered from the entry point tau_0 (noisiest)
/// down the denoising trajectory toward tau = 0.
struct NoiseSchedule {
    std::vector<ScheduleStep> steps;
    int t_grid = 0;

    int n() const { return static_cast<int>(steps.size()); }
};

/// Consistency-model output parameterization.
struct LcmParams {
    enum class Mode { exact, boundary_approx };
    double sigma_data = 0.5;
    double s = 10.0;  // timestep scaling
    Mode mode = Mode::exact;
};

/// Builds the n-step schedule. The per-grid-step noise rate ramps linearly
/// from 1e-4 to 2e-2 over t_grid steps and alpha is the running product of
/// (1 - rate). The entry index is tau_0 = round(entry_strength*(t_grid-1))
/// and the n taus are evenly spaced with stride (tau_0+1)/n, rounding ties
/// toward larger tau, so the last step lands near 0.
NoiseSchedule build_schedule(int n, int t_grid, double entry_strength);

/// x_tau = sqrt(alpha)*x0 + sqrt(beta)*eps, elementwise.
Latent forward_diffuse(const Latent& x0, const ScheduleStep& step, const Latent& eps);

/// x0_hat = (x_tau - sqrt(beta)*eps_pred) / sqrt(alpha). Throws on alpha = 0.
Latent predict_x0(const Latent& x_tau, const ScheduleStep& step, const Latent& eps_pred);

/// (c_skip, c_out) at the step's tau. exact mode evaluates
/// c_skip = sigma^2/((s*tau)^2 + sigma^2), c_out = sigma*s*tau/sqrt(sigma^2 + (s*tau)^2);
/// boundary_approx returns (1,0) at tau = 0 and (0,1) elsewhere.
std::pair<double, double> lcm_coefficients(const ScheduleStep& step, const LcmParams& p);

/// One consistency-sampling transition: form x0_hat = c_skip*x + c_out*predict_x0,
/// then either return it (terminal step_next) or re-noise it to step_next
/// with the cached noise.
Latent consistency_step(const Latent& x_tau, const ScheduleStep& step_i,
                        const ScheduleStep& step_next, const Latent& eps_pred,
                        const Latent& eps_cached, const LcmParams& p);

/// CSV dump with columns (i, tau, alpha, beta).
void dump_schedule_csv(const NoiseSchedule& schedule, std::ostream& os);

}  // namespace stagger
