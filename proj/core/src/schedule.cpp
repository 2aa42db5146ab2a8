#include "stagger/schedule.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace stagger {

namespace {

constexpr double kRateStart = 1e-4;
constexpr double kRateEnd = 2e-2;

// Cumulative signal fraction at every grid index.
std::vector<double> alpha_bar_table(int t_grid) {
    std::vector<double> table(static_cast<size_t>(t_grid));
    double prod = 1.0;
    for (int t = 0; t < t_grid; ++t) {
        const double frac = t_grid > 1 ? static_cast<double>(t) / (t_grid - 1) : 0.0;
        const double rate = kRateStart + (kRateEnd - kRateStart) * frac;
        prod *= 1.0 - rate;
        table[static_cast<size_t>(t)] = prod;
    }
    return table;
}

}  // namespace

NoiseSchedule build_schedule(int n, int t_grid, double entry_strength) {
    if (n < 1) throw std::invalid_argument("build_schedule: n must be >= 1");
    if (t_grid < 1) throw std::invalid_argument("build_schedule: t_grid must be >= 1");
    if (n > t_grid) throw std::invalid_argument("build_schedule: n exceeds t_grid");
    if (!(entry_strength > 0.0 && entry_strength <= 1.0))
        throw std::invalid_argument("build_schedule: entry_strength must lie in (0,1]");

    const long tau0 = std::lround(entry_strength * (t_grid - 1));
    if (n > tau0 + 1)
        throw std::invalid_argument(
            "build_schedule: n exceeds the usable range below the entry index");

    const auto table = alpha_bar_table(t_grid);
    const double stride = static_cast<double>(tau0 + 1) / n;

    NoiseSchedule sched;
    sched.t_grid = t_grid;
    sched.steps.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        // llround ties go away from zero, i.e. toward larger tau.
        const long tau = std::llround(static_cast<double>(tau0) - stride * i);
        const double alpha = table[static_cast<size_t>(tau)];
        sched.steps.push_back(ScheduleStep{static_cast<int>(tau), alpha, 1.0 - alpha});
    }
    for (size_t i = 1; i < sched.steps.size(); ++i) {
        if (sched.steps[i].tau >= sched.steps[i - 1].tau)
            throw std::logic_error("build_schedule: taus must strictly decrease");
    }
    return sched;
}

Latent forward_diffuse(const Latent& x0, const ScheduleStep& step, const Latent& eps) {
    require_same_dim(x0, eps, "forward_diffuse");
    const double sa = std::sqrt(step.alpha);
    const double sb = std::sqrt(step.beta);
    Latent out(x0.size());
    for (size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + sb * eps[i];
    return out;
}

Latent predict_x0(const Latent& x_tau, const ScheduleStep& step, const Latent& eps_pred) {
    require_same_dim(x_tau, eps_pred, "predict_x0");
    if (step.alpha <= 0.0)
        throw std::invalid_argument("predict_x0: singular step (alpha = 0)");
    const double sa = std::sqrt(step.alpha);
    const double sb = std::sqrt(step.beta);
    Latent out(x_tau.size());
    for (size_t i = 0; i < x_tau.size(); ++i) out[i] = (x_tau[i] - sb * eps_pred[i]) / sa;
    return out;
}

std::pair<double, double> lcm_coefficients(const ScheduleStep& step, const LcmParams& p) {
    if (p.mode == LcmParams::Mode::boundary_approx) {
        return step.tau == 0 ? std::pair{1.0, 0.0} : std::pair{0.0, 1.0};
    }
    const double st = p.s * step.tau;
    const double sig2 = p.sigma_data * p.sigma_data;
    const double c_skip = sig2 / (st * st + sig2);
    const double c_out = p.sigma_data * st / std::sqrt(sig2 + st * st);
    return {c_skip, c_out};
}

Latent consistency_step(const Latent& x_tau, const ScheduleStep& step_i,
                        const ScheduleStep& step_next, const Latent& eps_pred,
                        const Latent& eps_cached, const LcmParams& p) {
    require_same_dim(x_tau, eps_pred, "consistency_step");
    if (!step_next.is_terminal() && step_next.tau >= step_i.tau)
        throw std::invalid_argument(
            "consistency_step: step_next must be strictly later in the denoising direction");

    const auto [c_skip, c_out] = lcm_coefficients(step_i, p);
    const Latent x0_pred = predict_x0(x_tau, step_i, eps_pred);
    Latent x0_hat(x_tau.size());
    for (size_t i = 0; i < x_tau.size(); ++i)
        x0_hat[i] = c_skip * x_tau[i] + c_out * x0_pred[i];

    if (step_next.is_terminal()) return x0_hat;
    return forward_diffuse(x0_hat, step_next, eps_cached);
}

void dump_schedule_csv(const NoiseSchedule& schedule, std::ostream& os) {
    os << "i,tau,alpha,beta\n";
    os.precision(17);
    for (size_t i = 0; i < schedule.steps.size(); ++i) {
        const auto& s = schedule.steps[i];
        os << i << ',' << s.tau << ',' << s.alpha << ',' << s.beta << '\n';
    }
}

}  // namespace stagger
