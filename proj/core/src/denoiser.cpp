#include "stagger/denoiser.hpp"

#include <chrono>
#include <stdexcept>

namespace stagger {

std::vector<Latent> DenoiserBackend::predict_eps_batch(std::span<const Latent> latents,
                                                       std::span<const ScheduleStep> steps,
                                                       std::span<const Condition> conds) {
    if (latents.empty()) throw std::invalid_argument("predict_eps_batch: empty batch");
    if (latents.size() != steps.size() || latents.size() != conds.size())
        throw std::invalid_argument("predict_eps_batch: argument length mismatch");
    auto out = do_predict(latents, steps, conds);
    counters_.calls += 1;
    counters_.element_evals += latents.size();
    return out;
}

AnalyticGaussianModel::AnalyticGaussianModel(double data_variance)
    : data_variance_(data_variance) {
    if (!(data_variance > 0.0))
        throw std::invalid_argument("AnalyticGaussianModel: data_variance must be > 0");
}

std::vector<Latent> AnalyticGaussianModel::do_predict(std::span<const Latent> latents,
                                                      std::span<const ScheduleStep> steps,
                                                      std::span<const Condition> conds) {
    std::vector<Latent> out(latents.size());
    for (size_t b = 0; b < latents.size(); ++b) {
        const Latent& x = latents[b];
        const Latent& mu = conds[b].embedding;
        require_same_dim(x, mu, "AnalyticGaussianModel");
        const double alpha = steps[b].alpha;
        const double beta = steps[b].beta;
        const double scale = std::sqrt(beta) / (alpha * data_variance_ + beta);
        const double sa = std::sqrt(alpha);
        Latent eps(x.size());
        for (size_t i = 0; i < x.size(); ++i) eps[i] = scale * (x[i] - sa * mu[i]);
        out[b] = std::move(eps);
    }
    return out;
}

SyntheticCostModel::SyntheticCostModel(double cost_per_call_us, double cost_per_element_us,
                                       OutputMode mode)
    : cost_per_call_us_(cost_per_call_us),
      cost_per_element_us_(cost_per_element_us),
      mode_(mode) {
    if (cost_per_call_us < 0.0 || cost_per_element_us < 0.0)
        throw std::invalid_argument("SyntheticCostModel: costs must be >= 0");
}

std::vector<Latent> SyntheticCostModel::do_predict(std::span<const Latent> latents,
                                                   std::span<const ScheduleStep>,
                                                   std::span<const Condition>) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const double total_us =
        cost_per_call_us_ + cost_per_element_us_ * static_cast<double>(latents.size());
    const auto deadline =
        start + std::chrono::duration_cast<clock::duration>(
                    std::chrono::duration<double, std::micro>(total_us));
    // Busy-wait, not sleep: sleep granularity would swamp ms-scale costs.
    while (clock::now() < deadline) {
    }

    std::vector<Latent> out(latents.size());
    for (size_t b = 0; b < latents.size(); ++b) {
        out[b] = mode_ == OutputMode::passthrough ? latents[b] : Latent(latents[b].size(), 0.0);
    }
    return out;
}

std::shared_ptr<DenoiserBackend> make_backend(const EngineConfig& cfg) {
    if (cfg.backend == "analytic")
        return std::make_shared<AnalyticGaussianModel>(cfg.data_variance);
    if (cfg.backend == "synthetic") {
        const auto mode = cfg.synthetic_output == "passthrough"
                              ? SyntheticCostModel::OutputMode::passthrough
                              : SyntheticCostModel::OutputMode::zeros;
        return std::make_shared<SyntheticCostModel>(cfg.cost_per_call_us,
                                                    cfg.cost_per_element_us, mode);
    }
    throw std::invalid_argument("make_backend: unknown backend " + cfg.backend);
}

}  // namespace stagger
