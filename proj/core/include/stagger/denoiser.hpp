#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "stagger/core.hpp"
#include "stagger/schedule.hpp"

namespace stagger {

struct CallCounters {
    std::uint64_t calls = 0;
    std::uint64_t element_evals = 0;
};

/// A pluggable eps-prediction backend. One batched invocation counts as
/// exactly one call and batch-size element evaluations, so call accounting
/// stays exact regardless of how callers batch their work.
class DenoiserBackend {
  public:
    virtual ~DenoiserBackend() = default;

    std::vector<Latent> predict_eps_batch(std::span<const Latent> latents,
                                          std::span<const ScheduleStep> steps,
                                          std::span<const Condition> conds);

    const CallCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

  protected:
    virtual std::vector<Latent> do_predict(std::span<const Latent> latents,
                                           std::span<const ScheduleStep> steps,
                                           std::span<const Condition> conds) = 0;

  private:
    CallCounters counters_;
};

/// Closed-form denoiser for Gaussian data x0 ~ N(mu_c, sigma2_x I): under
/// the variance-preserving forward process the marginal at a step is
/// N(sqrt(alpha)*mu_c, (alpha*sigma2_x + beta) I) and the exact posterior
/// noise estimate is
///   eps_hat = sqrt(beta) * (x - sqrt(alpha)*mu_c) / (alpha*sigma2_x + beta),
/// which equals -sqrt(beta) * grad log p(x | c).
class AnalyticGaussianModel : public DenoiserBackend {
  public:
    explicit AnalyticGaussianModel(double data_variance);

    double data_variance() const { return data_variance_; }

  protected:
    std::vector<Latent> do_predict(std::span<const Latent> latents,
                                   std::span<const ScheduleStep> steps,
                                   std::span<const Condition> conds) override;

  private:
    double data_variance_;
};

/// Timing probe: burns a configurable cost per call plus per element on a
/// monotonic-clock busy-wait and returns zeros or the inputs unchanged.
class SyntheticCostModel : public DenoiserBackend {
  public:
    enum class OutputMode { zeros, passthrough };

    SyntheticCostModel(double cost_per_call_us, double cost_per_element_us,
                       OutputMode mode = OutputMode::zeros);

    double cost_per_call_us() const { return cost_per_call_us_; }
    double cost_per_element_us() const { return cost_per_element_us_; }

  protected:
    std::vector<Latent> do_predict(std::span<const Latent> latents,
                                   std::span<const ScheduleStep> steps,
                                   std::span<const Condition> conds) override;

  private:
    double cost_per_call_us_;
    double cost_per_element_us_;
    OutputMode mode_;
};

/// Builds the backend selected by cfg.backend ("analytic" | "synthetic").
std::shared_ptr<DenoiserBackend> make_backend(const EngineConfig& cfg);

}  // namespace stagger
