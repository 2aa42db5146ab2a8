#pragma once

#include <map>
#include <string>
#include <vector>

#include "stagger/core.hpp"
#include "stagger/schedule.hpp"

namespace stagger {

/// Everything the engine needs that does not change per frame: the noise
/// schedule, one pre-sampled Gaussian noise vector per denoising step
/// (shared by every frame re-noised into that step), the condition
/// embeddings, and the consistency parameterization.
struct PrecomputeCache {
    NoiseSchedule schedule;
    std::vector<Latent> eps_cached;
    std::map<std::string, Latent> cond_embeddings;
    LcmParams lcm;
};

/// Builds the cache deterministically from cfg.seed. Re-run it whenever
/// n_steps or the schedule parameters change; eps_cached length always
/// equals n_steps.
PrecomputeCache build_precompute(const EngineConfig& cfg,
                                 const std::vector<Condition>& conditions);

/// Replaces a single condition embedding without touching the schedule or
/// the noise cache.
void update_condition(PrecomputeCache& cache, const Condition& cond);

}  // namespace stagger
