#include "stagger/precompute.hpp"

#include "stagger/rng.hpp"

namespace stagger {

PrecomputeCache build_precompute(const EngineConfig& cfg,
                                 const std::vector<Condition>& conditions) {
    PrecomputeCache cache;
    cache.schedule = build_schedule(cfg.n_steps, cfg.t_grid, cfg.entry_strength);
    cache.lcm.mode = cfg.lcm_mode == "boundary_approx" ? LcmParams::Mode::boundary_approx
                                                       : LcmParams::Mode::exact;

    Rng rng(derive_seed(cfg.seed, kStreamNoiseCache));
    cache.eps_cached.reserve(static_cast<size_t>(cfg.n_steps));
    for (int i = 0; i < cfg.n_steps; ++i)
        cache.eps_cached.push_back(sample_gaussian(rng, static_cast<size_t>(cfg.d_latent)));

    for (const auto& c : conditions) cache.cond_embeddings[c.id] = c.embedding;
    return cache;
}

void update_condition(PrecomputeCache& cache, const Condition& cond) {
    cache.cond_embeddings[cond.id] = cond.embedding;
}

}  // namespace stagger
