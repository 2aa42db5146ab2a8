#include "stagger/ssf.hpp"

#include <cmath>
#include <stdexcept>

namespace stagger {

double cosine_similarity(const Latent& a, const Latent& b) {
    require_same_dim(a, b, "cosine_similarity");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return dot / (na * nb);
}

double cosine_similarity(const Frame& a, const Frame& b) {
    return cosine_similarity(a.payload, b.payload);
}

double skip_probability(double sim, double eta) {
    if (!(eta >= 0.0 && eta < 1.0))
        throw std::invalid_argument("skip_probability: eta must lie in [0,1)");
    const double p = (sim - eta) / (1.0 - eta);
    if (p <= 0.0) return 0.0;
    return p >= 1.0 ? 1.0 : p;
}

SsfState::SsfState(double eta, Rng rng) : eta_(eta), rng_(rng) {
    if (!(eta >= 0.0 && eta < 1.0))
        throw std::invalid_argument("SsfState: eta must lie in [0,1)");
}

GateDecision SsfState::gate(const Frame& frame) {
    examined_ += 1;
    if (!ref_) {  // first frame: nothing to compare against
        ref_ = frame;
        return GateDecision::process;
    }
    const double sim = cosine_similarity(frame, *ref_);
    const double p = skip_probability(sim, eta_);
    const double u = rng_.uniform();
    if (u < p) {
        skipped_ += 1;
        return GateDecision::skip;
    }
    ref_ = frame;
    return GateDecision::process;
}

HardThresholdFilter::HardThresholdFilter(double eta) : eta_(eta) {
    if (!(eta >= 0.0 && eta < 1.0))
        throw std::invalid_argument("HardThresholdFilter: eta must lie in [0,1)");
}

GateDecision HardThresholdFilter::gate(const Frame& frame) {
    examined_ += 1;
    if (!ref_) {
        ref_ = frame;
        return GateDecision::process;
    }
    if (cosine_similarity(frame, *ref_) > eta_) {
        skipped_ += 1;
        return GateDecision::skip;
    }
    ref_ = frame;
    return GateDecision::process;
}

}  // namespace stagger
