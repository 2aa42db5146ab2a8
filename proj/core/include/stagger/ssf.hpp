#pragma once

#include <cstdint>
#include <optional>

#include "stagger/core.hpp"
#include "stagger/rng.hpp"

namespace stagger {

/// Cosine similarity of two frame payloads. Frames with a near-zero norm
/// (< 1e-12) are treated as maximally dissimilar and return 0 so the
/// stream fails open.
double cosine_similarity(const Frame& a, const Frame& b);
double cosine_similarity(const Latent& a, const Latent& b);

/// max{0, (sim - eta) / (1 - eta)}, clamped to [0,1]. Throws on eta >= 1.
double skip_probability(double sim, double eta);

enum class GateDecision { process, skip };

/// Probabilistic similarity gate: draws one uniform per examined frame
/// (after a reference exists) and skips with the Eq.-style probability.
/// The reference frame updates only on process decisions.
class SsfState {
  public:
    SsfState(double eta, Rng rng);

    GateDecision gate(const Frame& frame);

    double eta() const { return eta_; }
    std::uint64_t examined() const { return examined_; }
    std::uint64_t skipped() const { return skipped_; }
    const std::optional<Frame>& ref_frame() const { return ref_; }

  private:
    double eta_;
    Rng rng_;
    std::optional<Frame> ref_;
    std::uint64_t examined_ = 0;
    std::uint64_t skipped_ = 0;
};

/// Deterministic comparator for the bench: skip iff sim > eta. Prone to
/// getting stuck on static scenes, which is what the probabilistic gate
/// is measured against.
class HardThresholdFilter {
  public:
    explicit HardThresholdFilter(double eta);

    GateDecision gate(const Frame& frame);

    std::uint64_t examined() const { return examined_; }
    std::uint64_t skipped() const { return skipped_; }

  private:
    double eta_;
    std::optional<Frame> ref_;
    std::uint64_t examined_ = 0;
    std::uint64_t skipped_ = 0;
};

}  // namespace stagger
