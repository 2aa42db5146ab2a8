#pragma once

#include <cstdint>
#include <random>

#include "stagger/core.hpp"

namespace stagger {

/// Deterministic random source with a stable, documented sample order.
///
/// The 64-bit engine is std::mt19937_64, whose output sequence is fixed by
/// the standard, so identical seeds give identical streams on every
/// platform. Gaussians come from Box-Muller: each pair of uniforms
/// (u1, u2) yields z1 = r*cos(2*pi*u2) and z2 = r*sin(2*pi*u2) with
/// r = sqrt(-2*ln(1-u1)); z1 is returned first and z2 is cached for the
/// next call. The sample order is part of the cross-run contract: callers
/// that need independent streams derive sub-seeds instead of sharing one Rng.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal sample (Box-Muller, see class comment).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// d i.i.d. standard normal samples; throws std::invalid_argument on d == 0.
Latent sample_gaussian(Rng& rng, std::size_t d);

/// Derives an independent sub-seed for a named stream (splitmix64 over
/// seed ^ tag). Used to give each pipeline stage its own single-owner Rng.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_tag);

// Stream tags used across the pipeline.
inline constexpr std::uint64_t kStreamNoiseCache = 1;
inline constexpr std::uint64_t kStreamSsf = 2;
inline constexpr std::uint64_t kStreamSource = 3;
inline constexpr std::uint64_t kStreamCondition = 4;

}  // namespace stagger
