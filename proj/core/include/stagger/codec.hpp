#pragma once

#include "stagger/attention.hpp"
#include "stagger/core.hpp"

namespace stagger {

/// Frame <-> latent codec, the exactly-invertible stand-in for a learned
/// autoencoder. identity passes payloads through; affine applies
/// y = A x + b with invertible A (inverse computed up front).
class LatentCodec {
  public:
    static LatentCodec identity(std::size_t dim);
    static LatentCodec affine(Mat a, Latent b);

    Latent encode(const Latent& x) const;
    Latent decode(const Latent& y) const;

    std::size_t dim() const { return dim_; }
    bool is_identity() const { return identity_; }

  private:
    LatentCodec() = default;

    bool identity_ = true;
    std::size_t dim_ = 0;
    Mat a_;
    Mat a_inv_;
    Latent b_;
};

/// Builds the codec selected by cfg.codec. The affine variant uses a
/// deterministic well-conditioned matrix derived from the seed.
LatentCodec make_codec(const EngineConfig& cfg);

}  // namespace stagger
