#include "stagger/rng.hpp"

#include <stdexcept>

namespace stagger {

Latent sample_gaussian(Rng& rng, std::size_t d) {
    if (d == 0) throw std::invalid_argument("sample_gaussian: d must be >= 1");
    Latent out(d);
    for (auto& x : out) x = rng.gaussian();
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_tag) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream_tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace stagger
