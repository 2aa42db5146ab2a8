#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stagger/core.hpp"
#include "stagger/rng.hpp"

namespace stagger {

/// Pull-based frame producer: returns frames until the stream ends.
using FrameSource = std::function<std::optional<Frame>()>;
using FrameSink = std::function<void(const Frame&)>;

/// Deterministic synthetic stream generators.
///
/// static_scene  - one fixed payload repeated forever.
/// dynamic_walk  - random walk on the sphere of radius sqrt(d); the
///                 noise_scale sets how far consecutive frames move, so
///                 small scales hover near similarity 1 and scale 1.0
///                 stays far below any useful threshold.
/// periodic_static - alternates dynamic and exactly-repeated phases;
///                 static_fraction of each period repeats the previous
///                 frame verbatim.
struct StreamGenerator {
    enum class Kind { static_scene, dynamic_walk, periodic_static };

    StreamGenerator(Kind kind, int d, std::uint64_t seed, double noise_scale = 1.0,
                    int period = 20, double static_fraction = 0.5);

    Frame next();

    Kind kind() const { return kind_; }

    /// Adapts the generator to a bounded FrameSource.
    static FrameSource as_source(StreamGenerator gen, std::int64_t frames);

  private:
    Kind kind_;
    int d_;
    Rng rng_;
    double noise_scale_;
    int period_;
    int dynamic_len_;
    std::int64_t seq_ = 0;
    Latent state_;

    void randomize_state();
    void walk_state();
};

StreamGenerator::Kind stream_kind_from_string(const std::string& s);

/// Loads frames from a JSON file holding an array of payload arrays.
std::vector<Frame> load_frames_json(const std::string& path);

FrameSource vector_source(std::vector<Frame> frames);

}  // namespace stagger
