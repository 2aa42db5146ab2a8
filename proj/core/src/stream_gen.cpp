#include "stagger/stream_gen.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace stagger {

StreamGenerator::StreamGenerator(Kind kind, int d, std::uint64_t seed, double noise_scale,
                                 int period, double static_fraction)
    : kind_(kind),
      d_(d),
      rng_(derive_seed(seed, kStreamSource)),
      noise_scale_(noise_scale),
      period_(period) {
    if (d < 1) throw std::invalid_argument("StreamGenerator: d must be >= 1");
    if (period < 1) throw std::invalid_argument("StreamGenerator: period must be >= 1");
    if (!(static_fraction >= 0.0 && static_fraction <= 1.0))
        throw std::invalid_argument("StreamGenerator: static_fraction must lie in [0,1]");
    dynamic_len_ = period - static_cast<int>(std::lround(period * static_fraction));
    randomize_state();
}

void StreamGenerator::randomize_state() {
    state_ = sample_gaussian(rng_, static_cast<size_t>(d_));
    double norm = 0.0;
    for (double x : state_) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    const double target = std::sqrt(static_cast<double>(d_));
    for (double& x : state_) x *= target / norm;
}

void StreamGenerator::walk_state() {
    const Latent step = sample_gaussian(rng_, static_cast<size_t>(d_));
    double norm = 0.0;
    for (size_t i = 0; i < state_.size(); ++i) {
        state_[i] += noise_scale_ * step[i];
        norm += state_[i] * state_[i];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
        randomize_state();
        return;
    }
    const double target = std::sqrt(static_cast<double>(d_));
    for (double& x : state_) x *= target / norm;
}

Frame StreamGenerator::next() {
    switch (kind_) {
        case Kind::static_scene:
            break;  // state never changes after construction
        case Kind::dynamic_walk:
            if (seq_ > 0) walk_state();
            break;
        case Kind::periodic_static: {
            const int phase = static_cast<int>(seq_ % period_);
            if (seq_ > 0 && phase < dynamic_len_) walk_state();
            // static phase repeats the previous payload verbatim
            break;
        }
    }
    Frame f;
    f.seq_id = seq_++;
    f.payload = state_;
    return f;
}

FrameSource StreamGenerator::as_source(StreamGenerator gen, std::int64_t frames) {
    auto state = std::make_shared<StreamGenerator>(std::move(gen));
    auto remaining = std::make_shared<std::int64_t>(frames);
    return [state, remaining]() -> std::optional<Frame> {
        if (*remaining <= 0) return std::nullopt;
        --*remaining;
        return state->next();
    };
}

StreamGenerator::Kind stream_kind_from_string(const std::string& s) {
    if (s == "static") return StreamGenerator::Kind::static_scene;
    if (s == "dynamic") return StreamGenerator::Kind::dynamic_walk;
    if (s == "periodic") return StreamGenerator::Kind::periodic_static;
    throw std::invalid_argument("unknown stream kind: " + s);
}

std::vector<Frame> load_frames_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_frames_json: cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (!doc.is_array()) throw std::runtime_error("load_frames_json: expected a JSON array");
    std::vector<Frame> frames;
    frames.reserve(doc.size());
    std::int64_t seq = 0;
    for (const auto& row : doc) {
        if (!row.is_array())
            throw std::runtime_error("load_frames_json: each frame must be an array");
        Frame f;
        f.seq_id = seq++;
        f.payload = row.get<std::vector<double>>();
        frames.push_back(std::move(f));
    }
    return frames;
}

FrameSource vector_source(std::vector<Frame> frames) {
    auto data = std::make_shared<std::vector<Frame>>(std::move(frames));
    auto idx = std::make_shared<std::size_t>(0);
    return [data, idx]() -> std::optional<Frame> {
        if (*idx >= data->size()) return std::nullopt;
        return (*data)[(*idx)++];
    };
}

}  // namespace stagger
