#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stagger/core.hpp"

namespace stagger {

/// Minimal row-major matrix, just enough for the attention math.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

/// Keys/values for every in-flight frame, one L-row block per frame,
/// blocks ordered by ascending step index (most recently ingested first).
/// provenance records each block's (seq_id, step_idx).
struct AttentionBatch {
    Mat k;  // (n_blocks * tokens) x d_attn
    Mat v;
    std::vector<std::pair<std::int64_t, int>> provenance;

    std::size_t blocks() const { return provenance.size(); }
};

/// Softmax(Q K^T / sqrt(d_attn)) V with row-wise softmax. Throws on
/// dimension mismatch or an empty batch.
Mat cross_frame_attention(const Mat& q, const AttentionBatch& batch);

/// Deterministic token lift: cyclically tiles a latent into a tokens x d_attn
/// matrix (no learned weights).
Mat lift_tokens(const Latent& v, std::size_t tokens, std::size_t d_attn);

/// Inverse of lift_tokens for lifted inputs: averages all tiled copies of
/// each latent coordinate.
Latent unlift_tokens(const Mat& m, std::size_t d_latent);

struct InFlightFrame;  // engine.hpp

/// Builds the cross-frame K/V batch from the in-flight set. K rows are
/// lifted from each frame's current latent, V rows from its latest noise
/// prediction, so attending over the batch mixes predictions across frames.
AttentionBatch build_attention_batch(const std::vector<InFlightFrame>& inflight,
                                     std::size_t tokens, std::size_t d_attn);

}  // namespace stagger
