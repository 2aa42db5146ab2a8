#include "stagger/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stagger/engine.hpp"

namespace stagger {

Mat cross_frame_attention(const Mat& q, const AttentionBatch& batch) {
    if (batch.provenance.empty() || batch.k.rows == 0)
        throw std::invalid_argument("cross_frame_attention: empty batch");
    if (q.cols != batch.k.cols || batch.k.cols != batch.v.cols ||
        batch.k.rows != batch.v.rows)
        throw std::invalid_argument("cross_frame_attention: dimension mismatch");

    const std::size_t n_keys = batch.k.rows;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols));

    Mat out(q.rows, q.cols);
    std::vector<double> scores(n_keys);
    for (std::size_t r = 0; r < q.rows; ++r) {
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n_keys; ++k) {
            double dot = 0.0;
            for (std::size_t c = 0; c < q.cols; ++c) dot += q.at(r, c) * batch.k.at(k, c);
            scores[k] = dot * inv_sqrt_d;
            max_score = std::max(max_score, scores[k]);
        }
        double denom = 0.0;
        for (std::size_t k = 0; k < n_keys; ++k) {
            scores[k] = std::exp(scores[k] - max_score);
            denom += scores[k];
        }
        for (std::size_t k = 0; k < n_keys; ++k) {
            const double w = scores[k] / denom;
            for (std::size_t c = 0; c < q.cols; ++c) out.at(r, c) += w * batch.v.at(k, c);
        }
    }
    return out;
}

Mat lift_tokens(const Latent& v, std::size_t tokens, std::size_t d_attn) {
    if (v.empty()) throw std::invalid_argument("lift_tokens: empty latent");
    Mat m(tokens, d_attn);
    for (std::size_t p = 0; p < tokens * d_attn; ++p) m.a[p] = v[p % v.size()];
    return m;
}

Latent unlift_tokens(const Mat& m, std::size_t d_latent) {
    if (d_latent == 0) throw std::invalid_argument("unlift_tokens: d_latent must be >= 1");
    Latent sum(d_latent, 0.0);
    std::vector<std::size_t> count(d_latent, 0);
    for (std::size_t p = 0; p < m.a.size(); ++p) {
        sum[p % d_latent] += m.a[p];
        count[p % d_latent] += 1;
    }
    for (std::size_t i = 0; i < d_latent; ++i) {
        if (count[i] == 0)
            throw std::invalid_argument("unlift_tokens: matrix too small for d_latent");
        sum[i] /= static_cast<double>(count[i]);
    }
    return sum;
}

AttentionBatch build_attention_batch(const std::vector<InFlightFrame>& inflight,
                                     std::size_t tokens, std::size_t d_attn) {
    if (inflight.empty())
        throw std::invalid_argument("build_attention_batch: empty in-flight set");

    std::vector<const InFlightFrame*> ordered;
    ordered.reserve(inflight.size());
    for (const auto& f : inflight) ordered.push_back(&f);
    std::sort(ordered.begin(), ordered.end(),
              [](const InFlightFrame* a, const InFlightFrame* b) {
                  return a->step_idx < b->step_idx;
              });

    AttentionBatch batch;
    batch.k = Mat(ordered.size() * tokens, d_attn);
    batch.v = Mat(ordered.size() * tokens, d_attn);
    batch.provenance.reserve(ordered.size());
    for (std::size_t b = 0; b < ordered.size(); ++b) {
        const InFlightFrame& f = *ordered[b];
        const Mat kb = lift_tokens(f.current, tokens, d_attn);
        const Latent& vsrc = f.eps_pred.empty() ? f.current : f.eps_pred;
        const Mat vb = lift_tokens(vsrc, tokens, d_attn);
        std::copy(kb.a.begin(), kb.a.end(), batch.k.a.begin() + b * tokens * d_attn);
        std::copy(vb.a.begin(), vb.a.end(), batch.v.a.begin() + b * tokens * d_attn);
        batch.provenance.emplace_back(f.seq_id, f.step_idx);
    }
    return batch;
}

}  // namespace stagger
