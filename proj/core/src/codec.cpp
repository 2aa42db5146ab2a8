#include "stagger/codec.hpp"

#include <cmath>
#include <stdexcept>

#include "stagger/rng.hpp"

namespace stagger {

namespace {

// Gauss-Jordan inverse with partial pivoting; throws on singular input.
Mat invert(const Mat& m) {
    if (m.rows != m.cols) throw std::invalid_argument("invert: matrix must be square");
    const std::size_t n = m.rows;
    Mat work = m;
    Mat inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(work.at(r, col)) > std::abs(work.at(pivot, col))) pivot = r;
        }
        if (std::abs(work.at(pivot, col)) < 1e-12)
            throw std::invalid_argument("invert: singular matrix");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(work.at(pivot, c), work.at(col, c));
                std::swap(inv.at(pivot, c), inv.at(col, c));
            }
        }
        const double d = work.at(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            work.at(col, c) /= d;
            inv.at(col, c) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = work.at(r, col);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                work.at(r, c) -= f * work.at(col, c);
                inv.at(r, c) -= f * inv.at(col, c);
            }
        }
    }
    return inv;
}

Latent matvec(const Mat& m, const Latent& x) {
    Latent y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += m.at(r, c) * x[c];
        y[r] = acc;
    }
    return y;
}

}  // namespace

LatentCodec LatentCodec::identity(std::size_t dim) {
    LatentCodec codec;
    codec.identity_ = true;
    codec.dim_ = dim;
    return codec;
}

LatentCodec LatentCodec::affine(Mat a, Latent b) {
    if (a.rows != a.cols || a.rows != b.size())
        throw std::invalid_argument("LatentCodec::affine: shape mismatch");
    LatentCodec codec;
    codec.identity_ = false;
    codec.dim_ = a.rows;
    codec.a_inv_ = invert(a);
    codec.a_ = std::move(a);
    codec.b_ = std::move(b);
    return codec;
}

Latent LatentCodec::encode(const Latent& x) const {
    if (x.size() != dim_) throw std::invalid_argument("LatentCodec::encode: dim mismatch");
    if (identity_) return x;
    Latent y = matvec(a_, x);
    for (std::size_t i = 0; i < dim_; ++i) y[i] += b_[i];
    return y;
}

Latent LatentCodec::decode(const Latent& y) const {
    if (y.size() != dim_) throw std::invalid_argument("LatentCodec::decode: dim mismatch");
    if (identity_) return y;
    Latent shifted(dim_);
    for (std::size_t i = 0; i < dim_; ++i) shifted[i] = y[i] - b_[i];
    return matvec(a_inv_, shifted);
}

LatentCodec make_codec(const EngineConfig& cfg) {
    const auto d = static_cast<std::size_t>(cfg.d_latent);
    if (cfg.codec == "identity") return LatentCodec::identity(d);

    // Diagonally dominant random matrix: invertible and well conditioned.
    Rng rng(derive_seed(cfg.seed, kStreamCondition + 100));
    Mat a(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) a.at(r, c) = 0.1 * rng.gaussian();
        a.at(r, r) += 1.0 + static_cast<double>(d) * 0.1;
    }
    Latent b = sample_gaussian(rng, d);
    return LatentCodec::affine(std::move(a), std::move(b));
}

}  // namespace stagger
