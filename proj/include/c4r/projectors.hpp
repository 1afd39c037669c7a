#pragma once

#include "c4r/nn.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

// Partially Cross Attention projector: 3x3 convolutions (stride 1, padding 1)
// turn the student's tap feature map into Q/K/V token matrices, then
// softmax(Q K^T / sqrt(d)) V yields an attention output comparable to the
// teacher's. Removed at export.
class PCAProjector {
public:
    PCAProjector(std::size_t tap_channels, std::size_t query_dim, std::size_t value_dim,
                 std::size_t token_side, std::uint64_t seed)
        : query_dim_(query_dim), token_side_(token_side),
          conv_q_("pca.q", tap_channels, query_dim, 1),
          conv_k_("pca.k", tap_channels, query_dim, 1),
          conv_v_("pca.v", tap_channels, value_dim, 1) {
        Rng rng(mix_seed(seed, 0xacaULL));
        conv_q_.init(rng);
        conv_k_.init(rng);
        conv_v_.init(rng);
    }

    std::size_t token_count() const { return token_side_ * token_side_; }

    // tap (C x H' x W'); if the spatial grid differs from the teacher token
    // grid a bilinear resize is applied first.
    Tensor forward(const Tensor& tap) {
        require(tap.ndim() == 3, ErrorKind::Data, "pca_project: expected a C x H x W map");
        tap_shape_ = tap.shape;
        resized_ = tap.shape[1] != token_side_ || tap.shape[2] != token_side_;
        const Tensor& in = resized_
            ? (resized_tap_ = nn::bilinear_resize(tap, token_side_, token_side_), resized_tap_)
            : tap;
        q_ = to_tokens(conv_q_.forward(in));
        k_ = to_tokens(conv_k_.forward(in));
        v_ = to_tokens(conv_v_.forward(in));
        attn_ = nn::attention_forward(q_, k_, v_, 1.0 / std::sqrt(static_cast<double>(query_dim_)));
        return attn_.out;
    }

    // returns dL/d(tap features)
    Tensor backward(const Tensor& d_out) {
        nn::AttentionGrads g = nn::attention_backward(
            d_out, q_, k_, v_, attn_.probs, 1.0 / std::sqrt(static_cast<double>(query_dim_)));
        Tensor din = conv_q_.backward(to_map(g.dq, conv_q_.out_channels()));
        Tensor din_k = conv_k_.backward(to_map(g.dk, conv_k_.out_channels()));
        Tensor din_v = conv_v_.backward(to_map(g.dv, conv_v_.out_channels()));
        for (std::size_t i = 0; i < din.numel(); ++i)
            din.data[i] += din_k.data[i] + din_v.data[i];
        if (resized_) return nn::bilinear_resize_backward(tap_shape_, din);
        return din;
    }

    nn::ParamRefs params() {
        nn::ParamRefs out;
        for (auto* c : {&conv_q_, &conv_k_, &conv_v_}) {
            auto ps = c->params();
            out.insert(out.end(), ps.begin(), ps.end());
        }
        return out;
    }

private:
    // (C x S x S) map -> (S*S x C) token matrix, spatial positions row-major
    Tensor to_tokens(const Tensor& m) const {
        const std::size_t C = m.shape[0], S = m.shape[1];
        Tensor t({S * S, C});
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < S; ++y)
                for (std::size_t x = 0; x < S; ++x)
                    t.at(y * S + x, c) = m.at(c, y, x);
        return t;
    }

    Tensor to_map(const Tensor& t, std::size_t C) const {
        const std::size_t S = token_side_;
        Tensor m({C, S, S});
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < S; ++y)
                for (std::size_t x = 0; x < S; ++x)
                    m.at(c, y, x) = t.at(y * S + x, c);
        return m;
    }

    std::size_t query_dim_, token_side_;
    nn::Conv2D conv_q_, conv_k_, conv_v_;
    std::vector<std::size_t> tap_shape_;
    bool resized_ = false;
    Tensor resized_tap_;
    Tensor q_, k_, v_;
    nn::AttentionActs attn_;
};

// Group-wise Linear projector: block-diagonal map from the pooled student
// channel vector into the teacher embedding space. Removed at export.
class GLProjector {
public:
    GLProjector(std::size_t in_channels, std::size_t embed_dim, std::size_t groups,
                std::uint64_t seed)
        : fc_("gl", in_channels, embed_dim, groups) {
        Rng rng(mix_seed(seed, 0x91ULL));
        fc_.init(rng);
    }

    Vec forward(const Vec& pooled) { return fc_.forward(pooled); }
    Vec backward(const Vec& d_out) { return fc_.backward(d_out); }

    std::size_t groups() const { return fc_.groups(); }
    nn::ParamRefs params() { return fc_.params(); }

private:
    nn::GroupLinear fc_;
};

} // namespace c4r
