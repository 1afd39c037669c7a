#pragma once

#include <vector>

#include "c4r/nn.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

enum class TokenPooling { Mean, FirstToken };

struct TeacherConfig {
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::size_t patch = 8;
    std::size_t depth = 2;
    std::size_t heads = 2;
    std::size_t model_dim = 32;  // token width
    std::size_t embed_dim = 768; // d_e
    TokenPooling pooling = TokenPooling::Mean;
    std::uint64_t seed = 1;

    std::size_t head_dim() const { return model_dim / heads; }  // d
    std::size_t value_dim() const { return model_dim / heads; } // d_v
    std::size_t tokens_per_side() const { return image_size / patch; }
    std::size_t token_count() const { return tokens_per_side() * tokens_per_side(); }

    void validate() const {
        require(image_size % patch == 0, ErrorKind::Data,
                "teacher: patch size must divide image size");
        require(model_dim % heads == 0, ErrorKind::Data,
                "teacher: head count must divide model dim");
        require(depth >= 1 && heads >= 1, ErrorKind::Data,
                "teacher: depth and heads must be positive");
    }
};

// Frozen toy vision transformer standing in for the CLIP image tower.
// Seeded random weights, deterministic forward. Exposes the final block's
// head-averaged attention output (N x d_v) alongside the pooled embedding.
class TeacherModel {
public:
    struct Output {
        Vec embedding;    // length d_e
        Tensor attention; // (N x d_v)
    };

    explicit TeacherModel(const TeacherConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(mix_seed(cfg_.seed, kTeacherTag));
        const std::size_t pd = cfg_.patch * cfg_.patch * cfg_.channels;
        const std::size_t dm = cfg_.model_dim;
        // weight scales chosen to keep tokens and attention outputs O(1)
        patch_w_ = random_mat(rng, dm, pd, 0.5 / std::sqrt(static_cast<double>(pd)));
        pos_ = random_mat(rng, cfg_.token_count(), dm, 0.3);
        blocks_.resize(cfg_.depth);
        for (auto& b : blocks_) {
            b.heads.resize(cfg_.heads);
            for (auto& h : b.heads) {
                double s = 1.0 / std::sqrt(static_cast<double>(dm));
                h.wq = random_mat(rng, cfg_.head_dim(), dm, s);
                h.wk = random_mat(rng, cfg_.head_dim(), dm, s);
                h.wv = random_mat(rng, cfg_.value_dim(), dm, 0.5 * s);
            }
            b.proj = random_mat(rng, dm, cfg_.heads * cfg_.value_dim(),
                                1.0 / std::sqrt(static_cast<double>(cfg_.heads * cfg_.value_dim())));
            b.mlp1 = random_mat(rng, dm, dm, 1.0 / std::sqrt(static_cast<double>(dm)));
            b.mlp2 = random_mat(rng, dm, dm, 1.0 / std::sqrt(static_cast<double>(dm)));
        }
        embed_w_ = random_mat(rng, cfg_.embed_dim, dm, 1.0 / std::sqrt(static_cast<double>(dm)));
    }

    const TeacherConfig& config() const { return cfg_; }

    Output forward(const Tensor& image) const {
        require(image.ndim() == 3 && image.shape[0] == cfg_.channels &&
                    image.shape[1] == cfg_.image_size && image.shape[2] == cfg_.image_size,
                ErrorKind::Data,
                "teacher: image shape " + shape_str(image.shape) + " does not match config");

        const std::size_t N = cfg_.token_count();
        const std::size_t dm = cfg_.model_dim;

        // patchify + linear embed + positional offset
        Tensor tokens({N, dm});
        const std::size_t side = cfg_.tokens_per_side();
        for (std::size_t ty = 0; ty < side; ++ty)
            for (std::size_t tx = 0; tx < side; ++tx) {
                std::size_t t = ty * side + tx;
                Vec patch;
                patch.reserve(cfg_.patch * cfg_.patch * cfg_.channels);
                for (std::size_t c = 0; c < cfg_.channels; ++c)
                    for (std::size_t py = 0; py < cfg_.patch; ++py)
                        for (std::size_t px = 0; px < cfg_.patch; ++px)
                            patch.push_back(image.at(c, ty * cfg_.patch + py, tx * cfg_.patch + px));
                for (std::size_t o = 0; o < dm; ++o) {
                    double s = pos_.at(t, o);
                    for (std::size_t i = 0; i < patch.size(); ++i)
                        s += patch_w_.at(o, i) * patch[i];
                    tokens.at(t, o) = s;
                }
            }

        Tensor attn_avg; // head-averaged attention output of the last block
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim()));
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
            const Block& b = blocks_[bi];
            Tensor concat({N, cfg_.heads * cfg_.value_dim()});
            Tensor head_sum({N, cfg_.value_dim()});
            for (std::size_t h = 0; h < cfg_.heads; ++h) {
                Tensor q = matmul_t(tokens, b.heads[h].wq);
                Tensor k = matmul_t(tokens, b.heads[h].wk);
                Tensor v = matmul_t(tokens, b.heads[h].wv);
                nn::AttentionActs acts = nn::attention_forward(q, k, v, scale);
                for (std::size_t t = 0; t < N; ++t)
                    for (std::size_t c = 0; c < cfg_.value_dim(); ++c) {
                        concat.at(t, h * cfg_.value_dim() + c) = acts.out.at(t, c);
                        head_sum.at(t, c) += acts.out.at(t, c);
                    }
            }
            if (bi + 1 == blocks_.size()) {
                attn_avg = head_sum;
                for (double& vv : attn_avg.data) vv /= static_cast<double>(cfg_.heads);
            }
            // residual attention projection, then a tanh MLP residual
            Tensor mixed = matmul_t(concat, b.proj);
            for (std::size_t i = 0; i < tokens.numel(); ++i) tokens.data[i] += mixed.data[i];
            Tensor hidden = matmul_t(tokens, b.mlp1);
            for (double& vv : hidden.data) vv = std::tanh(vv);
            Tensor mlp_out = matmul_t(hidden, b.mlp2);
            for (std::size_t i = 0; i < tokens.numel(); ++i) tokens.data[i] += mlp_out.data[i];
        }

        // pool tokens, project to d_e
        Vec pooled(dm, 0.0);
        if (cfg_.pooling == TokenPooling::Mean) {
            for (std::size_t t = 0; t < N; ++t)
                for (std::size_t o = 0; o < dm; ++o) pooled[o] += tokens.at(t, o);
            for (double& v : pooled) v /= static_cast<double>(N);
        } else {
            for (std::size_t o = 0; o < dm; ++o) pooled[o] = tokens.at(0, o);
        }
        Vec emb(cfg_.embed_dim);
        for (std::size_t o = 0; o < cfg_.embed_dim; ++o) {
            double s = 0.0;
            for (std::size_t i = 0; i < dm; ++i) s += embed_w_.at(o, i) * pooled[i];
            emb[o] = s;
        }
        return {std::move(emb), std::move(attn_avg)};
    }

    Vec embed(const Tensor& image) const { return forward(image).embedding; }

    // flat view of all weight tensors, for immutability checks
    std::vector<const Tensor*> weights() const {
        std::vector<const Tensor*> w{&patch_w_, &pos_, &embed_w_};
        for (const Block& b : blocks_) {
            for (const Head& h : b.heads) {
                w.push_back(&h.wq);
                w.push_back(&h.wk);
                w.push_back(&h.wv);
            }
            w.push_back(&b.proj);
            w.push_back(&b.mlp1);
            w.push_back(&b.mlp2);
        }
        return w;
    }

private:
    struct Head {
        Tensor wq, wk, wv; // (d x dm), (d x dm), (d_v x dm)
    };
    struct Block {
        std::vector<Head> heads;
        Tensor proj, mlp1, mlp2;
    };

    static constexpr std::uint64_t kTeacherTag = 0x7eac4e12ULL;

    static Tensor random_mat(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
        Tensor t({rows, cols});
        for (double& v : t.data) v = rng.normal(0.0, stddev);
        return t;
    }

    // rows(x) x rows(w): y = x w^T where w is (out x in)
    static Tensor matmul_t(const Tensor& x, const Tensor& w) {
        const std::size_t N = x.shape[0], in = x.shape[1], out = w.shape[0];
        Tensor y({N, out});
        for (std::size_t t = 0; t < N; ++t)
            for (std::size_t o = 0; o < out; ++o) {
                double s = 0.0;
                for (std::size_t i = 0; i < in; ++i) s += x.at(t, i) * w.at(o, i);
                y.at(t, o) = s;
            }
        return y;
    }

    TeacherConfig cfg_;
    Tensor patch_w_, pos_, embed_w_;
    std::vector<Block> blocks_;
};

} // namespace c4r
