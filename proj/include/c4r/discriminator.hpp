#pragma once

#include <array>

#include "c4r/nn.hpp"

namespace c4r {

// Three fully connected layers ending in a scalar sigmoid. Distinguishes
// teacher embeddings from student embeddings during adversarial training.
class Discriminator {
public:
    Discriminator(std::size_t embed_dim, std::size_t hidden, std::uint64_t seed)
        : embed_dim_(embed_dim) {
        Rng rng(mix_seed(seed, 0xd15cULL));
        fc_[0] = nn::Linear("disc.0", embed_dim, hidden);
        fc_[1] = nn::Linear("disc.1", hidden, hidden);
        fc_[2] = nn::Linear("disc.2", hidden, 1);
        for (auto& l : fc_) l.init(rng);
    }

    // strictly inside (0, 1)
    double forward(const Vec& e) {
        require(e.size() == embed_dim_, ErrorKind::Data,
                "discriminator: embedding length mismatch");
        a1_pre_ = fc_[0].forward(e);
        a1_ = nn::relu(a1_pre_);
        a2_pre_ = fc_[1].forward(a1_);
        a2_ = nn::relu(a2_pre_);
        logit_ = fc_[2].forward(a2_)[0];
        out_ = nn::sigmoid(logit_);
        return out_;
    }

    // d_out is dL/d(sigmoid output); returns dL/d(input embedding).
    // Parameter gradients accumulate as usual.
    Vec backward(double d_out) {
        double d_logit = d_out * out_ * (1.0 - out_);
        Vec da2 = fc_[2].backward({d_logit});
        Vec da2_pre = nn::relu_backward(a2_pre_, da2);
        Vec da1 = fc_[1].backward(da2_pre);
        Vec da1_pre = nn::relu_backward(a1_pre_, da1);
        return fc_[0].backward(da1_pre);
    }

    nn::ParamRefs params() {
        nn::ParamRefs out;
        for (auto& l : fc_) {
            auto ps = l.params();
            out.insert(out.end(), ps.begin(), ps.end());
        }
        return out;
    }

    std::size_t embed_dim() const { return embed_dim_; }

private:
    std::size_t embed_dim_;
    std::array<nn::Linear, 3> fc_;
    Vec a1_pre_, a1_, a2_pre_, a2_;
    double logit_ = 0.0, out_ = 0.5;
};

} // namespace c4r
