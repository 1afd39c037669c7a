#pragma once

#include <array>
#include <numeric>
#include <string>
#include <vector>

#include "c4r/nn.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

struct StudentConfig {
    std::size_t image_size = 32;
    std::size_t channels = 1;
    std::vector<std::size_t> widths = {8, 16, 32, 32};  // one conv block per stage
    std::vector<std::size_t> strides = {2, 2, 2, 1};
    std::size_t tap_stage = 2;   // feature map feeding the PCA/GL projectors
    std::size_t head_hidden = 64;
    std::size_t embed_dim = 768;
    std::uint64_t seed = 1;

    void validate() const {
        require(!widths.empty() && widths.size() == strides.size(), ErrorKind::Data,
                "student: widths and strides must be nonempty and equal length");
        require(tap_stage < widths.size(), ErrorKind::Data,
                "student: tap_stage out of range");
        for (std::size_t s : strides)
            require(s >= 1, ErrorKind::Data, "student: strides must be >= 1");
    }

    std::size_t stage_count() const { return widths.size(); }
    std::size_t layer_count() const { return widths.size() + 3; } // blocks + MLP head

    std::size_t spatial_after(std::size_t stage) const {
        std::size_t s = image_size;
        for (std::size_t i = 0; i <= stage; ++i)
            s = (s + 2 - 3) / strides[i] + 1;
        return s;
    }
    std::size_t tap_side() const { return spatial_after(tap_stage); }
    std::size_t tap_channels() const { return widths[tap_stage]; }
};

// "EfficientNet-B3-scale" sizing (parameter count of the same order); provided
// as a named config, weights are still seeded-random.
inline StudentConfig student_b3_scale_config() {
    StudentConfig cfg;
    cfg.image_size = 300;
    cfg.channels = 3;
    cfg.widths = {32, 64, 128, 256, 512, 1024};
    cfg.strides = {2, 2, 2, 2, 2, 2};
    cfg.tap_stage = 4;
    cfg.head_hidden = 1024;
    cfg.embed_dim = 768;
    return cfg;
}

// Convolutional student: N conv(3x3)+ReLU stages, global average pooling and
// a 3-layer MLP projection head producing the deployable embedding. The tap
// stage's post-activation feature map feeds the training-time projectors.
class StudentModel {
public:
    struct Acts {
        std::vector<Tensor> pre;  // per-stage conv outputs (pre-ReLU)
        std::vector<Tensor> post; // per-stage activations
        Vec pooled;
        Vec h1_pre, h1, h2_pre, h2;
        Vec embedding;
    };

    explicit StudentModel(const StudentConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(mix_seed(cfg_.seed, 0x57decafULL));
        std::size_t cin = cfg_.channels;
        for (std::size_t i = 0; i < cfg_.widths.size(); ++i) {
            stages_.emplace_back("backbone." + std::to_string(i), cin, cfg_.widths[i],
                                 cfg_.strides[i]);
            stages_.back().init(rng);
            cin = cfg_.widths[i];
        }
        head_[0] = nn::Linear("head.0", cfg_.widths.back(), cfg_.head_hidden);
        head_[1] = nn::Linear("head.1", cfg_.head_hidden, cfg_.head_hidden);
        head_[2] = nn::Linear("head.2", cfg_.head_hidden, cfg_.embed_dim);
        for (auto& l : head_) l.init(rng);
    }

    const StudentConfig& config() const { return cfg_; }

    // forward caches activations for one subsequent backward()
    const Acts& forward(const Tensor& image) {
        require(image.ndim() == 3 && image.shape[0] == cfg_.channels &&
                    image.shape[1] == cfg_.image_size && image.shape[2] == cfg_.image_size,
                ErrorKind::Data,
                "student: image shape " + shape_str(image.shape) + " does not match config");
        acts_.pre.clear();
        acts_.post.clear();
        Tensor x = image;
        for (auto& stage : stages_) {
            acts_.pre.push_back(stage.forward(x));
            acts_.post.push_back(nn::relu(acts_.pre.back()));
            x = acts_.post.back();
        }
        acts_.pooled = nn::global_average_pool(x);
        acts_.h1_pre = head_[0].forward(acts_.pooled);
        acts_.h1 = nn::relu(acts_.h1_pre);
        acts_.h2_pre = head_[1].forward(acts_.h1);
        acts_.h2 = nn::relu(acts_.h2_pre);
        acts_.embedding = head_[2].forward(acts_.h2);
        return acts_;
    }

    const Tensor& tap_features() const { return acts_.post[cfg_.tap_stage]; }
    const Vec& embedding() const { return acts_.embedding; }

    // Accumulates parameter gradients for the activations cached by the last
    // forward(). d_embedding may be empty (no head-side loss); d_tap likewise.
    void backward(const Vec& d_embedding, const Tensor& d_tap = Tensor()) {
        Tensor dx; // gradient flowing into stage outputs, back to front
        if (!d_embedding.empty()) {
            Vec dh2 = head_[2].backward(d_embedding);
            Vec dh2_pre = nn::relu_backward(acts_.h2_pre, dh2);
            Vec dh1 = head_[1].backward(dh2_pre);
            Vec dh1_pre = nn::relu_backward(acts_.h1_pre, dh1);
            Vec dpooled = head_[0].backward(dh1_pre);
            dx = nn::global_average_pool_backward(acts_.post.back().shape, dpooled);
        }
        for (std::size_t i = stages_.size(); i-- > 0;) {
            if (i == cfg_.tap_stage && d_tap.numel() > 0) {
                if (dx.numel() == 0) dx = d_tap;
                else
                    for (std::size_t k = 0; k < dx.numel(); ++k) dx.data[k] += d_tap.data[k];
            }
            if (dx.numel() == 0) continue; // stages past the tap carry no gradient
            Tensor dpre = nn::relu_backward(acts_.pre[i], dx);
            dx = stages_[i].backward(dpre);
        }
    }

    // Layers in forward order: backbone blocks then the 3 head layers.
    // Marks exactly the last `suffix` layers trainable, freezes the rest.
    void set_trainable_suffix(std::size_t suffix) {
        const std::size_t total = cfg_.layer_count();
        require(suffix <= total, ErrorKind::Data,
                "set_trainable: suffix count exceeds layer count");
        std::size_t idx = 0;
        auto mark = [&](nn::ParamRefs ps) {
            bool on = idx >= total - suffix;
            for (nn::Param* p : ps) p->trainable = on;
            ++idx;
        };
        for (auto& stage : stages_) mark(stage.params());
        for (auto& l : head_) mark(l.params());
    }

    nn::ParamRefs params() {
        nn::ParamRefs out;
        for (auto& stage : stages_) {
            auto ps = stage.params();
            out.insert(out.end(), ps.begin(), ps.end());
        }
        for (auto& l : head_) {
            auto ps = l.params();
            out.insert(out.end(), ps.begin(), ps.end());
        }
        return out;
    }

    nn::ParamRefs trainable_params() {
        nn::ParamRefs out;
        for (nn::Param* p : params())
            if (p->trainable) out.push_back(p);
        return out;
    }

private:
    StudentConfig cfg_;
    std::vector<nn::Conv2D> stages_;
    std::array<nn::Linear, 3> head_;
    Acts acts_;
};

} // namespace c4r
