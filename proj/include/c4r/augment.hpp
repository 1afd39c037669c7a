#pragma once

#include <vector>

#include "c4r/nn.hpp"
#include "c4r/rng.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

// Random crop / cutout mask / scalar jitter, resampled per (seed, step, view).
struct AugmentConfig {
    std::size_t views = 2;
    double crop_min = 0.7, crop_max = 1.0; // kept fraction of each side
    double mask_min = 0.0, mask_max = 0.25; // side fraction of the zeroed box
    double jitter = 0.2;                    // amplitude of scale/shift
    std::uint64_t seed = 1;

    void validate() const {
        require(views >= 1, ErrorKind::Data, "augment: views must be >= 1");
        require(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0, ErrorKind::Data,
                "augment: crop fractions must satisfy 0 < min <= max <= 1");
        require(mask_min >= 0.0 && mask_min <= mask_max && mask_max < 1.0, ErrorKind::Data,
                "augment: mask fractions must satisfy 0 <= min <= max < 1");
        require(jitter >= 0.0, ErrorKind::Data, "augment: jitter must be nonnegative");
    }
};

inline Tensor augment_one(const Tensor& image, const AugmentConfig& cfg, std::uint64_t step,
                          std::uint64_t view) {
    const std::size_t C = image.shape[0], H = image.shape[1], W = image.shape[2];
    Rng rng(mix_seed(cfg.seed, step, view));
    Tensor out = image;

    // crop a fraction of each side, resize back to full size
    double cf = rng.uniform(cfg.crop_min, cfg.crop_max);
    std::size_t ch = std::max<std::size_t>(1, static_cast<std::size_t>(cf * H));
    std::size_t cw = std::max<std::size_t>(1, static_cast<std::size_t>(cf * W));
    if (ch < H || cw < W) {
        std::size_t oy = rng.uniform_index(H - ch + 1);
        std::size_t ox = rng.uniform_index(W - cw + 1);
        Tensor crop({C, ch, cw});
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < ch; ++y)
                for (std::size_t x = 0; x < cw; ++x)
                    crop.at(c, y, x) = out.at(c, oy + y, ox + x);
        out = nn::bilinear_resize(crop, H, W);
    }

    // cutout: zero a rectangle of floor(f*H) x floor(f*W)
    double mf = rng.uniform(cfg.mask_min, cfg.mask_max);
    std::size_t mh = static_cast<std::size_t>(mf * H);
    std::size_t mw = static_cast<std::size_t>(mf * W);
    if (mh > 0 && mw > 0) {
        std::size_t oy = rng.uniform_index(H - mh + 1);
        std::size_t ox = rng.uniform_index(W - mw + 1);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < mh; ++y)
                for (std::size_t x = 0; x < mw; ++x)
                    out.at(c, oy + y, ox + x) = 0.0;
    }

    // scalar jitter: x -> (1 + a) x + b
    if (cfg.jitter > 0.0) {
        double scale = 1.0 + rng.uniform(-cfg.jitter, cfg.jitter);
        double shift = rng.uniform(-cfg.jitter, cfg.jitter);
        for (double& v : out.data) v = scale * v + shift;
    }
    return out;
}

// V augmented views, deterministic given (cfg.seed, step, view index).
inline std::vector<Tensor> augment_views(const Tensor& image, const AugmentConfig& cfg,
                                         std::uint64_t step) {
    cfg.validate();
    std::vector<Tensor> views;
    views.reserve(cfg.views);
    for (std::uint64_t v = 0; v < cfg.views; ++v)
        views.push_back(augment_one(image, cfg, step, v));
    return views;
}

} // namespace c4r
