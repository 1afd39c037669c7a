#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c4r/rng.hpp"
#include "c4r/tensor.hpp"

namespace c4r::nn {

// A named weight tensor with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, std::vector<std::size_t> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}

    void zero_grad() { grad.fill(0.0); }

    void init_normal(Rng& rng, double stddev) {
        for (double& v : value.data) v = rng.normal(0.0, stddev);
    }
};

using ParamRefs = std::vector<Param*>;

inline void zero_grads(const ParamRefs& ps) {
    for (Param* p : ps) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Dense layer: y = W x + b, W is (out x in).

class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, std::size_t in, std::size_t out)
        : in_(in), out_(out),
          weight_(name + ".weight", {out, in}),
          bias_(name + ".bias", {out}) {}

    void init(Rng& rng) {
        weight_.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(in_)));
    }

    Vec forward(const Vec& x) {
        require(x.size() == in_, ErrorKind::Data, "Linear: input length mismatch");
        last_in_ = x;
        Vec y(out_);
        for (std::size_t o = 0; o < out_; ++o) {
            double s = bias_.value.data[o];
            const double* wr = &weight_.value.data[o * in_];
            for (std::size_t i = 0; i < in_; ++i) s += wr[i] * x[i];
            y[o] = s;
        }
        return y;
    }

    Vec backward(const Vec& dy) {
        Vec dx(in_, 0.0);
        for (std::size_t o = 0; o < out_; ++o) {
            double g = dy[o];
            bias_.grad.data[o] += g;
            double* wgr = &weight_.grad.data[o * in_];
            const double* wr = &weight_.value.data[o * in_];
            for (std::size_t i = 0; i < in_; ++i) {
                wgr[i] += g * last_in_[i];
                dx[i] += g * wr[i];
            }
        }
        return dx;
    }

    std::size_t in_dim() const { return in_; }
    std::size_t out_dim() const { return out_; }
    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    ParamRefs params() { return {&weight_, &bias_}; }

private:
    std::size_t in_ = 0, out_ = 0;
    Param weight_, bias_;
    Vec last_in_;
};

// ---------------------------------------------------------------------------
// Block-diagonal dense layer: input and output are split into G contiguous
// blocks; output block g depends only on input block g.

class GroupLinear {
public:
    GroupLinear() = default;
    GroupLinear(const std::string& name, std::size_t in, std::size_t out, std::size_t groups)
        : in_(in), out_(out), groups_(groups) {
        require(groups >= 1 && in % groups == 0 && out % groups == 0, ErrorKind::Data,
                "GroupLinear: group count must divide input and output dims");
        in_g_ = in / groups;
        out_g_ = out / groups;
        weight_ = Param(name + ".weight", {groups, out_g_, in_g_});
        bias_ = Param(name + ".bias", {out});
    }

    void init(Rng& rng) {
        weight_.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(in_g_)));
    }

    Vec forward(const Vec& x) {
        require(x.size() == in_, ErrorKind::Data, "GroupLinear: input length mismatch");
        last_in_ = x;
        Vec y(out_);
        for (std::size_t g = 0; g < groups_; ++g) {
            const double* xg = &x[g * in_g_];
            for (std::size_t o = 0; o < out_g_; ++o) {
                double s = bias_.value.data[g * out_g_ + o];
                const double* wr = &weight_.value.data[(g * out_g_ + o) * in_g_];
                for (std::size_t i = 0; i < in_g_; ++i) s += wr[i] * xg[i];
                y[g * out_g_ + o] = s;
            }
        }
        return y;
    }

    Vec backward(const Vec& dy) {
        Vec dx(in_, 0.0);
        for (std::size_t g = 0; g < groups_; ++g) {
            for (std::size_t o = 0; o < out_g_; ++o) {
                double gr = dy[g * out_g_ + o];
                bias_.grad.data[g * out_g_ + o] += gr;
                double* wgr = &weight_.grad.data[(g * out_g_ + o) * in_g_];
                const double* wr = &weight_.value.data[(g * out_g_ + o) * in_g_];
                for (std::size_t i = 0; i < in_g_; ++i) {
                    wgr[i] += gr * last_in_[g * in_g_ + i];
                    dx[g * in_g_ + i] += gr * wr[i];
                }
            }
        }
        return dx;
    }

    std::size_t groups() const { return groups_; }
    ParamRefs params() { return {&weight_, &bias_}; }

private:
    std::size_t in_ = 0, out_ = 0, groups_ = 1, in_g_ = 0, out_g_ = 0;
    Param weight_, bias_;
    Vec last_in_;
};

// ---------------------------------------------------------------------------
// 3x3 convolution, padding 1, configurable stride. Input (Cin x H x W).

class Conv2D {
public:
    Conv2D() = default;
    Conv2D(const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride)
        : cin_(cin), cout_(cout), stride_(stride),
          weight_(name + ".weight", {cout, cin, 3, 3}),
          bias_(name + ".bias", {cout}) {}

    void init(Rng& rng) {
        weight_.init_normal(rng, 1.0 / std::sqrt(static_cast<double>(9 * cin_)));
    }

    static std::size_t out_size(std::size_t in, std::size_t stride) {
        return (in + 2 - 3) / stride + 1;
    }

    Tensor forward(const Tensor& x) {
        require(x.ndim() == 3 && x.shape[0] == cin_, ErrorKind::Data,
                "Conv2D: input channel mismatch, got " + shape_str(x.shape));
        last_in_ = x;
        const std::size_t H = x.shape[1], W = x.shape[2];
        const std::size_t Ho = out_size(H, stride_), Wo = out_size(W, stride_);
        Tensor y({cout_, Ho, Wo});
        for (std::size_t co = 0; co < cout_; ++co) {
            for (std::size_t oy = 0; oy < Ho; ++oy) {
                for (std::size_t ox = 0; ox < Wo; ++ox) {
                    double s = bias_.value.data[co];
                    for (std::size_t ci = 0; ci < cin_; ++ci) {
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                            std::int64_t iy = static_cast<std::int64_t>(oy * stride_ + ky) - 1;
                            if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                std::int64_t ix = static_cast<std::int64_t>(ox * stride_ + kx) - 1;
                                if (ix < 0 || ix >= static_cast<std::int64_t>(W)) continue;
                                s += weight_.value.data[((co * cin_ + ci) * 3 + ky) * 3 + kx] *
                                     x.at(ci, iy, ix);
                            }
                        }
                    }
                    y.at(co, oy, ox) = s;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) {
        const Tensor& x = last_in_;
        const std::size_t H = x.shape[1], W = x.shape[2];
        const std::size_t Ho = dy.shape[1], Wo = dy.shape[2];
        Tensor dx(x.shape);
        for (std::size_t co = 0; co < cout_; ++co) {
            for (std::size_t oy = 0; oy < Ho; ++oy) {
                for (std::size_t ox = 0; ox < Wo; ++ox) {
                    double g = dy.at(co, oy, ox);
                    bias_.grad.data[co] += g;
                    for (std::size_t ci = 0; ci < cin_; ++ci) {
                        for (std::size_t ky = 0; ky < 3; ++ky) {
                            std::int64_t iy = static_cast<std::int64_t>(oy * stride_ + ky) - 1;
                            if (iy < 0 || iy >= static_cast<std::int64_t>(H)) continue;
                            for (std::size_t kx = 0; kx < 3; ++kx) {
                                std::int64_t ix = static_cast<std::int64_t>(ox * stride_ + kx) - 1;
                                if (ix < 0 || ix >= static_cast<std::int64_t>(W)) continue;
                                std::size_t widx = ((co * cin_ + ci) * 3 + ky) * 3 + kx;
                                weight_.grad.data[widx] += g * x.at(ci, iy, ix);
                                dx.at(ci, iy, ix) += g * weight_.value.data[widx];
                            }
                        }
                    }
                }
            }
        }
        return dx;
    }

    std::size_t out_channels() const { return cout_; }
    std::size_t stride() const { return stride_; }
    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    ParamRefs params() { return {&weight_, &bias_}; }

private:
    std::size_t cin_ = 0, cout_ = 0, stride_ = 1;
    Param weight_, bias_;
    Tensor last_in_;
};

// ---------------------------------------------------------------------------
// Stateless pieces.

inline Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

inline Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < x.numel(); ++i)
        if (x.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
}

inline Vec relu(const Vec& x) {
    Vec y = x;
    for (double& v : y) v = v > 0.0 ? v : 0.0;
    return y;
}

inline Vec relu_backward(const Vec& x, const Vec& dy) {
    Vec dx = dy;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] <= 0.0) dx[i] = 0.0;
    return dx;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-channel mean over spatial positions.
inline Vec global_average_pool(const Tensor& x) {
    const std::size_t C = x.shape[0], HW = x.shape[1] * x.shape[2];
    Vec y(C);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < HW; ++i) s += x.data[c * HW + i];
        y[c] = s / static_cast<double>(HW);
    }
    return y;
}

inline Tensor global_average_pool_backward(const std::vector<std::size_t>& in_shape, const Vec& dy) {
    const std::size_t HW = in_shape[1] * in_shape[2];
    Tensor dx(in_shape);
    for (std::size_t c = 0; c < in_shape[0]; ++c) {
        double g = dy[c] / static_cast<double>(HW);
        for (std::size_t i = 0; i < HW; ++i) dx.data[c * HW + i] = g;
    }
    return dx;
}

// Align-corners bilinear resize of a (C x H x W) map to (C x Ho x Wo).
// When the target equals the source it is the identity.
inline Tensor bilinear_resize(const Tensor& x, std::size_t Ho, std::size_t Wo) {
    const std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    Tensor y({C, Ho, Wo});
    const double sy = Ho > 1 ? static_cast<double>(H - 1) / (Ho - 1) : 0.0;
    const double sx = Wo > 1 ? static_cast<double>(W - 1) / (Wo - 1) : 0.0;
    for (std::size_t oy = 0; oy < Ho; ++oy) {
        double fy = oy * sy;
        std::size_t y0 = static_cast<std::size_t>(fy);
        std::size_t y1 = std::min(y0 + 1, H - 1);
        double wy = fy - y0;
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            double fx = ox * sx;
            std::size_t x0 = static_cast<std::size_t>(fx);
            std::size_t x1 = std::min(x0 + 1, W - 1);
            double wx = fx - x0;
            for (std::size_t c = 0; c < C; ++c) {
                double v = (1 - wy) * ((1 - wx) * x.at(c, y0, x0) + wx * x.at(c, y0, x1)) +
                           wy * ((1 - wx) * x.at(c, y1, x0) + wx * x.at(c, y1, x1));
                y.at(c, oy, ox) = v;
            }
        }
    }
    return y;
}

// Transpose of bilinear_resize: scatter output gradients back to source cells.
inline Tensor bilinear_resize_backward(const std::vector<std::size_t>& in_shape, const Tensor& dy) {
    const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
    const std::size_t Ho = dy.shape[1], Wo = dy.shape[2];
    Tensor dx(in_shape);
    const double sy = Ho > 1 ? static_cast<double>(H - 1) / (Ho - 1) : 0.0;
    const double sx = Wo > 1 ? static_cast<double>(W - 1) / (Wo - 1) : 0.0;
    for (std::size_t oy = 0; oy < Ho; ++oy) {
        double fy = oy * sy;
        std::size_t y0 = static_cast<std::size_t>(fy);
        std::size_t y1 = std::min(y0 + 1, H - 1);
        double wy = fy - y0;
        for (std::size_t ox = 0; ox < Wo; ++ox) {
            double fx = ox * sx;
            std::size_t x0 = static_cast<std::size_t>(fx);
            std::size_t x1 = std::min(x0 + 1, W - 1);
            double wx = fx - x0;
            for (std::size_t c = 0; c < C; ++c) {
                double g = dy.at(c, oy, ox);
                dx.at(c, y0, x0) += (1 - wy) * (1 - wx) * g;
                dx.at(c, y0, x1) += (1 - wy) * wx * g;
                dx.at(c, y1, x0) += wy * (1 - wx) * g;
                dx.at(c, y1, x1) += wy * wx * g;
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Scaled dot-product attention on token matrices.
//   probs = softmax(Q K^T * scale), out = probs V
// Q, K are (N x d); V is (N x d_v).

struct AttentionActs {
    Tensor probs; // (N x N), kept for backward
    Tensor out;   // (N x d_v)
};

inline AttentionActs attention_forward(const Tensor& q, const Tensor& k, const Tensor& v,
                                       double scale) {
    const std::size_t N = q.shape[0], d = q.shape[1], dv = v.shape[1];
    Tensor scores({N, N});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) s += q.at(i, t) * k.at(j, t);
            scores.at(i, j) = s * scale;
        }
    AttentionActs acts;
    acts.probs = softmax_rows(scores);
    acts.out = Tensor({N, dv});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t c = 0; c < dv; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += acts.probs.at(i, j) * v.at(j, c);
            acts.out.at(i, c) = s;
        }
    return acts;
}

struct AttentionGrads {
    Tensor dq, dk, dv;
};

inline AttentionGrads attention_backward(const Tensor& dout, const Tensor& q, const Tensor& k,
                                         const Tensor& v, const Tensor& probs, double scale) {
    const std::size_t N = q.shape[0], d = q.shape[1], dv = v.shape[1];
    AttentionGrads g{Tensor(q.shape), Tensor(k.shape), Tensor(v.shape)};

    // dV = probs^T dOut
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t c = 0; c < dv; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += probs.at(i, j) * dout.at(i, c);
            g.dv.at(j, c) = s;
        }

    // dProbs = dOut V^T, then softmax jacobian per row
    Tensor dscores({N, N});
    for (std::size_t i = 0; i < N; ++i) {
        Vec dp(N);
        for (std::size_t j = 0; j < N; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < dv; ++c) s += dout.at(i, c) * v.at(j, c);
            dp[j] = s;
        }
        double row_dot = 0.0;
        for (std::size_t j = 0; j < N; ++j) row_dot += dp[j] * probs.at(i, j);
        for (std::size_t j = 0; j < N; ++j)
            dscores.at(i, j) = probs.at(i, j) * (dp[j] - row_dot) * scale;
    }

    // dQ = dScores K, dK = dScores^T Q
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t t = 0; t < d; ++t) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) s += dscores.at(i, j) * k.at(j, t);
            g.dq.at(i, t) = s;
        }
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t t = 0; t < d; ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += dscores.at(i, j) * q.at(i, t);
            g.dk.at(j, t) = s;
        }
    return g;
}

// ---------------------------------------------------------------------------
// Plain/momentum SGD over a parameter list; frozen params are skipped.

class Sgd {
public:
    Sgd(double lr, double momentum = 0.0) : lr_(lr), momentum_(momentum) {}

    void step(const ParamRefs& params) {
        if (momentum_ > 0.0 && velocity_.size() != params.size()) {
            velocity_.clear();
            for (Param* p : params) velocity_.emplace_back(p->value.shape, 0.0);
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            Param* p = params[k];
            if (!p->trainable) continue;
            for (std::size_t i = 0; i < p->value.numel(); ++i) {
                double g = p->grad.data[i];
                if (momentum_ > 0.0) {
                    double& v = velocity_[k].data[i];
                    v = momentum_ * v + g;
                    g = v;
                }
                p->value.data[i] -= lr_ * g;
            }
        }
    }

private:
    double lr_;
    double momentum_;
    std::vector<Tensor> velocity_;
};

} // namespace c4r::nn
