#pragma once

#include "c4r/tensor.hpp"

namespace c4r {

constexpr double kProbEps = 1e-7; // clamp for log arguments

struct LossBreakdown {
    double pca = 0.0;
    double gl = 0.0;
    double adv_student = 0.0;
    double disc = 0.0;
    double total = 0.0;
    double lambda = 0.0;
};

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

// || attn_T - attn_S ||_2^2
inline double loss_pca(const Tensor& attn_t, const Tensor& attn_s) {
    return frobenius_sq_distance(attn_t, attn_s);
}

// dL/d(attn_S)
inline Tensor loss_pca_grad(const Tensor& attn_t, const Tensor& attn_s) {
    require(attn_t.same_shape(attn_s), ErrorKind::Data, "loss_pca: shape mismatch");
    Tensor g(attn_s.shape);
    for (std::size_t i = 0; i < g.numel(); ++i)
        g.data[i] = 2.0 * (attn_s.data[i] - attn_t.data[i]);
    return g;
}

// 1 - cos(h_T, h_S')
inline double loss_gl(const Vec& h_t, const Vec& h_s) {
    return 1.0 - cosine_similarity(h_t, h_s);
}

// dL/d(h_S'), with h_T treated as a constant target
inline Vec loss_gl_grad(const Vec& h_t, const Vec& h_s) {
    require(h_t.size() == h_s.size(), ErrorKind::Data, "loss_gl: dimension mismatch");
    double nt = norm(h_t), ns = norm(h_s);
    require(nt > 0.0 && ns > 0.0, ErrorKind::Numeric, "loss_gl: zero-norm input");
    double d = dot(h_t, h_s);
    Vec g(h_s.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = -(h_t[i] / (nt * ns) - d * h_s[i] / (nt * ns * ns * ns));
    return g;
}

// -log D(real) - log(1 - D(fake)); what the discriminator minimizes
inline double loss_disc(double d_real, double d_fake) {
    return -std::log(clamp_prob(d_real)) - std::log(1.0 - clamp_prob(d_fake));
}

inline double loss_disc_grad_real(double d_real) { return -1.0 / clamp_prob(d_real); }
inline double loss_disc_grad_fake(double d_fake) { return 1.0 / (1.0 - clamp_prob(d_fake)); }

// non-saturating generator objective: -log D(fake)
inline double loss_adv_student(double d_fake) { return -std::log(clamp_prob(d_fake)); }
inline double loss_adv_student_grad(double d_fake) { return -1.0 / clamp_prob(d_fake); }

inline double loss_total(double pca, double gl, double adv_student, double lambda) {
    require(lambda >= 0.0, ErrorKind::Data, "loss_total: lambda must be nonnegative");
    return pca + gl + lambda * adv_student;
}

inline LossBreakdown make_breakdown(double pca, double gl, double adv, double disc,
                                    double lambda) {
    LossBreakdown b;
    b.pca = pca;
    b.gl = gl;
    b.adv_student = adv;
    b.disc = disc;
    b.lambda = lambda;
    b.total = loss_total(pca, gl, adv, lambda);
    return b;
}

} // namespace c4r
