#pragma once

#include <functional>
#include <string>
#include <vector>

#include "c4r/discriminator.hpp"
#include "c4r/losses.hpp"
#include "c4r/projectors.hpp"
#include "c4r/student.hpp"
#include "c4r/teacher.hpp"

namespace c4r {

struct GradCheckPath {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t params_checked = 0;
};

struct GradCheckReport {
    std::vector<GradCheckPath> paths;

    double worst() const {
        double w = 0.0;
        for (const auto& p : paths) w = std::max(w, p.max_rel_err);
        return w;
    }
    bool all_below(double tol) const { return worst() < tol; }
};

namespace detail {

constexpr double kFdStep = 1e-4;

inline double rel_err(double a, double f) {
    double scale = std::max(std::fabs(a), std::fabs(f));
    if (scale < 1e-6) return std::fabs(a - f); // both ~0: compare absolutely
    return std::fabs(a - f) / scale;
}

// Compares accumulated analytic grads against central differences of `loss`
// for every trainable parameter element.
inline GradCheckPath check_path(const std::string& name, const nn::ParamRefs& params,
                                const std::function<double()>& loss,
                                const std::function<void()>& analytic_backward) {
    nn::zero_grads(params);
    analytic_backward();
    GradCheckPath path{name, 0.0, 0};
    for (nn::Param* p : params) {
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            double saved = p->value.data[i];
            p->value.data[i] = saved + kFdStep;
            double up = loss();
            p->value.data[i] = saved - kFdStep;
            double down = loss();
            p->value.data[i] = saved;
            double fd = (up - down) / (2.0 * kFdStep);
            path.max_rel_err = std::max(path.max_rel_err, rel_err(p->grad.data[i], fd));
            ++path.params_checked;
        }
    }
    return path;
}

} // namespace detail

// Builds toy-dimension models and verifies the analytic parameter gradients
// of every loss path against central finite differences.
inline GradCheckReport gradcheck(std::uint64_t seed = 1) {
    TeacherConfig tcfg;
    tcfg.image_size = 8;
    tcfg.patch = 4;
    tcfg.depth = 1;
    tcfg.heads = 1;
    tcfg.model_dim = 8;
    tcfg.embed_dim = 8;
    tcfg.seed = seed;
    TeacherModel teacher(tcfg);

    StudentConfig scfg;
    scfg.image_size = 8;
    scfg.channels = 1;
    scfg.widths = {4, 8};
    scfg.strides = {2, 1};
    scfg.tap_stage = 0; // 4x4 tap vs the teacher's 2x2 token grid: resize path
    scfg.head_hidden = 6;
    scfg.embed_dim = 8;
    scfg.seed = seed;
    StudentModel student(scfg);

    Rng rng(mix_seed(seed, 0xfeedULL));
    Tensor image({1, 8, 8});
    for (double& v : image.data) v = rng.normal(0.0, 1.0);
    TeacherModel::Output target = teacher.forward(image);

    GradCheckReport report;

    // cosine loss through the deployable MLP head
    {
        auto loss = [&]() {
            return loss_gl(target.embedding, student.forward(image).embedding);
        };
        auto backward = [&]() {
            student.forward(image);
            student.backward(loss_gl_grad(target.embedding, student.embedding()));
        };
        report.paths.push_back(detail::check_path("loss_gl(head)", student.params(), loss, backward));
    }

    // attention alignment through the PCA projector (includes the resize)
    {
        PCAProjector pca(scfg.tap_channels(), 4, tcfg.value_dim(), tcfg.tokens_per_side(),
                         mix_seed(seed, 0x9caULL));
        nn::ParamRefs params = student.params();
        auto pp = pca.params();
        params.insert(params.end(), pp.begin(), pp.end());
        auto loss = [&]() {
            student.forward(image);
            return loss_pca(target.attention, pca.forward(student.tap_features()));
        };
        auto backward = [&]() {
            student.forward(image);
            Tensor attn_s = pca.forward(student.tap_features());
            Tensor d_tap = pca.backward(loss_pca_grad(target.attention, attn_s));
            student.backward({}, d_tap);
        };
        report.paths.push_back(detail::check_path("loss_pca", params, loss, backward));
    }

    // cosine loss through the removable GL projector
    {
        GLProjector gl(scfg.tap_channels(), scfg.embed_dim, 2, mix_seed(seed, 0x91ULL));
        nn::ParamRefs params = student.params();
        auto gp = gl.params();
        params.insert(params.end(), gp.begin(), gp.end());
        auto loss = [&]() {
            student.forward(image);
            Vec proj = gl.forward(nn::global_average_pool(student.tap_features()));
            return loss_gl(target.embedding, proj);
        };
        auto backward = [&]() {
            student.forward(image);
            const Tensor& tap = student.tap_features();
            Vec proj = gl.forward(nn::global_average_pool(tap));
            Vec d_pooled = gl.backward(loss_gl_grad(target.embedding, proj));
            student.backward({}, nn::global_average_pool_backward(tap.shape, d_pooled));
        };
        report.paths.push_back(detail::check_path("loss_gl(projector)", params, loss, backward));
    }

    Discriminator disc(scfg.embed_dim, 6, mix_seed(seed, 0xd15cULL));
    Vec fake_emb(scfg.embed_dim);
    for (double& v : fake_emb) v = rng.normal(0.0, 1.0);

    // discriminator objective w.r.t. discriminator parameters
    {
        auto loss = [&]() {
            return loss_disc(disc.forward(target.embedding), disc.forward(fake_emb));
        };
        auto backward = [&]() {
            double d_real = disc.forward(target.embedding);
            disc.backward(loss_disc_grad_real(d_real));
            double d_fake = disc.forward(fake_emb);
            disc.backward(loss_disc_grad_fake(d_fake));
        };
        report.paths.push_back(detail::check_path("loss_disc", disc.params(), loss, backward));
    }

    // student-side adversarial term w.r.t. student parameters
    {
        auto loss = [&]() {
            return loss_adv_student(disc.forward(student.forward(image).embedding));
        };
        auto backward = [&]() {
            student.forward(image);
            double d_fake = disc.forward(student.embedding());
            Vec d_emb = disc.backward(loss_adv_student_grad(d_fake));
            student.backward(d_emb);
        };
        nn::zero_grads(disc.params());
        report.paths.push_back(
            detail::check_path("loss_adv_student", student.params(), loss, backward));
    }

    return report;
}

} // namespace c4r
