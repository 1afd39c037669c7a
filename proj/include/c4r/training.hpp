#pragma once

#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "c4r/augment.hpp"
#include "c4r/discriminator.hpp"
#include "c4r/losses.hpp"
#include "c4r/projectors.hpp"
#include "c4r/student.hpp"
#include "c4r/teacher.hpp"

namespace c4r {

struct TrainConfig {
    std::size_t batch = 16;
    std::size_t steps = 1000;
    double lr_student = 0.02;
    double lr_disc = 0.02;
    double lambda = 0.1;
    std::size_t trainable_suffix = 6;
    bool momentum = false;
    double momentum_coef = 0.9;
    std::size_t disc_steps = 1;     // discriminator updates per student update
    bool use_gl_projector = false;  // removable GL path; the MLP head always carries alignment
    std::size_t gl_groups = 1;
    bool gl_loss_on_views = false;  // optionally average the cosine loss over views too
    std::size_t disc_hidden = 32;
    std::size_t pca_query_dim = 16;
    std::uint64_t seed = 1;

    void validate() const {
        require(batch >= 1, ErrorKind::Data, "train: batch must be >= 1");
        require(lr_student > 0.0 && lr_disc > 0.0, ErrorKind::Data,
                "train: learning rates must be positive");
        require(lambda >= 0.0, ErrorKind::Data, "train: lambda must be nonnegative");
        require(disc_steps >= 1, ErrorKind::Data, "train: disc_steps must be >= 1");
    }
};

struct StepRecord {
    LossBreakdown loss;
    double disc_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<StepRecord> steps;

    std::string to_csv() const {
        std::ostringstream os;
        os << "step,pca,gl,adv_student,disc,total,disc_accuracy\n";
        os << std::setprecision(17);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& r = steps[i];
            os << i << "," << r.loss.pca << "," << r.loss.gl << "," << r.loss.adv_student << ","
               << r.loss.disc << "," << r.loss.total << "," << r.disc_accuracy << "\n";
        }
        return os.str();
    }
};

// Alternating distillation: one (or more) discriminator updates with the
// student held fixed, then one student+projector update with the
// discriminator held fixed. PCA and GL losses see the clean image; the
// adversarial term consumes augmented views.
class DistillTrainer {
public:
    DistillTrainer(const TeacherModel& teacher, StudentModel& student, const TrainConfig& cfg,
                   const AugmentConfig& aug)
        : teacher_(teacher), student_(student), cfg_(cfg), aug_(aug),
          pca_(student.config().tap_channels(), cfg.pca_query_dim,
               teacher.config().value_dim(), teacher.config().tokens_per_side(),
               mix_seed(cfg.seed, 0x9caULL)),
          disc_(student.config().embed_dim, cfg.disc_hidden, mix_seed(cfg.seed, 0xd15cULL)),
          opt_student_(cfg.lr_student, cfg.momentum ? cfg.momentum_coef : 0.0),
          opt_disc_(cfg.lr_disc, cfg.momentum ? cfg.momentum_coef : 0.0) {
        cfg_.validate();
        aug_.validate();
        require(teacher.config().embed_dim == student.config().embed_dim, ErrorKind::Data,
                "teacher and student embedding dimensions differ");
        if (cfg_.use_gl_projector)
            gl_.emplace(student.config().tap_channels(), student.config().embed_dim,
                        cfg_.gl_groups, mix_seed(cfg_.seed, 0x91ULL));
        student_.set_trainable_suffix(cfg_.trainable_suffix);
    }

    PCAProjector& pca() { return pca_; }
    GLProjector* gl() { return gl_ ? &*gl_ : nullptr; }
    Discriminator& disc() { return disc_; }

    nn::ParamRefs student_side_params() {
        nn::ParamRefs out = student_.params();
        auto add = [&out](nn::ParamRefs ps) { out.insert(out.end(), ps.begin(), ps.end()); };
        add(pca_.params());
        if (gl_) add(gl_->params());
        return out;
    }

    StepRecord train_step(const std::vector<const Tensor*>& batch,
                          const std::vector<const TeacherModel::Output*>& targets,
                          std::size_t step_index) {
        require(batch.size() == targets.size() && !batch.empty(), ErrorKind::Data,
                "train_step: batch and targets must be nonempty and equal length");
        StepRecord rec;
        update_discriminator(batch, targets, step_index, rec);
        update_student(batch, targets, step_index, rec);
        return rec;
    }

    // phase (a): discriminator update, student fixed
    void update_discriminator(const std::vector<const Tensor*>& batch,
                              const std::vector<const TeacherModel::Output*>& targets,
                              std::size_t step_index, StepRecord& rec) {
        for (std::size_t ds = 0; ds < cfg_.disc_steps; ++ds) {
            nn::zero_grads(disc_.params());
            double loss = 0.0, correct = 0.0, total = 0.0;
            const double n_real = static_cast<double>(batch.size());
            const double n_fake = n_real * static_cast<double>(aug_.views);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                double d_real = disc_.forward(targets[i]->embedding);
                loss += -std::log(clamp_prob(d_real)) / n_real;
                disc_.backward(loss_disc_grad_real(d_real) / n_real);
                correct += d_real > 0.5;
                ++total;
                for (const Tensor& view : augment_views(*batch[i], aug_, step_index)) {
                    const Vec& fake = student_.forward(view).embedding;
                    double d_fake = disc_.forward(fake);
                    loss += -std::log(1.0 - clamp_prob(d_fake)) / n_fake;
                    disc_.backward(loss_disc_grad_fake(d_fake) / n_fake);
                    correct += d_fake < 0.5;
                    ++total;
                }
            }
            require(std::isfinite(loss), ErrorKind::Numeric,
                    "train_step: non-finite discriminator loss");
            opt_disc_.step(disc_.params());
            rec.loss.disc = loss;
            rec.disc_accuracy = correct / total;
        }
    }

    // phase (b): student + projector update, discriminator fixed
    void update_student(const std::vector<const Tensor*>& batch,
                        const std::vector<const TeacherModel::Output*>& targets,
                        std::size_t step_index, StepRecord& rec) {
        nn::ParamRefs sp = student_side_params();
        nn::zero_grads(sp);
        double pca_loss = 0.0, gl_loss = 0.0, adv_loss = 0.0;
        const double B = static_cast<double>(batch.size());
        const double n_views = B * static_cast<double>(aug_.views);
        const std::size_t gl_paths = gl_ ? 2 : 1;

        for (std::size_t i = 0; i < batch.size(); ++i) {
            const TeacherModel::Output& target = *targets[i];
            student_.forward(*batch[i]);
            const Tensor& tap = student_.tap_features();

            // PCA attention alignment
            Tensor attn_s = pca_.forward(tap);
            pca_loss += loss_pca(target.attention, attn_s) / B;
            Tensor d_attn = loss_pca_grad(target.attention, attn_s);
            for (double& v : d_attn.data) v /= B;
            Tensor d_tap = pca_.backward(d_attn);

            // cosine alignment through the deployable head
            const Vec& emb = student_.embedding();
            double w = 1.0 / (B * static_cast<double>(gl_paths));
            gl_loss += loss_gl(target.embedding, emb) / (B * gl_paths);
            Vec d_emb = loss_gl_grad(target.embedding, emb);
            for (double& v : d_emb) v *= w;

            // optional removable GL projector path
            if (gl_) {
                Vec pooled = nn::global_average_pool(tap);
                Vec proj = gl_->forward(pooled);
                gl_loss += loss_gl(target.embedding, proj) / (B * gl_paths);
                Vec d_proj = loss_gl_grad(target.embedding, proj);
                for (double& v : d_proj) v *= w;
                Vec d_pooled = gl_->backward(d_proj);
                Tensor d_tap_gl = nn::global_average_pool_backward(tap.shape, d_pooled);
                for (std::size_t k = 0; k < d_tap.numel(); ++k)
                    d_tap.data[k] += d_tap_gl.data[k];
            }
            student_.backward(d_emb, d_tap);

            // adversarial term on augmented views (discriminator params frozen
            // for the update; gradient still flows through it to the student)
            for (const Tensor& view : augment_views(*batch[i], aug_, step_index)) {
                student_.forward(view);
                const Vec& fake = student_.embedding();
                double d_fake = disc_.forward(fake);
                adv_loss += loss_adv_student(d_fake) / n_views;
                if (cfg_.lambda > 0.0) {
                    double g = cfg_.lambda * loss_adv_student_grad(d_fake) / n_views;
                    Vec d_view_emb = disc_.backward(g);
                    student_.backward(d_view_emb);
                }
                if (cfg_.gl_loss_on_views) {
                    // folded into the report only when enabled; averaged over views
                    gl_loss += loss_gl(target.embedding, fake) / n_views;
                    Vec dv = loss_gl_grad(target.embedding, fake);
                    for (double& v : dv) v /= n_views;
                    student_.backward(dv);
                }
            }
        }
        // phase (b) must not move the discriminator: drop grads accumulated
        // while routing the adversarial gradient through it
        nn::zero_grads(disc_.params());

        rec.loss = make_breakdown(pca_loss, gl_loss, adv_loss, rec.loss.disc, cfg_.lambda);
        require(std::isfinite(rec.loss.total), ErrorKind::Numeric,
                "train_step: non-finite student loss");
        opt_student_.step(sp);
    }

private:
    const TeacherModel& teacher_;
    StudentModel& student_;
    TrainConfig cfg_;
    AugmentConfig aug_;
    PCAProjector pca_;
    std::optional<GLProjector> gl_;
    Discriminator disc_;
    nn::Sgd opt_student_, opt_disc_;
};

struct DistillResult {
    TrainHistory history;
};

// Full distillation loop over seeded shuffled batches. Teacher outputs for
// the (frozen, clean) dataset are computed once up front.
inline DistillResult distill_with(DistillTrainer& trainer, const TeacherModel& teacher,
                                  const std::vector<Tensor>& dataset, const TrainConfig& cfg) {
    require(!dataset.empty(), ErrorKind::Data, "distill: dataset is empty");
    std::vector<TeacherModel::Output> targets;
    targets.reserve(dataset.size());
    for (const Tensor& img : dataset) targets.push_back(teacher.forward(img));

    Rng shuffle_rng(mix_seed(cfg.seed, 0x5bafULL));
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    DistillResult res;
    std::size_t cursor = dataset.size(); // trigger shuffle on first use
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        std::vector<const Tensor*> batch;
        std::vector<const TeacherModel::Output*> tgt;
        for (std::size_t b = 0; b < cfg.batch; ++b) {
            if (cursor >= order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(&dataset[order[cursor]]);
            tgt.push_back(&targets[order[cursor]]);
            ++cursor;
        }
        try {
            res.history.steps.push_back(trainer.train_step(batch, tgt, step));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Numeric)
                throw Error(ErrorKind::Numeric,
                            "distill: step " + std::to_string(step) + ": " + e.what());
            throw;
        }
    }
    return res;
}

inline DistillResult distill(const TeacherModel& teacher, StudentModel& student,
                             const std::vector<Tensor>& dataset, const TrainConfig& cfg,
                             const AugmentConfig& aug) {
    DistillTrainer trainer(teacher, student, cfg, aug);
    return distill_with(trainer, teacher, dataset, cfg);
}

// ---------------------------------------------------------------------------
// Convex reference instance: a fixed linear "teacher" map and a single linear
// student trained with the cosine embedding loss, plain gradient descent.
// Returns the per-step loss trace.

constexpr double kLinearAlignLr = 0.5; // recorded fixed learning rate

inline std::vector<double> linear_alignment_descent(std::uint64_t seed, std::size_t steps,
                                                    double lr = kLinearAlignLr,
                                                    std::size_t dim_in = 8,
                                                    std::size_t dim_out = 8,
                                                    std::size_t n_samples = 16) {
    Rng rng(mix_seed(seed, 0xc0caULL));
    Tensor target_w({dim_out, dim_in});
    for (double& v : target_w.data) v = rng.normal(0.0, 1.0);
    std::vector<Vec> inputs(n_samples, Vec(dim_in));
    for (auto& x : inputs)
        for (double& v : x) v = rng.normal(0.0, 1.0);

    nn::Linear student("linear", dim_in, dim_out);
    student.init(rng);

    std::vector<Vec> targets;
    for (const Vec& x : inputs) {
        Vec y(dim_out, 0.0);
        for (std::size_t o = 0; o < dim_out; ++o)
            for (std::size_t i = 0; i < dim_in; ++i) y[o] += target_w.at(o, i) * x[i];
        targets.push_back(std::move(y));
    }

    nn::Sgd opt(lr);
    std::vector<double> trace;
    for (std::size_t step = 0; step < steps; ++step) {
        nn::zero_grads(student.params());
        double loss = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            Vec pred = student.forward(inputs[s]);
            loss += loss_gl(targets[s], pred) / n_samples;
            Vec g = loss_gl_grad(targets[s], pred);
            for (double& v : g) v /= n_samples;
            student.backward(g);
        }
        trace.push_back(loss);
        opt.step(student.params());
    }
    return trace;
}

} // namespace c4r
