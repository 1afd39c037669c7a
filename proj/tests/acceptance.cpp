// End-to-end acceptance checks. Each test prints one pass/fail line so the
// log doubles as a release checklist.

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "c4r/c4r.hpp"

using namespace c4r;

namespace {

void report(int criterion, const std::string& what, bool ok) {
    std::printf("[criterion %d] %s: %s\n", criterion, what.c_str(), ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    EXPECT_TRUE(ok) << what;
}

// ---- dense oracles -------------------------------------------------------

Tensor oracle_conv3x3(const Tensor& in, const Tensor& w, const Tensor& b) {
    const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2], O = w.shape[0];
    Tensor out({O, H, W});
    for (std::size_t o = 0; o < O; ++o)
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                double acc = b.data[o];
                for (std::size_t c = 0; c < C; ++c)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            int yy = static_cast<int>(y) + dy, xx = static_cast<int>(x) + dx;
                            if (yy < 0 || xx < 0 || yy >= static_cast<int>(H) ||
                                xx >= static_cast<int>(W))
                                continue;
                            std::size_t wi = ((o * C + c) * 3 + static_cast<std::size_t>(dy + 1)) *
                                                 3 +
                                             static_cast<std::size_t>(dx + 1);
                            acc += in.at(c, yy, xx) * w.data[wi];
                        }
                out.at(o, y, x) = acc;
            }
    return out;
}

Tensor oracle_tokens(const Tensor& m) {
    const std::size_t C = m.shape[0], S = m.shape[1];
    Tensor t({S * S, C});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = 0; y < S; ++y)
            for (std::size_t x = 0; x < S; ++x) t.at(y * S + x, c) = m.at(c, y, x);
    return t;
}

Tensor oracle_attention(const Tensor& q, const Tensor& k, const Tensor& v, double scale) {
    const std::size_t N = q.shape[0], d = q.shape[1], dv = v.shape[1];
    Tensor out({N, dv});
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> logits(N, 0.0);
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t c = 0; c < d; ++c) logits[j] += q.at(i, c) * k.at(j, c) * scale;
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& l : logits) z += (l = std::exp(l - mx));
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t c = 0; c < dv; ++c) out.at(i, c) += logits[j] / z * v.at(j, c);
    }
    return out;
}

double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

std::vector<Tensor> param_values(const nn::ParamRefs& ps) {
    std::vector<Tensor> out;
    for (nn::Param* p : ps) out.push_back(p->value);
    return out;
}

bool bit_identical(const nn::ParamRefs& ps, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < ps.size(); ++i)
        if (ps[i]->value.data != snap[i].data) return false;
    return true;
}

// small config shared by the fast training-path criteria
Config tiny_config() {
    Config cfg;
    cfg.image_size = 16;
    cfg.embed_dim = 16;
    cfg.teacher_patch = 8;
    cfg.teacher_dim = 16;
    cfg.student_head_hidden = 16;
    cfg.batch = 4;
    cfg.disc_hidden = 8;
    cfg.pca_query_dim = 4;
    return cfg;
}

} // namespace

TEST(Acceptance, C1GradientSuite) {
    auto t0 = std::chrono::steady_clock::now();
    GradCheckReport rep = gradcheck(1);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = rep.paths.size() == 5 && rep.all_below(1e-4) && secs < 60.0;
    report(1, "analytic vs finite-difference gradients on all loss paths, < 60 s", ok);
}

TEST(Acceptance, C2AttentionOracle) {
    Rng rng(101);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        std::size_t side = 1 + rng.uniform_index(4); // up to 16 tokens
        std::size_t C = 1 + rng.uniform_index(4);
        std::size_t qd = 1 + rng.uniform_index(4);
        std::size_t vd = 1 + rng.uniform_index(4);
        PCAProjector pca(C, qd, vd, side, rng.uniform_index(1u << 20));
        Tensor tap({C, side, side});
        for (double& v : tap.data) v = rng.normal();

        std::map<std::string, const Tensor*> named;
        for (nn::Param* p : pca.params()) named[p->name] = &p->value;
        double scale = 1.0 / std::sqrt(static_cast<double>(qd));
        Tensor q = oracle_tokens(oracle_conv3x3(tap, *named.at("pca.q.weight"),
                                                *named.at("pca.q.bias")));
        Tensor k = oracle_tokens(oracle_conv3x3(tap, *named.at("pca.k.weight"),
                                                *named.at("pca.k.bias")));
        Tensor v = oracle_tokens(oracle_conv3x3(tap, *named.at("pca.v.weight"),
                                                *named.at("pca.v.bias")));
        Tensor want = oracle_attention(q, k, v, scale);
        Tensor got = pca.forward(tap);
        for (std::size_t i = 0; i < want.numel(); ++i)
            ok = ok && std::fabs(want.data[i] - got.data[i]) <= 1e-6;
    }
    report(2, "pca projector matches the dense attention oracle on 100 instances", ok);
}

TEST(Acceptance, C3AucOracle) {
    Rng rng(103);
    bool ok = auc({0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}) == 0.75;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::size_t n = 4 + rng.uniform_index(60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::round(rng.uniform(0.0, 6.0)); // plenty of ties
            labels[i] = rng.uniform() < 0.5;
        }
        labels[0] = 1;
        labels[1] = 0;
        ok = ok && std::fabs(auc(scores, labels) - pairwise_auc(scores, labels)) <= 1e-9;
    }
    report(3, "trapezoidal AUC equals the pairwise statistic on 200 sets", ok);
}

TEST(Acceptance, C4ConvexConvergence) {
    auto trace = linear_alignment_descent(1, 1000);
    bool ok = !trace.empty();
    bool reached = false;
    for (double v : trace) reached = reached || v <= 0.01;
    ok = ok && reached;
    report(4, "linear teacher/student cosine loss reaches 0.01 within 1000 steps", ok);
}

TEST(Acceptance, C5DeskScaleDistillation) {
    SyntheticConfig syn;
    syn.seed = 11;
    syn.count = 512;
    syn.classes = 4;
    auto samples = generate_synthetic(syn);

    Config cfg;
    cfg.embed_dim = 64;
    cfg.steps = 1000;
    cfg.lr_student = 0.02;
    cfg.lr_disc = 0.05;
    cfg.batch = 16;
    cfg.seed = 5;
    TeacherModel teacher(cfg.teacher_config());
    StudentModel student(cfg.student_config());

    std::vector<Tensor> train_images;
    for (std::size_t i = 0; i < 448; ++i) train_images.push_back(samples[i].image);
    distill(teacher, student, train_images, cfg.train_config(), cfg.augment_config());

    double mean_cos = 0.0;
    for (std::size_t i = 448; i < samples.size(); ++i)
        mean_cos += cosine_similarity(teacher.forward(samples[i].image).embedding,
                                      student.forward(samples[i].image).embedding);
    mean_cos /= static_cast<double>(samples.size() - 448);

    // teacher-derived query store, shared by both models
    EmbedFn teacher_fn = [&](const Tensor& img) { return teacher.forward(img).embedding; };
    std::map<std::string, std::vector<Tensor>> exemplars;
    for (std::size_t i = 0; i < 32; ++i)
        exemplars["class" + std::to_string(samples[i].class_id)].push_back(samples[i].image);
    QueryStore store = queries_from_exemplars(teacher_fn, exemplars);

    double max_diff = 0.0;
    for (std::size_t cls = 0; cls < syn.classes; ++cls) {
        const Vec& q = store.at("class" + std::to_string(cls));
        std::vector<double> st, ss;
        std::vector<int> labels;
        for (std::size_t i = 256; i < samples.size(); ++i) {
            st.push_back(cosine_similarity(teacher.forward(samples[i].image).embedding, q));
            ss.push_back(cosine_similarity(student.forward(samples[i].image).embedding, q));
            labels.push_back(samples[i].class_id == cls);
        }
        max_diff = std::max(max_diff, std::fabs(auc(st, labels) - auc(ss, labels)));
    }

    std::printf("    heldout mean cosine %.4f, max per-class AUC gap %.4f\n", mean_cos, max_diff);
    report(5, "desk-scale run: heldout cosine >= 0.9 and AUC gap <= 0.05",
           mean_cos >= 0.9 && max_diff <= 0.05);
}

TEST(Acceptance, C6AlternationIsolation) {
    Config cfg = tiny_config();
    TeacherModel teacher(cfg.teacher_config());
    StudentModel student(cfg.student_config());
    DistillTrainer trainer(teacher, student, cfg.train_config(), cfg.augment_config());

    Rng rng(107);
    std::vector<Tensor> data;
    std::vector<TeacherModel::Output> targets;
    for (int i = 0; i < 8; ++i) {
        Tensor img({1, 16, 16});
        for (double& v : img.data) v = rng.normal();
        targets.push_back(teacher.forward(img));
        data.push_back(std::move(img));
    }
    std::vector<const Tensor*> batch;
    std::vector<const TeacherModel::Output*> tgt;
    for (std::size_t i = 0; i < 4; ++i) {
        batch.push_back(&data[i]);
        tgt.push_back(&targets[i]);
    }

    bool ok = true;
    for (std::size_t step = 0; step < 100 && ok; ++step) {
        StepRecord rec;
        auto student_snap = param_values(trainer.student_side_params());
        trainer.update_discriminator(batch, tgt, step, rec);
        ok = ok && bit_identical(trainer.student_side_params(), student_snap);

        auto disc_snap = param_values(trainer.disc().params());
        trainer.update_student(batch, tgt, step, rec);
        ok = ok && bit_identical(trainer.disc().params(), disc_snap);
    }
    report(6, "100 steps: each phase leaves the other side bit-identical", ok);
}

TEST(Acceptance, C7ExportAndQuantization) {
    StudentConfig scfg;
    scfg.image_size = 32;
    scfg.embed_dim = 32;
    scfg.head_hidden = 64;
    scfg.seed = 2;
    StudentModel student(scfg);

    TeacherConfig tcfg;
    tcfg.embed_dim = 32;
    TeacherModel teacher(tcfg);
    PCAProjector pca(scfg.tap_channels(), 8, tcfg.value_dim(), tcfg.tokens_per_side(), 3);
    Discriminator disc(scfg.embed_dim, 16, 4);

    ModelContainer ckpt = save_checkpoint(student, &pca, nullptr, &disc);
    bool had_training_tensors = false;
    for (const auto& t : ckpt.tensors)
        had_training_tensors = had_training_tensors || t.name.rfind("pca.", 0) == 0 ||
                               t.name.rfind("disc.", 0) == 0;

    ModelContainer fp = export_student(student);
    bool stripped = had_training_tensors;
    for (const auto& t : fp.tensors)
        stripped = stripped && t.name.rfind("pca.", 0) != 0 && t.name.rfind("gl.", 0) != 0 &&
                   t.name.rfind("disc.", 0) != 0;

    std::string bytes = serialize_container(fp);
    ModelContainer back = parse_container(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                          bytes.size());
    bool roundtrip = serialize_container(back) == bytes;

    SyntheticConfig syn;
    syn.seed = 21;
    syn.count = 64;
    std::vector<Tensor> calib;
    for (const auto& s : generate_synthetic(syn)) calib.push_back(s.image);
    auto [quant, qrep] = quantize_weights(fp, calib);

    bool bounded = true;
    for (const auto& t : quant.tensors) {
        if (t.dtype != DType::I16) continue;
        Tensor deq = t.to_tensor();
        Tensor orig = fp.get(t.name).to_tensor();
        double clip = static_cast<double>(t.scale) * 32767.0;
        for (std::size_t i = 0; i < orig.numel(); ++i) {
            if (std::fabs(orig.data[i]) > clip) continue; // clipped by the percentile
            bounded = bounded &&
                      std::fabs(orig.data[i] - deq.data[i]) <= t.scale / 2.0 + 1e-12;
        }
    }

    double ratio = static_cast<double>(quant.payload_bytes()) /
                   static_cast<double>(fp.payload_bytes());
    bool ok = stripped && roundtrip && bounded && qrep.calibration_cosine >= 0.99 &&
              std::fabs(ratio - 0.5) <= 0.05;
    std::printf("    calibration cosine %.5f, payload ratio %.3f\n", qrep.calibration_cosine,
                ratio);
    report(7, "export strips projectors; container + int16 round-trips hold", ok);
}

TEST(Acceptance, C8Curation) {
    Rng rng(109);
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        EmbeddingSet s;
        std::size_t n = 2 + rng.uniform_index(30);
        for (std::size_t i = 0; i < n; ++i) {
            Vec v(4);
            for (double& x : v) x = rng.normal();
            s.add(std::move(v));
        }
        double tau = rng.uniform(0.3, 1.0);
        auto kept = dedup(s, tau);
        EmbeddingSet reduced;
        for (std::size_t i : kept) reduced.add(s.rows[i]);
        auto again = dedup(reduced, tau);
        ok = ok && again.size() == kept.size();
        for (std::size_t i = 0; ok && i < again.size(); ++i) ok = ok && again[i] == i;

        // kmeans asserts inertia non-increase internally on every iteration
        try {
            kmeans(reduced, std::min<std::size_t>(3, reduced.size()), 50, trial);
        } catch (const Error&) {
            ok = false;
        }
    }

    EmbeddingSet line;
    for (double v : {0.0, 1.0, 9.0, 10.0}) line.add({v});
    KMeansResult r = kmeans(line, 2, 100, 0);
    std::vector<double> c{r.centroids[0][0], r.centroids[1][0]};
    std::sort(c.begin(), c.end());
    ok = ok && c[0] == 0.5 && c[1] == 9.5;
    report(8, "dedup idempotence, kmeans monotonicity, exact 1-D split", ok);
}

TEST(Acceptance, C9Determinism) {
    auto run_pipeline = [](std::string& history_csv, std::string& container_bytes,
                           std::string& eval_csv) {
        SyntheticConfig syn;
        syn.seed = 3;
        syn.count = 24;
        syn.classes = 3;
        syn.image_size = 16;
        auto samples = generate_synthetic(syn);
        std::vector<Tensor> images;
        for (const auto& s : samples) images.push_back(s.image);

        Config cfg = tiny_config();
        cfg.steps = 5;
        TeacherModel teacher(cfg.teacher_config());
        StudentModel student(cfg.student_config());
        DistillResult res =
            distill(teacher, student, images, cfg.train_config(), cfg.augment_config());
        history_csv = res.history.to_csv();
        container_bytes = serialize_container(export_student(student));

        EmbedFn fn = [&](const Tensor& img) { return student.forward(img).embedding; };
        std::map<std::string, std::vector<Tensor>> exemplars;
        std::vector<LabeledImage> eval_set;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            std::string cls = "class" + std::to_string(samples[i].class_id);
            if (i < 6) exemplars[cls].push_back(samples[i].image);
            else eval_set.push_back({samples[i].image, {cls}});
        }
        QueryStore store = queries_from_exemplars(fn, exemplars);
        eval_csv = report_csv(evaluate_zero_shot(fn, eval_set, store));
    };

    std::string h1, c1, e1, h2, c2, e2;
    run_pipeline(h1, c1, e1);
    run_pipeline(h2, c2, e2);
    bool ok = h1 == h2 && c1 == c2 && e1 == e2 && !h1.empty() && !c1.empty() && !e1.empty();
    report(9, "identical seeds give bitwise-identical history, container and report", ok);
}
