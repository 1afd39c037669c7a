// Command-line front end for the distillation pipeline:
// generate / distill / export / curate / embed / label / eval / gradcheck.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "c4r/c4r.hpp"

namespace fs = std::filesystem;
using namespace c4r;

namespace {

Config load_config_opt(const std::string& path) {
    return path.empty() ? Config{} : Config::parse_file(path);
}

std::vector<Tensor> dataset_images(const std::string& dir) {
    return load_dataset_dir(dir).images;
}

std::vector<LabeledImage> labeled_dataset(const std::string& dir, const std::string& labels_csv) {
    LoadedDataset raw = load_dataset_dir(dir);
    LabeledDatasetOnDisk ann =
        labels_csv.empty() ? LabeledDatasetOnDisk{} : load_labels_csv(labels_csv);
    std::vector<LabeledImage> out;
    for (std::size_t i = 0; i < raw.images.size(); ++i) {
        LabeledImage item;
        item.image = std::move(raw.images[i]);
        if (!labels_csv.empty()) {
            auto it = ann.labels.find(raw.filenames[i]);
            if (it != ann.labels.end()) item.labels = it->second;
        } else {
            item.labels = raw.labels[i];
        }
        out.push_back(std::move(item));
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    require(f.good(), ErrorKind::Data, "cannot open for writing: " + path);
    f << text;
    require(f.good(), ErrorKind::Data, "write failed: " + path);
}

int run(int argc, char** argv) {
    CLI::App app{"c4r: cross-architecture distillation, curation, quantization and zero-shot evaluation"};
    app.require_subcommand(0, 1);
    bool print_config = false;
    std::string config_path;
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");
    app.add_option("--config", config_path, "key=value configuration file");

    // ---- generate
    auto* gen = app.add_subcommand("generate", "write a synthetic labeled dataset");
    std::string gen_out;
    SyntheticConfig gen_cfg;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_cfg.seed, "seed");
    gen->add_option("--count", gen_cfg.count, "image count");
    gen->add_option("--classes", gen_cfg.classes, "class count");
    gen->add_option("--size", gen_cfg.image_size, "image side length");

    // ---- distill
    auto* dis = app.add_subcommand("distill", "train the student against the toy teacher");
    std::string dis_data, dis_out, dis_history;
    dis->add_option("--data", dis_data, "dataset directory")->required();
    dis->add_option("--out", dis_out, "checkpoint path")->required();
    dis->add_option("--history", dis_history, "per-step loss CSV");

    // ---- export
    auto* exp = app.add_subcommand("export", "strip projectors and write a deployable model");
    std::string exp_ckpt, exp_out, exp_quant, exp_calib;
    exp->add_option("--ckpt", exp_ckpt, "checkpoint path")->required();
    exp->add_option("--out", exp_out, "model path")->required();
    exp->add_option("--quantize", exp_quant, "quantization mode (int16)");
    exp->add_option("--calib", exp_calib, "calibration dataset directory");

    // ---- curate
    auto* cur = app.add_subcommand("curate", "dedup, neighbor retrieval and k-means grouping");
    std::string cur_embeddings, cur_out;
    double cur_tau = -1.0;
    std::size_t cur_retrieve = 0, cur_kmeans = 0;
    std::uint64_t cur_seed = 0;
    bool cur_seed_set = false;
    cur->add_option("--embeddings", cur_embeddings, "embedding set file")->required();
    cur->add_option("--dedup-tau", cur_tau, "dedup similarity threshold");
    cur->add_option("--retrieve-k", cur_retrieve, "neighbors per kept row");
    cur->add_option("--kmeans-k", cur_kmeans, "group count");
    cur->add_option("--seed", cur_seed, "k-means seed")->each([&](const std::string&) {
        cur_seed_set = true;
    });
    cur->add_option("--out", cur_out, "report path")->required();

    // ---- embed
    auto* emb = app.add_subcommand("embed", "print one image embedding in store format");
    std::string emb_model, emb_image;
    emb->add_option("--model", emb_model, "model container")->required();
    emb->add_option("--image", emb_image, "image file")->required();

    // ---- label
    auto* lab = app.add_subcommand("label", "zero-shot label one image against a query store");
    std::string lab_model, lab_queries, lab_image;
    double lab_threshold = 0.0;
    bool lab_threshold_set = false;
    lab->add_option("--model", lab_model, "model container")->required();
    lab->add_option("--queries", lab_queries, "query store file")->required();
    lab->add_option("--image", lab_image, "image file")->required();
    lab->add_option("--threshold", lab_threshold, "acceptance threshold")
        ->each([&](const std::string&) { lab_threshold_set = true; });

    // ---- eval
    auto* ev = app.add_subcommand("eval", "per-class zero-shot ROC-AUC report");
    std::string ev_model, ev_queries, ev_data, ev_labels, ev_out, ev_plot;
    ev->add_option("--model", ev_model, "model container")->required();
    ev->add_option("--queries", ev_queries, "query store file")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--labels", ev_labels, "labels CSV (defaults to DIR/labels.csv)");
    ev->add_option("--out", ev_out, "report CSV path")->required();
    ev->add_option("--plot", ev_plot, "directory for per-class ROC SVGs");

    // ---- gradcheck
    auto* gc = app.add_subcommand("gradcheck", "verify analytic gradients by finite differences");
    std::uint64_t gc_seed = 1;
    gc->add_option("--seed", gc_seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << std::endl;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help() << std::endl;
        return 1;
    }

    Config cfg = load_config_opt(config_path);
    if (print_config) {
        std::cout << cfg.print();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help() << std::endl;
        return 1;
    }

    if (*gen) {
        gen_cfg.channels = cfg.channels;
        generate_synthetic_to_dir(gen_cfg, gen_out);
        std::cout << "wrote " << gen_cfg.count << " images to " << gen_out << std::endl;
        return 0;
    }

    if (*dis) {
        std::vector<Tensor> images = dataset_images(dis_data);
        TeacherModel teacher(cfg.teacher_config());
        StudentModel student(cfg.student_config());
        DistillTrainer trainer(teacher, student, cfg.train_config(), cfg.augment_config());
        DistillResult res = distill_with(trainer, teacher, images, cfg.train_config());
        ModelContainer ckpt = save_checkpoint(student, &trainer.pca(), trainer.gl(),
                                              &trainer.disc());
        std::size_t bytes = save_container(ckpt, dis_out);
        if (!dis_history.empty()) write_text(dis_history, res.history.to_csv());
        const auto& last = res.history.steps.back().loss;
        std::cout << "trained " << cfg.steps << " steps; final total loss " << last.total
                  << "; checkpoint " << dis_out << " (" << bytes << " bytes)" << std::endl;
        return 0;
    }

    if (*exp) {
        ModelContainer ckpt = load_container(exp_ckpt);
        StudentModel student = load_student(ckpt);
        ModelContainer model = export_student(student);
        if (!exp_quant.empty()) {
            require(exp_quant == "int16", ErrorKind::Usage,
                    "only --quantize int16 is supported");
            require(!exp_calib.empty(), ErrorKind::Usage,
                    "--quantize requires --calib DIR");
            auto [quant, report] =
                quantize_weights(model, dataset_images(exp_calib), cfg.quant_percentiles);
            model = std::move(quant);
            std::cout << "calibration mean cosine " << format_double(report.calibration_cosine)
                      << std::endl;
            for (const auto& t : report.tensors)
                std::cout << t.name << " scale=" << t.scale << " percentile=" << t.percentile
                          << std::endl;
        }
        std::size_t bytes = save_container(model, exp_out);
        std::cout << "wrote " << exp_out << " (" << bytes << " bytes, "
                  << model.tensors.size() << " tensors)" << std::endl;
        return 0;
    }

    if (*cur) {
        EmbeddingSet set = load_embedding_set(cur_embeddings);
        double tau = cur_tau > 0.0 ? cur_tau : cfg.dedup_tau;
        std::size_t rk = cur_retrieve ? cur_retrieve : cfg.retrieve_k;
        std::size_t kk = cur_kmeans ? cur_kmeans : cfg.kmeans_k;
        std::uint64_t seed = cur_seed_set ? cur_seed : cfg.seed;

        std::vector<std::size_t> kept = dedup(set, tau);
        std::ostringstream os;
        os << "# curation report\n";
        os << "input=" << set.size() << " kept=" << kept.size() << " dedup_tau="
           << format_double(tau) << "\n";

        // neighbor retrieval over the full pool, self excluded
        os << "# kept_index\tid\tneighbors(top-" << rk << ")\n";
        for (std::size_t i : kept) {
            auto nbrs = retrieve_neighbors(set.rows[i], set, rk + 1);
            os << i << "\t" << (set.ids.empty() ? std::to_string(i) : set.ids[i]) << "\t";
            std::size_t emitted = 0;
            for (std::size_t n : nbrs) {
                if (n == i) continue;
                if (emitted) os << ",";
                os << n;
                if (++emitted == rk) break;
            }
            os << "\n";
        }

        // group the kept rows (unit-normalized: cosine surrogate)
        EmbeddingSet kept_set;
        for (std::size_t i : kept) kept_set.add(normalized(set.rows[i]));
        std::size_t k = std::min(kk, kept_set.size());
        KMeansResult km = kmeans(kept_set, k, 100, seed);
        os << "# kmeans k=" << k << " inertia=" << format_double(km.inertia) << " iterations="
           << km.iterations << "\n";
        os << "# kept_index\tcluster\n";
        for (std::size_t j = 0; j < kept.size(); ++j)
            os << kept[j] << "\t" << km.assignment[j] << "\n";
        write_text(cur_out, os.str());
        std::cout << "kept " << kept.size() << "/" << set.size() << " rows; " << k
                  << " groups; report " << cur_out << std::endl;
        return 0;
    }

    if (*emb) {
        StudentModel student = load_student(load_container(emb_model));
        Tensor image = load_image(emb_image);
        Vec e = student.forward(image).embedding;
        std::vector<std::pair<std::string, Vec>> rows{
            {fs::path(emb_image).stem().string(), e}};
        save_store_lines(std::cout, e.size(), rows);
        return 0;
    }

    if (*lab) {
        StudentModel student = load_student(load_container(lab_model));
        QueryStore store = load_query_store(lab_queries);
        Vec e = student.forward(load_image(lab_image)).embedding;
        auto scores = match(e, store);
        for (const auto& [label, score] : scores) {
            std::cout << label << "\t" << format_double(score);
            if (lab_threshold_set && score >= lab_threshold) std::cout << "\taccepted";
            std::cout << "\n";
        }
        return 0;
    }

    if (*ev) {
        StudentModel student = load_student(load_container(ev_model));
        QueryStore store = load_query_store(ev_queries);
        std::string labels_csv =
            ev_labels.empty() ? (fs::path(ev_data) / "labels.csv").string() : ev_labels;
        std::vector<LabeledImage> dataset = labeled_dataset(ev_data, labels_csv);
        EmbedFn embed_fn = [&student](const Tensor& img) {
            return student.forward(img).embedding;
        };
        auto table = evaluate_zero_shot(embed_fn, dataset, store);
        for (const auto& row : table)
            if (row.skipped)
                std::cerr << "warning: class " << row.label
                          << " has one-sided labels; AUC skipped" << std::endl;
        write_text(ev_out, report_csv(table));
        if (!ev_plot.empty()) {
            fs::create_directories(ev_plot);
            std::vector<Vec> embs;
            for (const auto& item : dataset) embs.push_back(embed_fn(item.image));
            for (const auto& row : table) {
                if (row.skipped) continue;
                std::vector<double> scores;
                std::vector<int> truth;
                for (std::size_t i = 0; i < dataset.size(); ++i) {
                    scores.push_back(cosine_similarity(embs[i], store.at(row.label)));
                    truth.push_back(dataset[i].labels.count(row.label) ? 1 : 0);
                }
                write_text((fs::path(ev_plot) / (row.label + ".svg")).string(),
                           roc_svg(roc_curve(scores, truth), row.label));
            }
        }
        std::cout << "report " << ev_out << " (" << table.size() << " classes)" << std::endl;
        return 0;
    }

    if (*gc) {
        GradCheckReport report = gradcheck(gc_seed);
        bool ok = true;
        std::printf("%-20s %-12s %s\n", "path", "max_rel_err", "params");
        for (const auto& p : report.paths) {
            std::printf("%-20s %-12.3e %zu  %s\n", p.name.c_str(), p.max_rel_err,
                        p.params_checked, p.max_rel_err < 1e-4 ? "ok" : "FAIL");
            ok = ok && p.max_rel_err < 1e-4;
        }
        std::printf("worst %.3e (%s)\n", report.worst(), ok ? "pass" : "fail");
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
}
