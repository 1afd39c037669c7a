#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "c4r/augment.hpp"
#include "c4r/student.hpp"
#include "c4r/teacher.hpp"
#include "c4r/training.hpp"

namespace c4r {

// Pipeline configuration, read from UTF-8 `key=value` files (# comments).
// Unknown keys are rejected. `print()` emits every key with its current
// value and re-parses to an identical config.
struct Config {
    std::size_t embed_dim = 768;
    std::size_t image_size = 32; // desk scale; 300 mirrors the deployment target
    std::size_t channels = 1;
    double lambda = 0.1;
    std::size_t views = 2;
    std::size_t trainable_suffix = 6;

    std::size_t teacher_patch = 8;
    std::size_t teacher_depth = 2;
    std::size_t teacher_heads = 2;
    std::size_t teacher_dim = 32;
    std::string teacher_pooling = "mean"; // mean | first_token
    std::uint64_t teacher_seed = 7;

    std::vector<std::size_t> student_widths = {8, 16, 32, 32};
    std::vector<std::size_t> student_strides = {2, 2, 2, 1};
    std::size_t student_tap_stage = 2;
    std::size_t student_head_hidden = 64;

    bool use_gl = false;
    std::size_t group_count = 1;
    std::size_t pca_query_dim = 16;
    std::size_t disc_hidden = 32;

    double dedup_tau = 0.95;
    std::size_t retrieve_k = 4;
    std::size_t kmeans_k = 1000;

    double lr_student = 0.02;
    double lr_disc = 0.02;
    std::size_t batch = 16;
    std::size_t steps = 1000;
    std::string optimizer = "sgd"; // sgd | momentum
    double momentum = 0.9;
    std::size_t disc_steps = 1;
    std::uint64_t seed = 1;

    std::vector<double> quant_percentiles = {100.0, 99.99, 99.9};

    double aug_crop_min = 0.7, aug_crop_max = 1.0;
    double aug_mask_min = 0.0, aug_mask_max = 0.25;
    double aug_jitter = 0.2;

    // -- conversions ------------------------------------------------------

    TeacherConfig teacher_config() const {
        TeacherConfig t;
        t.image_size = image_size;
        t.channels = channels;
        t.patch = teacher_patch;
        t.depth = teacher_depth;
        t.heads = teacher_heads;
        t.model_dim = teacher_dim;
        t.embed_dim = embed_dim;
        t.pooling = teacher_pooling == "first_token" ? TokenPooling::FirstToken
                                                     : TokenPooling::Mean;
        t.seed = teacher_seed;
        return t;
    }

    StudentConfig student_config() const {
        StudentConfig s;
        s.image_size = image_size;
        s.channels = channels;
        s.widths = student_widths;
        s.strides = student_strides;
        s.tap_stage = student_tap_stage;
        s.head_hidden = student_head_hidden;
        s.embed_dim = embed_dim;
        s.seed = seed;
        return s;
    }

    TrainConfig train_config() const {
        TrainConfig t;
        t.batch = batch;
        t.steps = steps;
        t.lr_student = lr_student;
        t.lr_disc = lr_disc;
        t.lambda = lambda;
        t.trainable_suffix = trainable_suffix;
        t.momentum = optimizer == "momentum";
        t.momentum_coef = momentum;
        t.disc_steps = disc_steps;
        t.use_gl_projector = use_gl;
        t.gl_groups = group_count;
        t.disc_hidden = disc_hidden;
        t.pca_query_dim = pca_query_dim;
        t.seed = seed;
        return t;
    }

    AugmentConfig augment_config() const {
        AugmentConfig a;
        a.views = views;
        a.crop_min = aug_crop_min;
        a.crop_max = aug_crop_max;
        a.mask_min = aug_mask_min;
        a.mask_max = aug_mask_max;
        a.jitter = aug_jitter;
        a.seed = seed;
        return a;
    }

    // -- parsing ----------------------------------------------------------

    void set(const std::string& key, const std::string& value) {
        auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
        auto as_u64 = [&] { return std::stoull(value); };
        auto as_double = [&] { return std::stod(value); };
        auto as_bool = [&] {
            require(value == "true" || value == "false", ErrorKind::Data,
                    "config: " + key + " must be true or false");
            return value == "true";
        };
        auto as_size_list = [&] {
            std::vector<std::size_t> out;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
            require(!out.empty(), ErrorKind::Data, "config: " + key + " must be nonempty");
            return out;
        };
        auto as_double_list = [&] {
            std::vector<double> out;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
            require(!out.empty(), ErrorKind::Data, "config: " + key + " must be nonempty");
            return out;
        };

        try {
            if (key == "embed_dim") embed_dim = as_size();
            else if (key == "image_size") image_size = as_size();
            else if (key == "channels") channels = as_size();
            else if (key == "lambda") lambda = as_double();
            else if (key == "views") views = as_size();
            else if (key == "trainable_suffix") trainable_suffix = as_size();
            else if (key == "teacher.patch") teacher_patch = as_size();
            else if (key == "teacher.depth") teacher_depth = as_size();
            else if (key == "teacher.heads") teacher_heads = as_size();
            else if (key == "teacher.dim") teacher_dim = as_size();
            else if (key == "teacher.pooling") {
                require(value == "mean" || value == "first_token", ErrorKind::Data,
                        "config: teacher.pooling must be mean or first_token");
                teacher_pooling = value;
            } else if (key == "teacher.seed") teacher_seed = as_u64();
            else if (key == "student.widths") student_widths = as_size_list();
            else if (key == "student.strides") student_strides = as_size_list();
            else if (key == "student.stages") {
                // informational; must agree with the widths list
                require(as_size() == student_widths.size(), ErrorKind::Data,
                        "config: student.stages disagrees with student.widths");
            } else if (key == "student.tap_stage") student_tap_stage = as_size();
            else if (key == "student.head_hidden") student_head_hidden = as_size();
            else if (key == "use_gl") use_gl = as_bool();
            else if (key == "group_count") group_count = as_size();
            else if (key == "pca_query_dim") pca_query_dim = as_size();
            else if (key == "disc_hidden") disc_hidden = as_size();
            else if (key == "dedup_tau") dedup_tau = as_double();
            else if (key == "retrieve_k") retrieve_k = as_size();
            else if (key == "kmeans_k") kmeans_k = as_size();
            else if (key == "lr_student") lr_student = as_double();
            else if (key == "lr_disc") lr_disc = as_double();
            else if (key == "batch") batch = as_size();
            else if (key == "steps") steps = as_size();
            else if (key == "optimizer") {
                require(value == "sgd" || value == "momentum", ErrorKind::Data,
                        "config: optimizer must be sgd or momentum");
                optimizer = value;
            } else if (key == "momentum") momentum = as_double();
            else if (key == "disc_steps") disc_steps = as_size();
            else if (key == "seed") seed = as_u64();
            else if (key == "quant.percentiles") quant_percentiles = as_double_list();
            else if (key == "aug.crop_min") aug_crop_min = as_double();
            else if (key == "aug.crop_max") aug_crop_max = as_double();
            else if (key == "aug.mask_min") aug_mask_min = as_double();
            else if (key == "aug.mask_max") aug_mask_max = as_double();
            else if (key == "aug.jitter") aug_jitter = as_double();
            else
                throw Error(ErrorKind::Data, "config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw Error(ErrorKind::Data, "config: bad value for " + key + ": '" + value + "'");
        } catch (const std::out_of_range&) {
            throw Error(ErrorKind::Data, "config: value out of range for " + key);
        }
    }

    std::string print() const {
        auto sizes = [](const std::vector<std::size_t>& v) {
            std::ostringstream os;
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
            return os.str();
        };
        auto doubles = [](const std::vector<double>& v) {
            std::ostringstream os;
            os << std::setprecision(17);
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
            return os.str();
        };
        std::ostringstream os;
        os << std::setprecision(17);
        os << "embed_dim=" << embed_dim << "\n";
        os << "image_size=" << image_size << "\n";
        os << "channels=" << channels << "\n";
        os << "lambda=" << lambda << "\n";
        os << "views=" << views << "\n";
        os << "trainable_suffix=" << trainable_suffix << "\n";
        os << "teacher.patch=" << teacher_patch << "\n";
        os << "teacher.depth=" << teacher_depth << "\n";
        os << "teacher.heads=" << teacher_heads << "\n";
        os << "teacher.dim=" << teacher_dim << "\n";
        os << "teacher.pooling=" << teacher_pooling << "\n";
        os << "teacher.seed=" << teacher_seed << "\n";
        os << "student.widths=" << sizes(student_widths) << "\n";
        os << "student.strides=" << sizes(student_strides) << "\n";
        os << "student.tap_stage=" << student_tap_stage << "\n";
        os << "student.head_hidden=" << student_head_hidden << "\n";
        os << "use_gl=" << (use_gl ? "true" : "false") << "\n";
        os << "group_count=" << group_count << "\n";
        os << "pca_query_dim=" << pca_query_dim << "\n";
        os << "disc_hidden=" << disc_hidden << "\n";
        os << "dedup_tau=" << dedup_tau << "\n";
        os << "retrieve_k=" << retrieve_k << "\n";
        os << "kmeans_k=" << kmeans_k << "\n";
        os << "lr_student=" << lr_student << "\n";
        os << "lr_disc=" << lr_disc << "\n";
        os << "batch=" << batch << "\n";
        os << "steps=" << steps << "\n";
        os << "optimizer=" << optimizer << "\n";
        os << "momentum=" << momentum << "\n";
        os << "disc_steps=" << disc_steps << "\n";
        os << "seed=" << seed << "\n";
        os << "quant.percentiles=" << doubles(quant_percentiles) << "\n";
        os << "aug.crop_min=" << aug_crop_min << "\n";
        os << "aug.crop_max=" << aug_crop_max << "\n";
        os << "aug.mask_min=" << aug_mask_min << "\n";
        os << "aug.mask_max=" << aug_mask_max << "\n";
        os << "aug.jitter=" << aug_jitter << "\n";
        return os.str();
    }

    static Config parse_text(const std::string& text, const std::string& origin = "<config>") {
        Config cfg;
        std::istringstream is(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            // trim
            auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            auto e = line.find_last_not_of(" \t\r");
            line = line.substr(b, e - b + 1);
            std::size_t eq = line.find('=');
            require(eq != std::string::npos, ErrorKind::Data,
                    origin + ":" + std::to_string(lineno) + ": expected key=value");
            cfg.set(line.substr(0, eq), line.substr(eq + 1));
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream f(path);
        require(f.good(), ErrorKind::Data, "cannot open config: " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse_text(ss.str(), path);
    }
};

} // namespace c4r
