#pragma once

#include <sstream>
#include <string>

#include "c4r/container.hpp"
#include "c4r/discriminator.hpp"
#include "c4r/projectors.hpp"
#include "c4r/student.hpp"

namespace c4r {

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

inline std::vector<std::size_t> split_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
    return out;
}

inline void echo_student_config(ModelContainer& c, const StudentConfig& cfg) {
    c.metadata["embed_dim"] = std::to_string(cfg.embed_dim);
    c.metadata["image_size"] = std::to_string(cfg.image_size);
    c.metadata["channels"] = std::to_string(cfg.channels);
    c.metadata["student.widths"] = join_sizes(cfg.widths);
    c.metadata["student.strides"] = join_sizes(cfg.strides);
    c.metadata["student.tap_stage"] = std::to_string(cfg.tap_stage);
    c.metadata["student.head_hidden"] = std::to_string(cfg.head_hidden);
}

inline StudentConfig student_config_from_meta(const ModelContainer& c) {
    StudentConfig cfg;
    cfg.embed_dim = std::stoul(c.meta("embed_dim", "768"));
    cfg.image_size = std::stoul(c.meta("image_size", "32"));
    cfg.channels = std::stoul(c.meta("channels", "1"));
    cfg.widths = split_sizes(c.meta("student.widths", "8,16,32,32"));
    cfg.strides = split_sizes(c.meta("student.strides", "2,2,2,1"));
    cfg.tap_stage = std::stoul(c.meta("student.tap_stage", "2"));
    cfg.head_hidden = std::stoul(c.meta("student.head_hidden", "64"));
    return cfg;
}

} // namespace detail

// Deployable container: backbone + head only. Projector and discriminator
// tensors never appear here.
inline ModelContainer export_student(StudentModel& student, DType dtype = DType::F32) {
    ModelContainer c;
    for (nn::Param* p : student.params())
        c.add(TensorEntry::from_tensor(p->name, p->value, dtype));
    detail::echo_student_config(c, student.config());
    c.metadata["checkpoint"] = "false";
    c.metadata["format"] = "c4r-student";
    return c;
}

// Training checkpoint: student plus projectors and discriminator, stored at
// full precision so a resumed run is bit-exact.
inline ModelContainer save_checkpoint(StudentModel& student, PCAProjector* pca,
                                      GLProjector* gl, Discriminator* disc) {
    ModelContainer c;
    for (nn::Param* p : student.params())
        c.add(TensorEntry::from_tensor(p->name, p->value, DType::F64));
    auto add_all = [&c](nn::ParamRefs ps) {
        for (nn::Param* p : ps) c.add(TensorEntry::from_tensor(p->name, p->value, DType::F64));
    };
    if (pca) add_all(pca->params());
    if (gl) add_all(gl->params());
    if (disc) add_all(disc->params());
    detail::echo_student_config(c, student.config());
    c.metadata["checkpoint"] = "true";
    c.metadata["format"] = "c4r-student";
    return c;
}

// Rebuild a student from a container (exported model or checkpoint);
// int16 tensors are dequantized here.
inline StudentModel load_student(const ModelContainer& c) {
    require(c.meta("format") == "c4r-student", ErrorKind::Data,
            "container does not hold a student model");
    StudentModel model(detail::student_config_from_meta(c));
    for (nn::Param* p : model.params()) {
        Tensor t = c.get(p->name).to_tensor();
        require(t.shape == p->value.shape, ErrorKind::Data,
                "container tensor " + p->name + " has shape " + shape_str(t.shape) +
                    ", expected " + shape_str(p->value.shape));
        p->value = std::move(t);
    }
    return model;
}

// Restore projector / discriminator weights from a checkpoint container.
inline void load_params(const ModelContainer& c, nn::ParamRefs params) {
    for (nn::Param* p : params) {
        Tensor t = c.get(p->name).to_tensor();
        require(t.shape == p->value.shape, ErrorKind::Data,
                "checkpoint tensor " + p->name + " shape mismatch");
        p->value = std::move(t);
    }
}

} // namespace c4r
