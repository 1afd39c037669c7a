#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "c4r/rng.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

// Minimal uncompressed raster format (.c4i), little-endian:
//   magic "C4IM" | width u32 | height u32 | channels u32
//   | float32 payload, channel-major (c, y, x)
inline void save_image(const Tensor& image, const std::string& path) {
    require(image.ndim() == 3, ErrorKind::Data, "save_image: expected (C x H x W)");
    std::ofstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Data, "cannot open for writing: " + path);
    f.write("C4IM", 4);
    std::uint32_t dims[3] = {static_cast<std::uint32_t>(image.shape[2]),
                             static_cast<std::uint32_t>(image.shape[1]),
                             static_cast<std::uint32_t>(image.shape[0])};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    std::vector<float> payload(image.numel());
    for (std::size_t i = 0; i < image.numel(); ++i)
        payload[i] = static_cast<float>(image.data[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * 4));
    require(f.good(), ErrorKind::Data, "write failed: " + path);
}

inline Tensor load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Data, "cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    require(f.gcount() == 4 && std::memcmp(magic, "C4IM", 4) == 0, ErrorKind::Data,
            path + ": not a c4r image (bad magic)");
    std::uint32_t dims[3];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    require(f.gcount() == sizeof(dims), ErrorKind::Data, path + ": truncated header");
    std::size_t w = dims[0], h = dims[1], c = dims[2];
    require(w > 0 && h > 0 && c > 0, ErrorKind::Data, path + ": bad dimensions");
    std::vector<float> payload(w * h * c);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * 4));
    require(static_cast<std::size_t>(f.gcount()) == payload.size() * 4, ErrorKind::Data,
            path + ": truncated payload");
    Tensor t({c, h, w});
    for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = payload[i];
    t.check_finite("image");
    return t;
}

// Labels file: CSV with header `filename,class`, one row per (image, class)
// pair so multi-label images are representable.
struct LabeledDatasetOnDisk {
    std::vector<std::string> filenames; // unique, in first-appearance order
    std::map<std::string, std::set<std::string>> labels;
};

inline LabeledDatasetOnDisk load_labels_csv(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::Data, "cannot open: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), ErrorKind::Data, path + ": empty file");
    require(line == "filename,class", ErrorKind::Data,
            path + ": expected header 'filename,class'");
    LabeledDatasetOnDisk ds;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        require(comma != std::string::npos && comma > 0 && comma + 1 < line.size(),
                ErrorKind::Data, path + ":" + std::to_string(lineno) + ": malformed row");
        std::string file = line.substr(0, comma);
        std::string cls = line.substr(comma + 1);
        if (!ds.labels.count(file)) ds.filenames.push_back(file);
        ds.labels[file].insert(cls);
    }
    return ds;
}

inline void save_labels_csv(const LabeledDatasetOnDisk& ds, const std::string& path) {
    std::ofstream f(path);
    require(f.good(), ErrorKind::Data, "cannot open for writing: " + path);
    f << "filename,class\n";
    for (const auto& file : ds.filenames)
        for (const auto& cls : ds.labels.at(file)) f << file << "," << cls << "\n";
}

// ---------------------------------------------------------------------------
// Synthetic fixture: class-conditional oriented gratings plus seeded noise.

struct SyntheticConfig {
    std::uint64_t seed = 1;
    std::size_t count = 512;
    std::size_t classes = 4;
    std::size_t image_size = 32;
    std::size_t channels = 1;

    void validate() const {
        require(classes >= 2 && count >= classes, ErrorKind::Data,
                "synthetic: need n >= classes >= 2");
    }
};

struct SyntheticSample {
    Tensor image;
    std::size_t class_id;
};

inline SyntheticSample synthetic_sample(const SyntheticConfig& cfg, std::size_t index) {
    const std::size_t cls = index % cfg.classes;
    Rng rng(mix_seed(cfg.seed, 0x5d1ULL, index));
    const double S = static_cast<double>(cfg.image_size);
    // Each class gets a brightened vertical band (strong localized signature)
    // on top of a class-keyed grating; phase and noise vary per image.
    const double base =
        0.2 * ((static_cast<double>(cls) + 1.0) / (static_cast<double>(cfg.classes) + 1.0) - 0.5);
    const double freq = 2.0 + 2.0 * static_cast<double>(cls);
    const double theta = M_PI * static_cast<double>(cls) / static_cast<double>(cfg.classes);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    Tensor img({cfg.channels, cfg.image_size, cfg.image_size});
    for (std::size_t c = 0; c < cfg.channels; ++c)
        for (std::size_t y = 0; y < cfg.image_size; ++y)
            for (std::size_t x = 0; x < cfg.image_size; ++x) {
                std::size_t band = x * cfg.classes / cfg.image_size;
                double u = (x * std::cos(theta) + y * std::sin(theta)) / S;
                double v = base + (band == cls ? 1.2 : -0.4) +
                           0.6 * std::sin(2.0 * M_PI * freq * u + phase) +
                           0.05 * rng.normal();
                img.at(c, y, x) = v;
            }
    return {std::move(img), cls};
}

inline std::vector<SyntheticSample> generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    std::vector<SyntheticSample> out;
    out.reserve(cfg.count);
    for (std::size_t i = 0; i < cfg.count; ++i) out.push_back(synthetic_sample(cfg, i));
    return out;
}

// writes images plus labels.csv into out_dir
inline void generate_synthetic_to_dir(const SyntheticConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec && fs::is_directory(out_dir), ErrorKind::Data,
            "cannot create directory: " + out_dir);
    LabeledDatasetOnDisk ds;
    for (std::size_t i = 0; i < cfg.count; ++i) {
        SyntheticSample s = synthetic_sample(cfg, i);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05zu.c4i", i);
        save_image(s.image, (fs::path(out_dir) / name).string());
        ds.filenames.push_back(name);
        ds.labels[name].insert("class" + std::to_string(s.class_id));
    }
    save_labels_csv(ds, (fs::path(out_dir) / "labels.csv").string());
}

// loads every image listed in dir/labels.csv, in CSV order
struct LoadedDataset {
    std::vector<std::string> filenames;
    std::vector<Tensor> images;
    std::vector<std::set<std::string>> labels;
};

inline LoadedDataset load_dataset_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    LabeledDatasetOnDisk ds = load_labels_csv((fs::path(dir) / "labels.csv").string());
    LoadedDataset out;
    for (const auto& name : ds.filenames) {
        out.filenames.push_back(name);
        out.images.push_back(load_image((fs::path(dir) / name).string()));
        out.labels.push_back(ds.labels.at(name));
    }
    return out;
}

} // namespace c4r
