#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "c4r/container.hpp"
#include "c4r/export.hpp"

namespace c4r {

struct QuantizedTensorInfo {
    std::string name;
    float scale = 1.0f;
    double percentile = 100.0;
};

struct QuantizationReport {
    std::vector<QuantizedTensorInfo> tensors;
    double calibration_cosine = 1.0; // mean cos(fp embedding, quantized embedding)
};

namespace detail {

// |x| percentile with linear interpolation between order statistics;
// p = 100 gives the exact maximum.
inline double abs_percentile(const std::vector<double>& values, double p) {
    std::vector<double> mags(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) mags[i] = std::fabs(values[i]);
    std::sort(mags.begin(), mags.end());
    double rank = p / 100.0 * static_cast<double>(mags.size() - 1);
    std::size_t lo = static_cast<std::size_t>(rank);
    std::size_t hi = std::min(lo + 1, mags.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return mags[lo] * (1.0 - frac) + mags[hi] * frac;
}

inline TensorEntry quantize_entry(const TensorEntry& src, double percentile, float& scale_out) {
    Tensor t = src.to_tensor();
    double c = abs_percentile(t.data, percentile);
    float scale = c > 0.0 ? static_cast<float>(c / 32767.0) : 1.0f;
    TensorEntry out;
    out.name = src.name;
    out.dtype = DType::I16;
    out.shape = src.shape;
    out.scale = scale;
    out.payload.resize(t.numel() * 2);
    auto* q = reinterpret_cast<std::int16_t*>(out.payload.data());
    for (std::size_t i = 0; i < t.numel(); ++i) {
        double x = std::clamp(t.data[i], -c, c);
        q[i] = static_cast<std::int16_t>(std::lround(x / scale));
    }
    scale_out = scale;
    return out;
}

// weights are quantized; biases (and any 1-D tensor) stay fp32
inline bool is_quantizable(const TensorEntry& e) {
    return e.shape.size() >= 2 && e.name.size() > 7 &&
           e.name.compare(e.name.size() - 7, 7, ".weight") == 0;
}

inline double mean_embedding_cosine(const ModelContainer& a, const ModelContainer& b,
                                    const std::vector<Tensor>& images) {
    StudentModel ma = load_student(a);
    StudentModel mb = load_student(b);
    double sum = 0.0;
    for (const Tensor& img : images)
        sum += cosine_similarity(ma.forward(img).embedding, mb.forward(img).embedding);
    return sum / static_cast<double>(images.size());
}

} // namespace detail

// Symmetric per-tensor INT16 weight quantization with percentile-clipping
// calibration: for each weight tensor the clipping percentile is chosen from
// the candidate list to maximize the mean embedding cosine on the calibration
// set (evaluated with only that tensor quantized).
inline std::pair<ModelContainer, QuantizationReport> quantize_weights(
    const ModelContainer& fp, const std::vector<Tensor>& calibration_images,
    std::vector<double> percentile_candidates = {100.0, 99.99, 99.9}) {
    require(!calibration_images.empty(), ErrorKind::Data,
            "quantize_weights: calibration set is empty");
    require(!percentile_candidates.empty(), ErrorKind::Data,
            "quantize_weights: no percentile candidates");
    require(fp.meta("checkpoint", "false") == "false", ErrorKind::Data,
            "quantize_weights: expected an exported student, not a checkpoint");

    QuantizationReport report;
    ModelContainer out = fp;
    for (std::size_t ti = 0; ti < fp.tensors.size(); ++ti) {
        const TensorEntry& src = fp.tensors[ti];
        if (!detail::is_quantizable(src)) continue;

        double best_p = percentile_candidates[0];
        double best_cos = -2.0;
        TensorEntry best_entry;
        float best_scale = 1.0f;
        for (double p : percentile_candidates) {
            float scale = 1.0f;
            TensorEntry cand = detail::quantize_entry(src, p, scale);
            ModelContainer probe = fp;
            probe.tensors[ti] = cand;
            double c = detail::mean_embedding_cosine(fp, probe, calibration_images);
            if (c > best_cos) {
                best_cos = c;
                best_p = p;
                best_entry = std::move(cand);
                best_scale = scale;
            }
        }
        out.tensors[ti] = std::move(best_entry);
        report.tensors.push_back({src.name, best_scale, best_p});
    }
    out.metadata["quantized"] = "int16";
    report.calibration_cosine = detail::mean_embedding_cosine(fp, out, calibration_images);
    return {std::move(out), std::move(report)};
}

} // namespace c4r
