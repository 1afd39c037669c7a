#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

#include "c4r/error.hpp"

namespace c4r {

// Dense row-major array of doubles with shape metadata. The universal
// carrier for images, feature maps and weights.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(numel_of(shape), fill) {}

    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        require(data.size() == numel_of(shape), ErrorKind::Data,
                "tensor data length does not match shape");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t dim : s) {
            require(dim > 0, ErrorKind::Data, "tensor dimensions must be positive");
            n *= dim;
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t ndim() const { return shape.size(); }

    // 2-D accessors (rows x cols)
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // 3-D accessors (channels x height x width)
    double& at(std::size_t ch, std::size_t y, std::size_t x) {
        return data[(ch * shape[1] + y) * shape[2] + x];
    }
    double at(std::size_t ch, std::size_t y, std::size_t x) const {
        return data[(ch * shape[1] + y) * shape[2] + x];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void check_finite(const char* what = "tensor") const {
        for (double v : data)
            require(std::isfinite(v), ErrorKind::Numeric,
                    std::string(what) + " contains a non-finite value");
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// Checked constructor used on external inputs: rejects NaN/Inf up front.
inline Tensor make_checked(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    t.check_finite();
    return t;
}

// Embeddings are plain vectors of length d_e in the shared alignment space.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double cosine_similarity(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), ErrorKind::Data,
            "cosine_similarity: dimension mismatch");
    double na = norm(a), nb = norm(b);
    require(na > 0.0 && nb > 0.0, ErrorKind::Numeric,
            "cosine_similarity: zero-norm input");
    double c = dot(a, b) / (na * nb);
    // guard tiny floating overshoot
    return std::clamp(c, -1.0, 1.0);
}

inline Vec normalized(const Vec& a) {
    double n = norm(a);
    require(n > 0.0, ErrorKind::Numeric, "cannot normalize a zero vector");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / n;
    return out;
}

// Row-stabilized softmax over a (rows x cols) matrix.
inline Tensor softmax_rows(const Tensor& m) {
    require(m.ndim() == 2, ErrorKind::Data, "softmax_rows expects a matrix");
    m.check_finite("softmax input");
    Tensor out(m.shape);
    const std::size_t rows = m.shape[0], cols = m.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = m.at(r, 0);
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, m.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double e = std::exp(m.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= sum;
    }
    return out;
}

// Sum of squared entrywise differences.
inline double frobenius_sq_distance(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), ErrorKind::Data,
            "frobenius_sq_distance: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s;
}

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

} // namespace c4r
