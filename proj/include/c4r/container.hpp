#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "c4r/tensor.hpp"

namespace c4r {

// Portable named-tensor archive. Byte layout (little-endian):
//   magic "C4RF" | version u32 | tensor_count u32
//   per tensor: name_len u16 | name | dtype u8 | ndim u8 | dims u32*ndim
//               | scale f32 (int16 only) | raw row-major payload
//   metadata_len u32 | UTF-8 key=value lines
enum class DType : std::uint8_t { F32 = 0, I16 = 1, F64 = 2 };

inline std::size_t dtype_size(DType t) {
    switch (t) {
        case DType::F32: return 4;
        case DType::I16: return 2;
        case DType::F64: return 8;
    }
    throw Error(ErrorKind::Data, "unknown dtype");
}

struct TensorEntry {
    std::string name;
    DType dtype = DType::F32;
    std::vector<std::size_t> shape;
    float scale = 1.0f; // int16 only: x ~ scale * q
    std::vector<std::uint8_t> payload;

    std::size_t numel() const { return Tensor::numel_of(shape); }

    static TensorEntry from_tensor(const std::string& name, const Tensor& t,
                                   DType dtype = DType::F32) {
        TensorEntry e;
        e.name = name;
        e.dtype = dtype;
        e.shape = t.shape;
        e.payload.resize(t.numel() * dtype_size(dtype));
        if (dtype == DType::F32) {
            auto* p = reinterpret_cast<float*>(e.payload.data());
            for (std::size_t i = 0; i < t.numel(); ++i) p[i] = static_cast<float>(t.data[i]);
        } else if (dtype == DType::F64) {
            std::memcpy(e.payload.data(), t.data.data(), t.numel() * 8);
        } else {
            throw Error(ErrorKind::Data, "int16 entries are produced by quantization");
        }
        return e;
    }

    // dequantized double-precision view
    Tensor to_tensor() const {
        Tensor t(shape);
        if (dtype == DType::F32) {
            auto* p = reinterpret_cast<const float*>(payload.data());
            for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = p[i];
        } else if (dtype == DType::F64) {
            std::memcpy(t.data.data(), payload.data(), t.numel() * 8);
        } else {
            auto* p = reinterpret_cast<const std::int16_t*>(payload.data());
            for (std::size_t i = 0; i < t.numel(); ++i)
                t.data[i] = static_cast<double>(scale) * p[i];
        }
        return t;
    }
};

struct ModelContainer {
    std::uint32_t version = 1;
    std::vector<TensorEntry> tensors;
    std::map<std::string, std::string> metadata;

    const TensorEntry* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }

    const TensorEntry& get(const std::string& name) const {
        const TensorEntry* e = find(name);
        require(e != nullptr, ErrorKind::Data, "container: missing tensor " + name);
        return *e;
    }

    void add(TensorEntry e) {
        require(find(e.name) == nullptr, ErrorKind::Data,
                "container: duplicate tensor name " + e.name);
        tensors.push_back(std::move(e));
    }

    std::string meta(const std::string& key, const std::string& fallback = "") const {
        auto it = metadata.find(key);
        return it == metadata.end() ? fallback : it->second;
    }

    std::size_t payload_bytes() const {
        std::size_t n = 0;
        for (const auto& t : tensors) n += t.payload.size();
        return n;
    }
};

namespace detail {

inline void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
}
template <typename T>
void put(std::string& out, T v) {
    put_bytes(out, &v, sizeof(T)); // little-endian host assumed
}

struct Reader {
    const std::uint8_t* p;
    std::size_t size;
    std::size_t off = 0;
    std::string context;

    void need(std::size_t n, const std::string& what) {
        require(off + n <= size, ErrorKind::Data,
                "container truncated at byte " + std::to_string(off) + " while reading " + what +
                    (context.empty() ? "" : " (tensor " + context + ")"));
    }
    template <typename T>
    T get(const std::string& what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, p + off, sizeof(T));
        off += sizeof(T);
        return v;
    }
    std::vector<std::uint8_t> raw(std::size_t n, const std::string& what) {
        need(n, what);
        std::vector<std::uint8_t> v(p + off, p + off + n);
        off += n;
        return v;
    }
};

} // namespace detail

inline std::string serialize_container(const ModelContainer& c) {
    std::string out;
    out += "C4RF";
    detail::put<std::uint32_t>(out, c.version);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.tensors.size()));
    for (const auto& t : c.tensors) {
        require(t.name.size() <= UINT16_MAX, ErrorKind::Data, "tensor name too long");
        require(t.payload.size() == t.numel() * dtype_size(t.dtype), ErrorKind::Data,
                "container: payload length inconsistent for " + t.name);
        detail::put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
        out += t.name;
        detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
        detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
        for (std::size_t d : t.shape) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
        if (t.dtype == DType::I16) {
            require(t.scale > 0.0f && std::isfinite(t.scale), ErrorKind::Data,
                    "container: int16 tensor needs a positive finite scale");
            detail::put<float>(out, t.scale);
        }
        detail::put_bytes(out, t.payload.data(), t.payload.size());
    }
    std::string meta;
    for (const auto& [k, v] : c.metadata) meta += k + "=" + v + "\n";
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    return out;
}

inline ModelContainer parse_container(const std::uint8_t* data, std::size_t size) {
    detail::Reader r{data, size};
    r.need(4, "magic");
    require(std::memcmp(r.p, "C4RF", 4) == 0, ErrorKind::Data,
            "container: magic mismatch at offset 0");
    r.off = 4;
    ModelContainer c;
    c.version = r.get<std::uint32_t>("version");
    require(c.version == 1, ErrorKind::Data,
            "container: unsupported version " + std::to_string(c.version) + " at byte 4");
    std::uint32_t count = r.get<std::uint32_t>("tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorEntry e;
        std::uint16_t name_len = r.get<std::uint16_t>("name length");
        auto nb = r.raw(name_len, "tensor name");
        e.name.assign(nb.begin(), nb.end());
        r.context = e.name;
        std::uint8_t dt = r.get<std::uint8_t>("dtype");
        require(dt <= 2, ErrorKind::Data, "container: bad dtype for tensor " + e.name);
        e.dtype = static_cast<DType>(dt);
        std::uint8_t ndim = r.get<std::uint8_t>("ndim");
        for (std::uint8_t d = 0; d < ndim; ++d)
            e.shape.push_back(r.get<std::uint32_t>("dimension"));
        if (e.dtype == DType::I16) {
            e.scale = r.get<float>("scale");
            require(e.scale > 0.0f && std::isfinite(e.scale), ErrorKind::Data,
                    "container: bad scale for tensor " + e.name);
        }
        e.payload = r.raw(e.numel() * dtype_size(e.dtype), "payload");
        r.context.clear();
        c.add(std::move(e));
    }
    std::uint32_t meta_len = r.get<std::uint32_t>("metadata length");
    auto mb = r.raw(meta_len, "metadata");
    std::string meta(mb.begin(), mb.end());
    std::size_t pos = 0;
    while (pos < meta.size()) {
        std::size_t nl = meta.find('\n', pos);
        if (nl == std::string::npos) nl = meta.size();
        std::string line = meta.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::Data,
                "container: malformed metadata line '" + line + "'");
        c.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    require(r.off == size, ErrorKind::Data,
            "container: " + std::to_string(size - r.off) + " trailing bytes");
    return c;
}

inline std::size_t save_container(const ModelContainer& c, const std::string& path) {
    std::string bytes = serialize_container(c);
    std::ofstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Data, "cannot open for writing: " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(f.good(), ErrorKind::Data, "write failed: " + path);
    return bytes.size();
}

inline ModelContainer load_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Data, "cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return parse_container(bytes.data(), bytes.size());
}

} // namespace c4r
