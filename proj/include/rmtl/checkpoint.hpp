#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rmtl/errors.hpp"
#include "rmtl/matrix.hpp"

namespace rmtl {

inline constexpr char kCheckpointMagic[8] = {'R', 'M', 'T', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("checkpoint: truncated u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("checkpoint: truncated u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_str(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError("checkpoint: truncated string");
    return s;
}

}  // namespace detail

/// Named f64 tensors plus string metadata in a little-endian binary container.
/// Tensor order is preserved, so save/load round-trips are bit exact.
struct TensorStore {
    std::map<std::string, std::string> metadata;
    std::vector<std::pair<std::string, Matrix>> tensors;

    void add(const std::string& name, Matrix m) {
        if (has(name)) throw ValidationError("TensorStore: duplicate tensor " + name);
        tensors.emplace_back(name, std::move(m));
    }

    bool has(const std::string& name) const {
        for (const auto& [n, _] : tensors)
            if (n == name) return true;
        return false;
    }

    const Matrix& get(const std::string& name) const {
        for (const auto& [n, m] : tensors)
            if (n == name) return m;
        throw ValidationError("TensorStore: missing tensor " + name);
    }

    /// Hash of tensor names and shapes only, FNV-1a. Two stores with identical
    /// layout share a fingerprint regardless of the values inside.
    std::uint64_t schema_fingerprint() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const void* p, std::size_t n) {
            const unsigned char* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ull;
            }
        };
        for (const auto& [name, m] : tensors) {
            mix(name.data(), name.size());
            const std::uint64_t dims[2] = {m.rows, m.cols};
            mix(dims, sizeof(dims));
        }
        return h;
    }

    void save(const std::string& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("TensorStore: cannot open " + path + " for writing");
        os.write(kCheckpointMagic, 8);
        detail::write_u32(os, kCheckpointVersion);
        detail::write_u32(os, static_cast<std::uint32_t>(metadata.size()));
        for (const auto& [k, v] : metadata) {
            detail::write_str(os, k);
            detail::write_str(os, v);
        }
        detail::write_u32(os, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& [name, m] : tensors) {
            detail::write_str(os, name);
            detail::write_u64(os, m.rows);
            detail::write_u64(os, m.cols);
            for (double v : m.data) detail::write_f64(os, v);
        }
        if (!os) throw IoError("TensorStore: write failed for " + path);
    }

    static TensorStore load(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw IoError("TensorStore: cannot open " + path);
        char magic[8];
        is.read(magic, 8);
        if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
            throw IoError("TensorStore: bad magic in " + path);
        const std::uint32_t version = detail::read_u32(is);
        if (version != kCheckpointVersion)
            throw IoError("TensorStore: unsupported version " + std::to_string(version));
        TensorStore store;
        const std::uint32_t nmeta = detail::read_u32(is);
        for (std::uint32_t i = 0; i < nmeta; ++i) {
            std::string k = detail::read_str(is);
            std::string v = detail::read_str(is);
            store.metadata[k] = v;
        }
        const std::uint32_t ntensors = detail::read_u32(is);
        for (std::uint32_t i = 0; i < ntensors; ++i) {
            std::string name = detail::read_str(is);
            const std::uint64_t rows = detail::read_u64(is);
            const std::uint64_t cols = detail::read_u64(is);
            Matrix m(rows, cols);
            for (double& v : m.data) v = detail::read_f64(is);
            store.tensors.emplace_back(std::move(name), std::move(m));
        }
        return store;
    }
};

/// Snapshot every parameter block of a model into the store.
template <class M>
void store_model(TensorStore& store, const std::string& prefix, M& model) {
    model.for_each_param(prefix, [&](const std::string& n, std::size_t r, std::size_t c,
                                     double* d) {
        Matrix m(r, c);
        std::memcpy(m.data.data(), d, r * c * sizeof(double));
        store.add(n, std::move(m));
    });
}

/// Copy stored tensors back into a structurally identical model.
template <class M>
void load_model(const TensorStore& store, const std::string& prefix, M& model) {
    model.for_each_param(prefix, [&](const std::string& n, std::size_t r, std::size_t c,
                                     double* d) {
        const Matrix& m = store.get(n);
        if (m.rows != r || m.cols != c)
            throw ShapeError("load_model: shape mismatch for " + n);
        std::memcpy(d, m.data.data(), r * c * sizeof(double));
    });
}

}  // namespace rmtl
