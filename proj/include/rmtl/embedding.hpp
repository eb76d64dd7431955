#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmtl/matrix.hpp"

namespace rmtl {

/// Lookup table mapping categorical ids to dense rows.
struct EmbeddingTable {
    std::size_t vocab_size = 0;
    std::size_t dim = 0;
    Matrix rows;  // vocab_size x dim

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t vocab, std::size_t d) : vocab_size(vocab), dim(d), rows(vocab, d) {}

    static EmbeddingTable init(std::size_t vocab, std::size_t d, SeededRng& rng) {
        EmbeddingTable t(vocab, d);
        // uniform(+-1/sqrt(d)) keeps initial lookups at unit-ish scale
        const double limit = 1.0 / std::sqrt(static_cast<double>(d));
        for (double& v : t.rows.data) v = rng.uniform(-limit, limit);
        return t;
    }

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        f(prefix, rows.rows, rows.cols, rows.data.data());
    }
};

inline Matrix embed_forward(const EmbeddingTable& table, const std::vector<std::uint64_t>& ids) {
    Matrix out(ids.size(), table.dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= table.vocab_size)
            throw IndexError("embed_forward: id " + std::to_string(ids[i]) +
                             " out of range for vocab " + std::to_string(table.vocab_size));
        const auto src = table.rows.row(ids[i]);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < table.dim; ++j) dst[j] = src[j];
    }
    return out;
}

/// Accumulates grad_out rows into the looked-up rows of `grads.rows`
/// (duplicate ids sum).
inline void embed_backward(const EmbeddingTable& table, const std::vector<std::uint64_t>& ids,
                           const Matrix& grad_out, EmbeddingTable& grads) {
    if (grad_out.rows != ids.size() || grad_out.cols != table.dim)
        throw ShapeError("embed_backward: grad_out shape mismatch");
    if (grads.rows.rows != table.vocab_size || grads.rows.cols != table.dim)
        throw ShapeError("embed_backward: grads table shape mismatch");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= table.vocab_size) throw IndexError("embed_backward: id out of range");
        auto dst = grads.rows.row(ids[i]);
        const auto src = grad_out.row(i);
        for (std::size_t j = 0; j < table.dim; ++j) dst[j] += src[j];
    }
}

inline EmbeddingTable zeros_like(const EmbeddingTable& t) {
    EmbeddingTable z = t;
    z.rows.fill(0.0);
    return z;
}

}  // namespace rmtl
