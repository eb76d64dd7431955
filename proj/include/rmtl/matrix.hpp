#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rmtl/errors.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit floats. Rows are samples throughout the
/// library, so a batched forward pass is `X * W + b` with W sized in x out.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws) {
        Matrix m(rws.size(), rws.size() ? rws.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rws) {
            std::size_t j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_shape(const Matrix& m, std::size_t r, std::size_t c, const char* what) {
    if (m.rows != r || m.cols != c)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(r) + "x" +
                         std::to_string(c) + ", got " + std::to_string(m.rows) + "x" +
                         std::to_string(m.cols));
}

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
}

/// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * b.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

/// C = A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ShapeError("matmul_tn: row mismatch");
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.data.data() + k * a.cols;
        const double* brow = b.data.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.data.data() + i * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

/// C = A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ShapeError("matmul_nt: col mismatch");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.data.data() + j * b.cols;
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline void add_row_inplace(Matrix& m, std::span<const double> v) {
    if (v.size() != m.cols) throw ShapeError("add_row_inplace: width mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += v[j];
    }
}

inline Vector col_sums(const Matrix& m) {
    Vector s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += m(i, j);
    return s;
}

/// Concatenate blocks horizontally; all blocks must share the row count.
inline Matrix hconcat(const std::vector<const Matrix*>& blocks) {
    if (blocks.empty()) return {};
    const std::size_t rows = blocks.front()->rows;
    std::size_t cols = 0;
    for (const Matrix* b : blocks) {
        if (b->rows != rows) throw ShapeError("hconcat: row mismatch");
        cols += b->cols;
    }
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t off = 0;
        for (const Matrix* b : blocks) {
            const double* src = b->data.data() + i * b->cols;
            double* dst = out.data.data() + i * cols + off;
            for (std::size_t j = 0; j < b->cols; ++j) dst[j] = src[j];
            off += b->cols;
        }
    }
    return out;
}

inline void glorot_uniform(Matrix& w, SeededRng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& v : w.data) v = rng.uniform(-limit, limit);
}

/// Named view of one parameter block; the visitation order over a model is
/// canonical, so two structurally identical models can be zipped by index.
struct ParamView {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double* data = nullptr;
    std::size_t size() const { return rows * cols; }
};

using ParamVisitor = std::function<void(const std::string&, std::size_t, std::size_t, double*)>;

template <class M>
std::vector<ParamView> collect_params(M& model, const std::string& prefix = "") {
    std::vector<ParamView> views;
    model.for_each_param(prefix, [&](const std::string& n, std::size_t r, std::size_t c,
                                     double* d) { views.push_back({n, r, c, d}); });
    return views;
}

template <class M>
std::size_t param_count(M& model) {
    std::size_t n = 0;
    model.for_each_param("", [&](const std::string&, std::size_t r, std::size_t c,
                                 double*) { n += r * c; });
    return n;
}

}  // namespace rmtl
