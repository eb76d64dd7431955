#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "rmtl/errors.hpp"
#include "rmtl/matrix.hpp"

namespace rmtl {

enum class Activation { Identity, Relu, Sigmoid, NegRelu, Softmax };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::NegRelu: return "neg_relu";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "neg_relu") return Activation::NegRelu;
    if (s == "softmax") return Activation::Softmax;
    throw ValidationError("unknown activation: " + s);
}

/// Elementwise activations; softmax is applied per row (rows sum to 1).
/// neg_relu is min(x, 0), so outputs are never positive.
inline Matrix apply_activation(Activation kind, const Matrix& z) {
    Matrix a = z;
    switch (kind) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (double& v : a.data) v = std::max(v, 0.0);
            break;
        case Activation::NegRelu:
            for (double& v : a.data) v = std::min(v, 0.0);
            break;
        case Activation::Sigmoid:
            for (double& v : a.data) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::Softmax:
            for (std::size_t i = 0; i < a.rows; ++i) {
                auto row = a.row(i);
                double mx = row[0];
                for (double v : row) mx = std::max(mx, v);
                double sum = 0.0;
                for (double& v : row) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            break;
    }
    return a;
}

/// dL/dZ from dL/dA. Needs the pre-activation Z and, for sigmoid/softmax,
/// the activation output A.
inline Matrix activation_backward(Activation kind, const Matrix& grad_a, const Matrix& z,
                                  const Matrix& a) {
    if (!grad_a.same_shape(z)) throw ShapeError("activation_backward: shape mismatch");
    Matrix grad_z = grad_a;
    switch (kind) {
        case Activation::Identity:
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < z.size(); ++i)
                if (z.data[i] <= 0.0) grad_z.data[i] = 0.0;
            break;
        case Activation::NegRelu:
            for (std::size_t i = 0; i < z.size(); ++i)
                if (z.data[i] >= 0.0) grad_z.data[i] = 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < z.size(); ++i)
                grad_z.data[i] = grad_a.data[i] * a.data[i] * (1.0 - a.data[i]);
            break;
        case Activation::Softmax:
            // row Jacobian: ds_i/dz_j = s_i (delta_ij - s_j)
            for (std::size_t r = 0; r < z.rows; ++r) {
                const auto s = a.row(r);
                const auto g = grad_a.row(r);
                double dot = 0.0;
                for (std::size_t j = 0; j < s.size(); ++j) dot += g[j] * s[j];
                auto out = grad_z.row(r);
                for (std::size_t j = 0; j < s.size(); ++j) out[j] = s[j] * (g[j] - dot);
            }
            break;
    }
    return grad_z;
}

}  // namespace rmtl
