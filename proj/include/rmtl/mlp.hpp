#pragma once

#include <string>
#include <vector>

#include "rmtl/activation.hpp"
#include "rmtl/matrix.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

struct MlpLayer {
    Matrix weight;  // in x out
    Vector bias;    // out
    Activation act = Activation::Identity;
};

/// A fully-connected chain h_{l+1} = act(h_l W_l + b_l). Dropout (inverted
/// scaling) is applied after the activation of every layer except the last,
/// and only in train mode.
struct MlpParams {
    std::vector<MlpLayer> layers;
    double dropout_rate = 0.0;

    std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().weight.rows; }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().weight.cols; }

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& lay = layers[l];
            f(prefix + ".W" + std::to_string(l), lay.weight.rows, lay.weight.cols,
              lay.weight.data.data());
            f(prefix + ".b" + std::to_string(l), std::size_t{1}, lay.bias.size(),
              lay.bias.data());
        }
    }

    void validate_chain() const {
        for (std::size_t l = 0; l + 1 < layers.size(); ++l)
            if (layers[l].weight.cols != layers[l + 1].weight.rows)
                throw ShapeError("mlp: layer " + std::to_string(l) + " out dim " +
                                 std::to_string(layers[l].weight.cols) +
                                 " != layer " + std::to_string(l + 1) + " in dim " +
                                 std::to_string(layers[l + 1].weight.rows));
        if (dropout_rate < 0.0 || dropout_rate > 1.0)
            throw ValidationError("mlp: dropout_rate outside [0,1]");
    }
};

/// dims = {in, h1, ..., out}; hidden layers use hidden_act, last layer out_act.
inline MlpParams make_mlp(const std::vector<std::size_t>& dims, Activation hidden_act,
                          Activation out_act, double dropout_rate, SeededRng& rng) {
    if (dims.size() < 2) throw ValidationError("make_mlp: need at least in and out dims");
    MlpParams mlp;
    mlp.dropout_rate = dropout_rate;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer lay;
        lay.weight = Matrix(dims[l], dims[l + 1]);
        glorot_uniform(lay.weight, rng);
        lay.bias.assign(dims[l + 1], 0.0);
        lay.act = (l + 2 == dims.size()) ? out_act : hidden_act;
        mlp.layers.push_back(std::move(lay));
    }
    return mlp;
}

struct MlpCache {
    std::vector<Matrix> inputs;  // input to each layer (post-dropout of previous)
    std::vector<Matrix> z;       // pre-activation
    std::vector<Matrix> a;       // activation output, before dropout
    std::vector<Matrix> mask;    // scaled dropout mask; empty when not applied
    bool train_mode = false;
};

inline Matrix mlp_forward(const MlpParams& params, const Matrix& input, bool train_mode,
                          SeededRng& rng, MlpCache* cache = nullptr) {
    params.validate_chain();
    if (params.layers.empty()) throw ShapeError("mlp_forward: empty mlp");
    if (input.cols != params.in_dim())
        throw ShapeError("mlp_forward: input width " + std::to_string(input.cols) +
                         " != first layer in dim " + std::to_string(params.in_dim()));
    require_finite(input, "mlp_forward input");

    if (cache) {
        *cache = MlpCache{};
        cache->train_mode = train_mode;
    }
    Matrix h = input;
    const std::size_t last = params.layers.size() - 1;
    for (std::size_t l = 0; l <= last; ++l) {
        const MlpLayer& lay = params.layers[l];
        Matrix z = matmul(h, lay.weight);
        add_row_inplace(z, lay.bias);
        Matrix a = apply_activation(lay.act, z);
        Matrix mask;
        Matrix out = a;
        if (train_mode && params.dropout_rate > 0.0 && l != last) {
            const double keep = 1.0 - params.dropout_rate;
            mask = Matrix(a.rows, a.cols);
            for (double& m : mask.data) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= mask.data[i];
        }
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->z.push_back(std::move(z));
            cache->a.push_back(std::move(a));
            cache->mask.push_back(std::move(mask));
        }
        h = std::move(out);
    }
    require_finite(h, "mlp_forward output");
    return h;
}

/// Exact gradients w.r.t. every weight, bias, and the input. `grads` must be
/// structurally identical to `params` (use zeros_like); gradients accumulate.
inline Matrix mlp_backward(const MlpParams& params, const MlpCache& cache,
                           const Matrix& grad_out, MlpParams& grads) {
    if (cache.inputs.size() != params.layers.size())
        throw ShapeError("mlp_backward: cache does not match mlp");
    const std::size_t last = params.layers.size() - 1;
    if (grad_out.rows != cache.a[last].rows || grad_out.cols != cache.a[last].cols)
        throw ShapeError("mlp_backward: grad_out shape mismatch");

    Matrix g = grad_out;
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const MlpLayer& lay = params.layers[li];
        if (!cache.mask[li].empty()) {
            for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= cache.mask[li].data[i];
        }
        Matrix gz = activation_backward(lay.act, g, cache.z[li], cache.a[li]);
        Matrix gw = matmul_tn(cache.inputs[li], gz);
        Vector gb = col_sums(gz);
        auto& gl = grads.layers[li];
        for (std::size_t i = 0; i < gw.size(); ++i) gl.weight.data[i] += gw.data[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gl.bias[i] += gb[i];
        g = matmul_nt(gz, lay.weight);
    }
    return g;  // gradient w.r.t. the mlp input
}

inline MlpParams zeros_like(const MlpParams& params) {
    MlpParams z = params;
    for (auto& lay : z.layers) {
        lay.weight.fill(0.0);
        std::fill(lay.bias.begin(), lay.bias.end(), 0.0);
    }
    return z;
}

}  // namespace rmtl
