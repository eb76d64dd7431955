#pragma once

#include <string>
#include <vector>

#include "rmtl/state_repr.hpp"

namespace rmtl {

struct CriticDims {
    std::size_t embed_dim = 128;
    std::size_t proj_dim = 128;
    std::vector<std::size_t> feature{128};     // shared-bottom MLP sizes, last = feature width
    std::vector<std::size_t> head_hidden{128, 64};
};

/// Per-task Q networks with a shared feature bottom. The scalar action is
/// expanded by a 1 x d affine layer, concatenated with the d-wide feature
/// vector, and fed to head k. Heads end in neg_relu, so Q <= 0 everywhere.
/// The critic owns its embeddings and uses no dropout.
struct CriticParams {
    StateReprParams feat;
    Matrix action_proj;       // 1 x d
    Vector action_proj_bias;  // d
    std::vector<MlpParams> heads;  // exactly 2

    std::size_t feature_dim() const { return feat.state_dim(); }

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        feat.for_each_param(prefix + ".feat", f);
        f(prefix + ".action_proj.W", action_proj.rows, action_proj.cols,
          action_proj.data.data());
        f(prefix + ".action_proj.b", std::size_t{1}, action_proj_bias.size(),
          action_proj_bias.data());
        for (std::size_t i = 0; i < heads.size(); ++i)
            heads[i].for_each_param(prefix + ".head" + std::to_string(i), f);
    }
};

inline CriticParams make_critic(const FeatureSchema& schema, const CriticDims& dims,
                                SeededRng& rng) {
    CriticParams c;
    ReprDims rd;
    rd.embed_dim = dims.embed_dim;
    rd.proj_dim = dims.proj_dim;
    rd.bottom = dims.feature;
    rd.dropout = 0.0;
    c.feat = make_state_repr(schema, rd, rng);
    const std::size_t d = c.feat.state_dim();
    c.action_proj = Matrix(1, d);
    glorot_uniform(c.action_proj, rng);
    c.action_proj_bias.assign(d, 0.0);
    std::vector<std::size_t> head_dims{2 * d};
    head_dims.insert(head_dims.end(), dims.head_hidden.begin(), dims.head_hidden.end());
    head_dims.push_back(1);
    for (std::size_t k = 0; k < 2; ++k) {
        c.heads.push_back(
            make_mlp(head_dims, Activation::Relu, Activation::NegRelu, 0.0, rng));
        // start the output in the active halfplane of neg_relu: with a zero
        // bias a head whose initial pre-activation is positive on every input
        // emits exactly 0 with zero gradient and can never recover, since the
        // (nonpositive) targets only ever pull from below
        c.heads.back().layers.back().bias[0] = -1.0;
    }
    return c;
}

inline CriticParams zeros_like(const CriticParams& c) {
    CriticParams z = c;
    z.feat = zeros_like(c.feat);
    z.action_proj.fill(0.0);
    std::fill(z.action_proj_bias.begin(), z.action_proj_bias.end(), 0.0);
    for (auto& h : z.heads) h = zeros_like(h);
    return z;
}

struct CriticCache {
    ReprCache feat;
    Matrix feat_out;   // B x d
    Vector actions;    // B
    Matrix joint;      // B x 2d
    MlpCache head;
    std::size_t task = 0;
};

/// Q(s, a; phi_k) for a batch of rows and scalar actions.
inline Vector critic_forward(const CriticParams& critic, const FeatureSchema& schema,
                             const FeatureBatch& batch, const Vector& actions,
                             std::size_t k, CriticCache* cache = nullptr) {
    if (k >= critic.heads.size())
        throw ValidationError("critic_forward: task index " + std::to_string(k));
    if (actions.size() != batch.size())
        throw ShapeError("critic_forward: action count mismatch");
    SeededRng unused(0);  // critic has no dropout; forward is deterministic
    CriticCache local;
    CriticCache& c = cache ? *cache : local;
    c.task = k;
    c.actions = actions;
    c.feat_out = repr_forward(critic.feat, schema, batch, false, unused, &c.feat);
    const std::size_t B = batch.size();
    const std::size_t d = critic.feature_dim();
    Matrix joint(B, 2 * d);
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < d; ++j) joint(i, j) = c.feat_out(i, j);
        const double a = actions[i];
        for (std::size_t j = 0; j < d; ++j)
            joint(i, d + j) = a * critic.action_proj(0, j) + critic.action_proj_bias[j];
    }
    c.joint = std::move(joint);
    Matrix q = mlp_forward(critic.heads[k], c.joint, false, unused, &c.head);
    Vector out(B);
    for (std::size_t i = 0; i < B; ++i) out[i] = q(i, 0);
    return out;
}

/// Backprop one head; accumulates parameter gradients and, when requested,
/// the gradient of the loss w.r.t. each scalar action.
inline void critic_backward(const CriticParams& critic, const FeatureSchema& schema,
                            const CriticCache& cache, const Vector& grad_q,
                            CriticParams& grads, Vector* grad_actions = nullptr) {
    (void)schema;
    const std::size_t B = cache.actions.size();
    if (grad_q.size() != B) throw ShapeError("critic_backward: grad_q size mismatch");
    const std::size_t d = critic.feature_dim();
    Matrix gq(B, 1);
    for (std::size_t i = 0; i < B; ++i) gq(i, 0) = grad_q[i];
    Matrix gjoint =
        mlp_backward(critic.heads[cache.task], cache.head, gq, grads.heads[cache.task]);
    Matrix gfeat(B, d);
    if (grad_actions) grad_actions->assign(B, 0.0);
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < d; ++j) gfeat(i, j) = gjoint(i, j);
        const double a = cache.actions[i];
        double ga = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double g = gjoint(i, d + j);
            grads.action_proj(0, j) += a * g;
            grads.action_proj_bias[j] += g;
            ga += g * critic.action_proj(0, j);
        }
        if (grad_actions) (*grad_actions)[i] = ga;
    }
    repr_backward(critic.feat, cache.feat, gfeat, grads.feat);
}

}  // namespace rmtl
