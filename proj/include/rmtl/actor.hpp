#pragma once

#include <string>
#include <vector>

#include "rmtl/loss.hpp"
#include "rmtl/mlp.hpp"

namespace rmtl {

enum class Variant { SingleTask, SharedBottom, Esmm, Mmoe, Ple };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::SingleTask: return "single_task";
        case Variant::SharedBottom: return "shared_bottom";
        case Variant::Esmm: return "esmm";
        case Variant::Mmoe: return "mmoe";
        case Variant::Ple: return "ple";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "single_task") return Variant::SingleTask;
    if (s == "shared_bottom") return Variant::SharedBottom;
    if (s == "esmm") return Variant::Esmm;
    if (s == "mmoe") return Variant::Mmoe;
    if (s == "ple") return Variant::Ple;
    throw ValidationError("unknown backbone variant: " + s);
}

struct ActorDims {
    std::size_t state_dim = 256;
    std::vector<std::size_t> expert_hidden{512};
    std::size_t expert_out = 256;
    std::vector<std::size_t> tower_hidden{128, 64};
    std::size_t expert_count = 8;
    std::size_t ple_task1 = 3;
    std::size_t ple_task2 = 3;
    std::size_t ple_shared = 2;
    double dropout = 0.2;
};

/// The MTL policy head pi(s; theta): maps a state vector to the action pair
/// (a1, a2) = (pCTR, pCTCVR). Expert layout by variant:
///   single_task  experts = {private bottom for task 1, for task 2}
///   mmoe         experts = expert_count parallel MLPs, softmax gate per task
///   ple          experts = [task1 specific | task2 specific | shared]
///   shared_bottom / esmm have no actor-side experts; towers read the state
///   directly (the shared representation lives in StateReprParams).
struct ActorParams {
    Variant variant = Variant::Ple;
    ActorDims dims;
    std::vector<MlpParams> experts;
    std::vector<MlpParams> gates;   // mmoe/ple: one per task
    std::vector<MlpParams> towers;  // exactly 2

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        for (std::size_t i = 0; i < experts.size(); ++i)
            experts[i].for_each_param(prefix + ".expert" + std::to_string(i), f);
        for (std::size_t i = 0; i < gates.size(); ++i)
            gates[i].for_each_param(prefix + ".gate" + std::to_string(i), f);
        for (std::size_t i = 0; i < towers.size(); ++i)
            towers[i].for_each_param(prefix + ".tower" + std::to_string(i), f);
    }

    /// Expert indices mixed by task k's gate.
    std::vector<std::size_t> gate_experts(std::size_t k) const {
        std::vector<std::size_t> idx;
        if (variant == Variant::Mmoe) {
            for (std::size_t e = 0; e < experts.size(); ++e) idx.push_back(e);
        } else if (variant == Variant::Ple) {
            const std::size_t base = k == 0 ? 0 : dims.ple_task1;
            const std::size_t count = k == 0 ? dims.ple_task1 : dims.ple_task2;
            for (std::size_t e = 0; e < count; ++e) idx.push_back(base + e);
            for (std::size_t e = 0; e < dims.ple_shared; ++e)
                idx.push_back(dims.ple_task1 + dims.ple_task2 + e);
        }
        return idx;
    }
};

inline ActorParams make_actor(Variant variant, const ActorDims& dims, SeededRng& rng) {
    ActorParams a;
    a.variant = variant;
    a.dims = dims;
    std::vector<std::size_t> expert_dims{dims.state_dim};
    expert_dims.insert(expert_dims.end(), dims.expert_hidden.begin(), dims.expert_hidden.end());
    expert_dims.push_back(dims.expert_out);
    auto make_expert = [&]() {
        return make_mlp(expert_dims, Activation::Relu, Activation::Relu, dims.dropout, rng);
    };
    std::size_t tower_in = dims.state_dim;
    switch (variant) {
        case Variant::SingleTask:
            a.experts.push_back(make_expert());
            a.experts.push_back(make_expert());
            tower_in = dims.expert_out;
            break;
        case Variant::SharedBottom:
        case Variant::Esmm:
            break;
        case Variant::Mmoe:
            if (dims.expert_count < 1)
                throw ValidationError("make_actor: mmoe needs at least one expert");
            for (std::size_t e = 0; e < dims.expert_count; ++e)
                a.experts.push_back(make_expert());
            tower_in = dims.expert_out;
            break;
        case Variant::Ple:
            if (dims.ple_task1 + dims.ple_task2 + dims.ple_shared != dims.expert_count)
                throw ValidationError("make_actor: ple split must sum to expert_count");
            if (dims.ple_task1 < 1 || dims.ple_task2 < 1 || dims.ple_shared < 1)
                throw ValidationError("make_actor: ple needs experts in every group");
            for (std::size_t e = 0; e < dims.expert_count; ++e)
                a.experts.push_back(make_expert());
            tower_in = dims.expert_out;
            break;
    }
    if (variant == Variant::Mmoe || variant == Variant::Ple) {
        for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t n_mix = a.gate_experts(k).size();
            a.gates.push_back(make_mlp({dims.state_dim, n_mix}, Activation::Softmax,
                                       Activation::Softmax, 0.0, rng));
        }
    }
    std::vector<std::size_t> tower_dims{tower_in};
    tower_dims.insert(tower_dims.end(), dims.tower_hidden.begin(), dims.tower_hidden.end());
    tower_dims.push_back(1);
    for (std::size_t k = 0; k < 2; ++k)
        a.towers.push_back(
            make_mlp(tower_dims, Activation::Relu, Activation::Sigmoid, dims.dropout, rng));
    return a;
}

inline ActorParams zeros_like(const ActorParams& a) {
    ActorParams z = a;
    for (auto& e : z.experts) e = zeros_like(e);
    for (auto& g : z.gates) g = zeros_like(g);
    for (auto& t : z.towers) t = zeros_like(t);
    return z;
}

struct ActorCache {
    std::vector<MlpCache> experts;
    std::vector<Matrix> expert_out;
    std::vector<MlpCache> gates;
    std::vector<Matrix> gate_probs;   // per task, B x n_mix
    std::vector<Matrix> tower_in;     // per task, B x tower_in_dim
    std::vector<MlpCache> towers;
    Matrix raw;                       // B x 2 tower outputs (esmm: pCTR, pCVR)
    Matrix unclamped;                 // B x 2: 1 where the clamp is inactive
};

/// Actions for a batch of states; column 0 is pCTR, column 1 is pCTCVR.
/// Both are clamped into [1e-7, 1-1e-7].
inline Matrix actor_forward(const ActorParams& actor, const Matrix& states, bool train,
                            SeededRng& rng, ActorCache* cache = nullptr) {
    if (actor.towers.size() != 2) throw ValidationError("actor_forward: need exactly 2 towers");
    if (states.cols != actor.dims.state_dim)
        throw ShapeError("actor_forward: state dim " + std::to_string(states.cols) +
                         " != " + std::to_string(actor.dims.state_dim));
    const std::size_t B = states.rows;
    ActorCache local;
    ActorCache& c = cache ? *cache : local;
    c = ActorCache{};
    c.experts.resize(actor.experts.size());
    c.expert_out.resize(actor.experts.size());
    c.gates.resize(actor.gates.size());
    c.gate_probs.resize(actor.gates.size());
    c.tower_in.resize(2);
    c.towers.resize(2);

    for (std::size_t e = 0; e < actor.experts.size(); ++e)
        c.expert_out[e] = mlp_forward(actor.experts[e], states, train, rng, &c.experts[e]);
    for (std::size_t k = 0; k < actor.gates.size(); ++k)
        c.gate_probs[k] = mlp_forward(actor.gates[k], states, train, rng, &c.gates[k]);

    Matrix raw(B, 2);
    for (std::size_t k = 0; k < 2; ++k) {
        switch (actor.variant) {
            case Variant::SharedBottom:
            case Variant::Esmm:
                c.tower_in[k] = states;
                break;
            case Variant::SingleTask:
                c.tower_in[k] = c.expert_out[k];
                break;
            case Variant::Mmoe:
            case Variant::Ple: {
                const auto idx = actor.gate_experts(k);
                Matrix mixed(B, actor.dims.expert_out);
                const Matrix& g = c.gate_probs[k];
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    const Matrix& eo = c.expert_out[idx[j]];
                    for (std::size_t i = 0; i < B; ++i) {
                        const double w = g(i, j);
                        for (std::size_t d = 0; d < mixed.cols; ++d)
                            mixed(i, d) += w * eo(i, d);
                    }
                }
                c.tower_in[k] = std::move(mixed);
                break;
            }
        }
        Matrix out = mlp_forward(actor.towers[k], c.tower_in[k], train, rng, &c.towers[k]);
        for (std::size_t i = 0; i < B; ++i) raw(i, k) = out(i, 0);
    }

    Matrix actions(B, 2);
    Matrix unclamped(B, 2, 1.0);
    for (std::size_t i = 0; i < B; ++i) {
        const double p1 = raw(i, 0);
        const double a2_raw = actor.variant == Variant::Esmm ? p1 * raw(i, 1) : raw(i, 1);
        actions(i, 0) = clamp_prob(p1);
        actions(i, 1) = clamp_prob(a2_raw);
        if (actions(i, 0) != p1) unclamped(i, 0) = 0.0;
        if (actions(i, 1) != a2_raw) unclamped(i, 1) = 0.0;
    }
    c.raw = std::move(raw);
    c.unclamped = std::move(unclamped);
    return actions;
}

/// Backprop through the actor; accumulates into `grads` and returns the
/// gradient w.r.t. the input states.
inline Matrix actor_backward(const ActorParams& actor, const ActorCache& cache,
                             const Matrix& grad_actions, ActorParams& grads) {
    const std::size_t B = cache.raw.rows;
    if (grad_actions.rows != B || grad_actions.cols != 2)
        throw ShapeError("actor_backward: grad_actions must be B x 2");
    Matrix grad_states;

    // gradient w.r.t. raw tower outputs, through the clamp and (esmm) product
    Matrix grad_raw(B, 2);
    for (std::size_t i = 0; i < B; ++i) {
        const double g1 = grad_actions(i, 0) * cache.unclamped(i, 0);
        const double g2 = grad_actions(i, 1) * cache.unclamped(i, 1);
        if (actor.variant == Variant::Esmm) {
            grad_raw(i, 0) = g1 + g2 * cache.raw(i, 1);  // pCTR also feeds a2
            grad_raw(i, 1) = g2 * cache.raw(i, 0);
        } else {
            grad_raw(i, 0) = g1;
            grad_raw(i, 1) = g2;
        }
    }

    auto add_state_grad = [&](const Matrix& g) {
        if (grad_states.empty()) {
            grad_states = g;
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) grad_states.data[i] += g.data[i];
        }
    };

    std::vector<Matrix> grad_expert_out(actor.experts.size());
    for (std::size_t k = 0; k < 2; ++k) {
        Matrix gout(B, 1);
        for (std::size_t i = 0; i < B; ++i) gout(i, 0) = grad_raw(i, k);
        Matrix gin = mlp_backward(actor.towers[k], cache.towers[k], gout, grads.towers[k]);
        switch (actor.variant) {
            case Variant::SharedBottom:
            case Variant::Esmm:
                add_state_grad(gin);
                break;
            case Variant::SingleTask: {
                Matrix gs =
                    mlp_backward(actor.experts[k], cache.experts[k], gin, grads.experts[k]);
                add_state_grad(gs);
                break;
            }
            case Variant::Mmoe:
            case Variant::Ple: {
                const auto idx = actor.gate_experts(k);
                const Matrix& g = cache.gate_probs[k];
                Matrix grad_gate(B, idx.size());
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    const Matrix& eo = cache.expert_out[idx[j]];
                    Matrix& geo = grad_expert_out[idx[j]];
                    if (geo.empty()) geo = Matrix(B, eo.cols);
                    for (std::size_t i = 0; i < B; ++i) {
                        double dot = 0.0;
                        const double w = g(i, j);
                        for (std::size_t d = 0; d < eo.cols; ++d) {
                            geo(i, d) += w * gin(i, d);
                            dot += gin(i, d) * eo(i, d);
                        }
                        grad_gate(i, j) = dot;
                    }
                }
                Matrix gs =
                    mlp_backward(actor.gates[k], cache.gates[k], grad_gate, grads.gates[k]);
                add_state_grad(gs);
                break;
            }
        }
    }
    if (actor.variant == Variant::Mmoe || actor.variant == Variant::Ple) {
        for (std::size_t e = 0; e < actor.experts.size(); ++e) {
            if (grad_expert_out[e].empty()) continue;
            Matrix gs = mlp_backward(actor.experts[e], cache.experts[e], grad_expert_out[e],
                                     grads.experts[e]);
            add_state_grad(gs);
        }
    }
    if (grad_states.empty()) grad_states = Matrix(B, actor.dims.state_dim);
    return grad_states;
}

}  // namespace rmtl
