#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "rmtl/actor.hpp"
#include "rmtl/checkpoint.hpp"
#include "rmtl/critic.hpp"
#include "rmtl/state_repr.hpp"

namespace rmtl {

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    return out;
}

inline std::map<std::string, std::string> parse_kv(const std::string& s) {
    std::map<std::string, std::string> kv;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ';')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

}  // namespace detail

inline std::string repr_dims_to_text(const ReprDims& d) {
    std::ostringstream os;
    os << "embed_dim=" << d.embed_dim << ";proj_dim=" << d.proj_dim
       << ";bottom=" << detail::join_sizes(d.bottom) << ";dropout=" << d.dropout;
    return os.str();
}

inline ReprDims repr_dims_from_text(const std::string& s) {
    auto kv = detail::parse_kv(s);
    ReprDims d;
    d.embed_dim = std::stoull(kv.at("embed_dim"));
    d.proj_dim = std::stoull(kv.at("proj_dim"));
    d.bottom = detail::parse_sizes(kv.at("bottom"));
    d.dropout = std::stod(kv.at("dropout"));
    return d;
}

inline std::string actor_dims_to_text(const ActorDims& d) {
    std::ostringstream os;
    os << "state_dim=" << d.state_dim << ";expert_hidden=" << detail::join_sizes(d.expert_hidden)
       << ";expert_out=" << d.expert_out
       << ";tower_hidden=" << detail::join_sizes(d.tower_hidden)
       << ";expert_count=" << d.expert_count << ";ple=" << d.ple_task1 << "," << d.ple_task2
       << "," << d.ple_shared << ";dropout=" << d.dropout;
    return os.str();
}

inline ActorDims actor_dims_from_text(const std::string& s) {
    auto kv = detail::parse_kv(s);
    ActorDims d;
    d.state_dim = std::stoull(kv.at("state_dim"));
    d.expert_hidden = detail::parse_sizes(kv.at("expert_hidden"));
    d.expert_out = std::stoull(kv.at("expert_out"));
    d.tower_hidden = detail::parse_sizes(kv.at("tower_hidden"));
    d.expert_count = std::stoull(kv.at("expert_count"));
    const auto ple = detail::parse_sizes(kv.at("ple"));
    if (ple.size() != 3) throw ParseError("actor dims: bad ple split");
    d.ple_task1 = ple[0];
    d.ple_task2 = ple[1];
    d.ple_shared = ple[2];
    d.dropout = std::stod(kv.at("dropout"));
    return d;
}

inline std::string critic_dims_to_text(const CriticDims& d) {
    std::ostringstream os;
    os << "embed_dim=" << d.embed_dim << ";proj_dim=" << d.proj_dim
       << ";feature=" << detail::join_sizes(d.feature)
       << ";head_hidden=" << detail::join_sizes(d.head_hidden);
    return os.str();
}

inline CriticDims critic_dims_from_text(const std::string& s) {
    auto kv = detail::parse_kv(s);
    CriticDims d;
    d.embed_dim = std::stoull(kv.at("embed_dim"));
    d.proj_dim = std::stoull(kv.at("proj_dim"));
    d.feature = detail::parse_sizes(kv.at("feature"));
    d.head_hidden = detail::parse_sizes(kv.at("head_hidden"));
    return d;
}

/// State representation plus policy head. Pretraining updates both; the RL
/// phase freezes the representation and treats it as the environment's state
/// function.
struct FullModel {
    FeatureSchema schema;
    ReprDims repr_dims;
    ActorDims actor_dims;
    StateReprParams repr;
    ActorParams actor;

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        repr.for_each_param(prefix + ".repr", f);
        actor.for_each_param(prefix + ".actor", f);
    }
};

inline FullModel make_model(Variant variant, const FeatureSchema& schema,
                            const ReprDims& repr_dims, ActorDims actor_dims,
                            SeededRng& rng) {
    if (actor_dims.state_dim != repr_dims.state_dim())
        throw ValidationError("make_model: actor state_dim must equal repr output dim");
    FullModel m;
    m.schema = schema;
    m.repr_dims = repr_dims;
    m.actor_dims = actor_dims;
    m.repr = make_state_repr(schema, repr_dims, rng);
    m.actor = make_actor(variant, actor_dims, rng);
    return m;
}

struct ModelCache {
    ReprCache repr;
    ActorCache actor;
};

inline Matrix model_forward(const FullModel& m, const FeatureBatch& batch, bool train,
                            SeededRng& rng, ModelCache* cache = nullptr) {
    Matrix states =
        repr_forward(m.repr, m.schema, batch, train, rng, cache ? &cache->repr : nullptr);
    return actor_forward(m.actor, states, train, rng, cache ? &cache->actor : nullptr);
}

struct FullModelGrads {
    StateReprParams repr;
    ActorParams actor;

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        repr.for_each_param(prefix + ".repr", f);
        actor.for_each_param(prefix + ".actor", f);
    }
};

inline FullModelGrads zeros_like(const FullModel& m) {
    return {zeros_like(m.repr), zeros_like(m.actor)};
}

inline void model_backward(const FullModel& m, const ModelCache& cache,
                           const Matrix& grad_actions, FullModelGrads& grads) {
    Matrix grad_states = actor_backward(m.actor, cache.actor, grad_actions, grads.actor);
    repr_backward(m.repr, cache.repr, grad_states, grads.repr);
}

inline void add_num_stats(TensorStore& store, const NumStats& stats) {
    if (stats.empty()) return;
    Matrix mean(1, stats.mean.size());
    Matrix sd(1, stats.stddev.size());
    mean.data = stats.mean;
    sd.data = stats.stddev;
    store.add("num_stats.mean", std::move(mean));
    store.add("num_stats.stddev", std::move(sd));
}

inline NumStats num_stats_from(const TensorStore& store) {
    NumStats st;
    if (!store.has("num_stats.mean")) return st;
    st.mean = store.get("num_stats.mean").data;
    st.stddev = store.get("num_stats.stddev").data;
    return st;
}

inline void save_model(const FullModel& m, const NumStats& stats, const std::string& path) {
    TensorStore store;
    store.metadata["kind"] = "actor";
    store.metadata["variant"] = to_string(m.actor.variant);
    store.metadata["schema"] = schema_to_text(m.schema);
    store.metadata["repr_dims"] = repr_dims_to_text(m.repr_dims);
    store.metadata["actor_dims"] = actor_dims_to_text(m.actor_dims);
    FullModel& mut = const_cast<FullModel&>(m);
    store_model(store, "model", mut);
    add_num_stats(store, stats);
    store.save(path);
}

struct LoadedModel {
    FullModel model;
    NumStats stats;
};

inline LoadedModel load_full_model(const std::string& path) {
    TensorStore store = TensorStore::load(path);
    if (!store.metadata.count("kind") || store.metadata.at("kind") != "actor")
        throw ValidationError("load_full_model: " + path + " is not an actor checkpoint");
    std::istringstream schema_in(store.metadata.at("schema"));
    const FeatureSchema schema = parse_schema(schema_in);
    const ReprDims rd = repr_dims_from_text(store.metadata.at("repr_dims"));
    const ActorDims ad = actor_dims_from_text(store.metadata.at("actor_dims"));
    const Variant variant = variant_from_string(store.metadata.at("variant"));
    SeededRng rng(0);
    LoadedModel out{make_model(variant, schema, rd, ad, rng), num_stats_from(store)};
    load_model(store, "model", out.model);
    return out;
}

inline void save_critic(const CriticParams& critic, const FeatureSchema& schema,
                        const CriticDims& dims, const NumStats& stats,
                        const std::string& path, const std::string& trained_with = "") {
    TensorStore store;
    store.metadata["kind"] = "critic";
    store.metadata["schema"] = schema_to_text(schema);
    store.metadata["critic_dims"] = critic_dims_to_text(dims);
    if (!trained_with.empty()) store.metadata["trained_with"] = trained_with;
    CriticParams& mut = const_cast<CriticParams&>(critic);
    store_model(store, "critic", mut);
    add_num_stats(store, stats);
    store.save(path);
}

struct LoadedCritic {
    CriticParams critic;
    FeatureSchema schema;
    CriticDims dims;
    NumStats stats;
    std::string trained_with;
};

inline LoadedCritic load_critic(const std::string& path) {
    TensorStore store = TensorStore::load(path);
    if (!store.metadata.count("kind") || store.metadata.at("kind") != "critic")
        throw ValidationError("load_critic: " + path + " is not a critic checkpoint");
    std::istringstream schema_in(store.metadata.at("schema"));
    LoadedCritic out;
    out.schema = parse_schema(schema_in);
    out.dims = critic_dims_from_text(store.metadata.at("critic_dims"));
    if (store.metadata.count("trained_with"))
        out.trained_with = store.metadata.at("trained_with");
    SeededRng rng(0);
    out.critic = make_critic(out.schema, out.dims, rng);
    load_model(store, "critic", out.critic);
    out.stats = num_stats_from(store);
    return out;
}

}  // namespace rmtl
