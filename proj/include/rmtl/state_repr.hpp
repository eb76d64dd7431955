#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmtl/dataset.hpp"
#include "rmtl/embedding.hpp"
#include "rmtl/mlp.hpp"
#include "rmtl/schema.hpp"

namespace rmtl {

/// Column-oriented view of a batch of rows, ready for embedding lookups.
struct FeatureBatch {
    std::vector<std::uint64_t> users;
    std::vector<std::uint64_t> items;
    std::vector<std::vector<std::uint64_t>> cats;  // one vector per cat field
    Matrix nums;                                   // B x num_field_count

    std::size_t size() const { return users.size(); }
};

inline FeatureBatch make_feature_batch(const FeatureSchema& schema,
                                       const std::vector<const InteractionRow*>& rows) {
    FeatureBatch b;
    const std::size_t n = rows.size();
    b.users.reserve(n);
    b.items.reserve(n);
    b.cats.resize(schema.cat_fields.size());
    for (auto& c : b.cats) c.reserve(n);
    b.nums = Matrix(n, schema.num_fields.size());
    for (std::size_t i = 0; i < n; ++i) {
        const InteractionRow& r = *rows[i];
        if (r.cats.size() != schema.cat_fields.size() ||
            r.nums.size() != schema.num_fields.size())
            throw ValidationError("make_feature_batch: row does not match schema");
        b.users.push_back(r.user_id);
        b.items.push_back(r.item_id);
        for (std::size_t c = 0; c < r.cats.size(); ++c) b.cats[c].push_back(r.cats[c]);
        for (std::size_t c = 0; c < r.nums.size(); ++c) b.nums(i, c) = r.nums[c];
    }
    return b;
}

inline FeatureBatch make_feature_batch(const FeatureSchema& schema,
                                       const std::vector<InteractionRow>& rows) {
    std::vector<const InteractionRow*> ptrs;
    ptrs.reserve(rows.size());
    for (const auto& r : rows) ptrs.push_back(&r);
    return make_feature_batch(schema, ptrs);
}

struct ReprDims {
    std::size_t embed_dim = 128;
    std::size_t proj_dim = 128;
    std::vector<std::size_t> bottom{512, 256};
    double dropout = 0.2;

    std::size_t state_dim() const { return bottom.back(); }
};

/// State representation network F(f(x)): per-field embeddings, a linear map
/// of the numeric block to embedding width, concatenation, a linear projection
/// to proj_dim, then the bottom MLP.
struct StateReprParams {
    EmbeddingTable user_emb;
    EmbeddingTable item_emb;
    std::vector<EmbeddingTable> cat_embs;
    Matrix num_proj;           // num_count x embed_dim; empty when no num fields
    Vector num_proj_bias;
    Matrix field_proj;         // concat_dim x proj_dim
    Vector field_proj_bias;
    MlpParams bottom;

    std::size_t state_dim() const { return bottom.out_dim(); }

    template <class F>
    void for_each_param(const std::string& prefix, F&& f) {
        user_emb.for_each_param(prefix + ".user_emb", f);
        item_emb.for_each_param(prefix + ".item_emb", f);
        for (std::size_t i = 0; i < cat_embs.size(); ++i)
            cat_embs[i].for_each_param(prefix + ".cat_emb" + std::to_string(i), f);
        if (!num_proj.empty()) {
            f(prefix + ".num_proj.W", num_proj.rows, num_proj.cols, num_proj.data.data());
            f(prefix + ".num_proj.b", std::size_t{1}, num_proj_bias.size(),
              num_proj_bias.data());
        }
        f(prefix + ".field_proj.W", field_proj.rows, field_proj.cols, field_proj.data.data());
        f(prefix + ".field_proj.b", std::size_t{1}, field_proj_bias.size(),
          field_proj_bias.data());
        bottom.for_each_param(prefix + ".bottom", f);
    }
};

inline StateReprParams make_state_repr(const FeatureSchema& schema, const ReprDims& dims,
                                       SeededRng& rng) {
    schema.validate();
    StateReprParams p;
    p.user_emb = EmbeddingTable::init(schema.user_vocab, dims.embed_dim, rng);
    p.item_emb = EmbeddingTable::init(schema.item_vocab, dims.embed_dim, rng);
    for (const auto& f : schema.cat_fields)
        p.cat_embs.push_back(EmbeddingTable::init(f.vocab, dims.embed_dim, rng));
    std::size_t fields = 2 + schema.cat_fields.size();
    if (!schema.num_fields.empty()) {
        p.num_proj = Matrix(schema.num_fields.size(), dims.embed_dim);
        glorot_uniform(p.num_proj, rng);
        p.num_proj_bias.assign(dims.embed_dim, 0.0);
        ++fields;
    }
    p.field_proj = Matrix(fields * dims.embed_dim, dims.proj_dim);
    glorot_uniform(p.field_proj, rng);
    p.field_proj_bias.assign(dims.proj_dim, 0.0);
    std::vector<std::size_t> bdims{dims.proj_dim};
    bdims.insert(bdims.end(), dims.bottom.begin(), dims.bottom.end());
    p.bottom = make_mlp(bdims, Activation::Relu, Activation::Relu, dims.dropout, rng);
    return p;
}

struct ReprCache {
    FeatureBatch batch;
    Matrix concat;   // B x concat_dim
    MlpCache bottom;
};

inline Matrix repr_forward(const StateReprParams& p, const FeatureSchema& schema,
                           const FeatureBatch& batch, bool train, SeededRng& rng,
                           ReprCache* cache = nullptr) {
    if (batch.cats.size() != schema.cat_fields.size())
        throw ValidationError("repr_forward: batch does not match schema");
    std::vector<Matrix> blocks;
    blocks.push_back(embed_forward(p.user_emb, batch.users));
    blocks.push_back(embed_forward(p.item_emb, batch.items));
    for (std::size_t c = 0; c < p.cat_embs.size(); ++c)
        blocks.push_back(embed_forward(p.cat_embs[c], batch.cats[c]));
    if (!p.num_proj.empty()) {
        require_finite(batch.nums, "repr_forward numeric features");
        Matrix nv = matmul(batch.nums, p.num_proj);
        add_row_inplace(nv, p.num_proj_bias);
        blocks.push_back(std::move(nv));
    }
    std::vector<const Matrix*> ptrs;
    for (const auto& b : blocks) ptrs.push_back(&b);
    Matrix concat = hconcat(ptrs);
    Matrix proj = matmul(concat, p.field_proj);
    add_row_inplace(proj, p.field_proj_bias);
    Matrix state =
        mlp_forward(p.bottom, proj, train, rng, cache ? &cache->bottom : nullptr);
    if (cache) {
        cache->batch = batch;
        cache->concat = std::move(concat);
    }
    return state;
}

inline StateReprParams zeros_like(const StateReprParams& p) {
    StateReprParams z = p;
    z.user_emb = zeros_like(p.user_emb);
    z.item_emb = zeros_like(p.item_emb);
    for (std::size_t i = 0; i < p.cat_embs.size(); ++i)
        z.cat_embs[i] = zeros_like(p.cat_embs[i]);
    z.num_proj.fill(0.0);
    std::fill(z.num_proj_bias.begin(), z.num_proj_bias.end(), 0.0);
    z.field_proj.fill(0.0);
    std::fill(z.field_proj_bias.begin(), z.field_proj_bias.end(), 0.0);
    z.bottom = zeros_like(p.bottom);
    return z;
}

/// Accumulates into `grads`. Gradients w.r.t. raw numeric inputs are not
/// produced (inputs are data, not parameters).
inline void repr_backward(const StateReprParams& p, const ReprCache& cache,
                          const Matrix& grad_state, StateReprParams& grads) {
    Matrix grad_proj = mlp_backward(p.bottom, cache.bottom, grad_state, grads.bottom);
    Matrix gw = matmul_tn(cache.concat, grad_proj);
    for (std::size_t i = 0; i < gw.size(); ++i) grads.field_proj.data[i] += gw.data[i];
    Vector gb = col_sums(grad_proj);
    for (std::size_t i = 0; i < gb.size(); ++i) grads.field_proj_bias[i] += gb[i];
    Matrix grad_concat = matmul_nt(grad_proj, p.field_proj);

    const std::size_t d = p.user_emb.dim;
    const std::size_t B = grad_concat.rows;
    std::size_t off = 0;
    auto slice = [&](std::size_t width) {
        Matrix m(B, width);
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < width; ++j) m(i, j) = grad_concat(i, off + j);
        off += width;
        return m;
    };
    embed_backward(p.user_emb, cache.batch.users, slice(d), grads.user_emb);
    embed_backward(p.item_emb, cache.batch.items, slice(d), grads.item_emb);
    for (std::size_t c = 0; c < p.cat_embs.size(); ++c)
        embed_backward(p.cat_embs[c], cache.batch.cats[c], slice(d), grads.cat_embs[c]);
    if (!p.num_proj.empty()) {
        Matrix gn = slice(d);
        Matrix gnw = matmul_tn(cache.batch.nums, gn);
        for (std::size_t i = 0; i < gnw.size(); ++i) grads.num_proj.data[i] += gnw.data[i];
        Vector gnb = col_sums(gn);
        for (std::size_t i = 0; i < gnb.size(); ++i) grads.num_proj_bias[i] += gnb[i];
    }
}

}  // namespace rmtl
