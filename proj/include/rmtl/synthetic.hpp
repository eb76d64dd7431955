#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "rmtl/dataset.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

/// Generative model for the built-in benchmark. Each user carries a latent
/// type alpha in {-user_scale, 0, +user_scale}, each item a type beta in
/// {-item_scale, 0, +item_scale}, each channel a fixed ramp offset, and each
/// session a mood in {-mood, +mood}. Row labels:
///   click   ~ Bernoulli(sigmoid(bias_click + alpha + beta + gamma_ch + mood))
///   convert ~ click * Bernoulli(sigmoid(bias_conv + kappa*(alpha+beta) + gamma_ch + mood))
/// The shared kappa*(alpha+beta) term correlates the two tasks. Numerical
/// features: affinity = alpha + beta + noise, plus a pure-noise column.
struct SyntheticSpec {
    std::size_t users = 200;
    std::size_t items = 500;
    std::size_t sessions = 2000;
    std::size_t min_len = 3;
    std::size_t max_len = 8;
    std::size_t channels = 4;
    double user_scale = 1.0;
    double item_scale = 0.6;
    double chan_scale = 0.3;
    double mood = 0.5;
    double kappa = 1.0;
    double bias_click = -1.0;
    double bias_conv = -1.2;
    double affinity_noise = 0.5;
    std::size_t schema_embed_dim = 16;

    void validate() const {
        if (users < 1 || items < 1 || sessions < 1 || channels < 1)
            throw ValidationError("synthetic: counts must be >= 1");
        if (min_len < 1 || max_len < min_len)
            throw ValidationError("synthetic: need 1 <= min_len <= max_len");
    }

    double channel_offset(std::size_t ch) const {
        if (channels == 1) return 0.0;
        const double ramp = 2.0 * static_cast<double>(ch) /
                                static_cast<double>(channels - 1) - 1.0;
        return chan_scale * ramp;
    }

    /// Exact marginal click rate: enumeration over the discrete latent grid.
    double analytic_click_mean() const {
        auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
        double total = 0.0;
        std::size_t terms = 0;
        for (int ua = -1; ua <= 1; ++ua)
            for (int ib = -1; ib <= 1; ++ib)
                for (std::size_t ch = 0; ch < channels; ++ch)
                    for (int m = -1; m <= 1; m += 2) {
                        const double logit = bias_click + ua * user_scale + ib * item_scale +
                                             channel_offset(ch) + m * mood;
                        total += sigmoid(logit);
                        ++terms;
                    }
        return total / static_cast<double>(terms);
    }

    /// Exact marginal click-and-convert rate over the same grid.
    double analytic_ctcvr_mean() const {
        auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
        double total = 0.0;
        std::size_t terms = 0;
        for (int ua = -1; ua <= 1; ++ua)
            for (int ib = -1; ib <= 1; ++ib)
                for (std::size_t ch = 0; ch < channels; ++ch)
                    for (int m = -1; m <= 1; m += 2) {
                        const double shared = ua * user_scale + ib * item_scale;
                        const double lc =
                            bias_click + shared + channel_offset(ch) + m * mood;
                        const double lv =
                            bias_conv + kappa * shared + channel_offset(ch) + m * mood;
                        total += sigmoid(lc) * sigmoid(lv);
                        ++terms;
                    }
        return total / static_cast<double>(terms);
    }
};

inline SessionDataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    SeededRng base(seed);
    SeededRng user_rng = base.stream(1);
    SeededRng item_rng = base.stream(2);
    SeededRng row_rng = base.stream(3);

    std::vector<double> alpha(spec.users);
    for (auto& a : alpha)
        a = (static_cast<double>(user_rng.below(3)) - 1.0) * spec.user_scale;
    std::vector<double> beta(spec.items);
    for (auto& b : beta)
        b = (static_cast<double>(item_rng.below(3)) - 1.0) * spec.item_scale;

    auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

    FeatureSchema schema;
    schema.user_vocab = spec.users;
    schema.item_vocab = spec.items;
    schema.cat_fields = {{"channel", spec.channels}};
    schema.num_fields = {"affinity", "noise"};
    schema.embed_dim = spec.schema_embed_dim;

    std::vector<InteractionRow> rows;
    char sid[24];
    for (std::size_t s = 0; s < spec.sessions; ++s) {
        std::snprintf(sid, sizeof(sid), "s%07zu", s);
        const std::uint64_t user = row_rng.below(spec.users);
        const std::size_t len =
            spec.min_len + row_rng.below(spec.max_len - spec.min_len + 1);
        const double mood = row_rng.below(2) ? spec.mood : -spec.mood;
        for (std::size_t t = 0; t < len; ++t) {
            InteractionRow r;
            r.session_id = sid;
            r.timestamp = static_cast<std::int64_t>(s) * 10000 + static_cast<std::int64_t>(t);
            r.user_id = user;
            r.item_id = row_rng.below(spec.items);
            const std::uint64_t ch = row_rng.below(spec.channels);
            r.cats = {ch};
            const double shared = alpha[user] + beta[r.item_id];
            const double lc = spec.bias_click + shared + spec.channel_offset(ch) + mood;
            const double lv =
                spec.bias_conv + spec.kappa * shared + spec.channel_offset(ch) + mood;
            r.y_click = row_rng.bernoulli(sigmoid(lc)) ? 1 : 0;
            r.y_convert = (r.y_click && row_rng.bernoulli(sigmoid(lv))) ? 1 : 0;
            r.nums = {shared + row_rng.normal(0.0, spec.affinity_noise),
                      row_rng.normal(0.0, 1.0)};
            rows.push_back(std::move(r));
        }
    }
    return assemble_sessions(schema, std::move(rows));
}

}  // namespace rmtl
