#pragma once

#include <cmath>
#include <string>

#include "rmtl/critic.hpp"
#include "rmtl/mdp.hpp"

namespace rmtl {

/// Per-task loss-weight schedules. `Rmtl` is the adaptive schedule; the rest
/// are baselines: constant (CW), label-scaled Q (WL), raw negative Q (NLC),
/// and epoch-indexed exponential decay.
enum class WeightSchedule { Rmtl, Constant, LabelScaled, NegativeQ, Decay };

inline const char* to_string(WeightSchedule k) {
    switch (k) {
        case WeightSchedule::Rmtl: return "rmtl";
        case WeightSchedule::Constant: return "constant";
        case WeightSchedule::LabelScaled: return "label_scaled";
        case WeightSchedule::NegativeQ: return "negative_q";
        case WeightSchedule::Decay: return "decay";
    }
    return "?";
}

inline WeightSchedule weight_schedule_from_string(const std::string& s) {
    if (s == "rmtl") return WeightSchedule::Rmtl;
    if (s == "constant" || s == "cw") return WeightSchedule::Constant;
    if (s == "label_scaled" || s == "wl") return WeightSchedule::LabelScaled;
    if (s == "negative_q" || s == "nlc") return WeightSchedule::NegativeQ;
    if (s == "decay") return WeightSchedule::Decay;
    throw ValidationError("unknown weight schedule: " + s);
}

inline bool schedule_needs_critic(WeightSchedule k) {
    return k == WeightSchedule::Rmtl || k == WeightSchedule::LabelScaled ||
           k == WeightSchedule::NegativeQ;
}

struct WeightParams {
    WeightSchedule kind = WeightSchedule::Rmtl;
    double lambda = 0.7;
    double omega0 = 1.0;      // decay start
    double decay_rate = 0.99; // per-epoch factor
};

/// Weight for one (transition, task) pair. `q` is ignored by the critic-free
/// schedules and `epoch` only matters for decay.
inline double schedule_weight(const WeightParams& wp, double q, double label,
                              std::size_t epoch) {
    switch (wp.kind) {
        case WeightSchedule::Rmtl: return 1.0 - wp.lambda * q;
        case WeightSchedule::Constant: return 1.0;
        case WeightSchedule::LabelScaled: return 1.0 - wp.lambda * label * q;
        case WeightSchedule::NegativeQ: return -q;
        case WeightSchedule::Decay:
            return wp.omega0 * std::pow(wp.decay_rate, static_cast<double>(epoch));
    }
    throw ValidationError("schedule_weight: unknown schedule kind");
}

/// Lower bound the schedule guarantees (given Q <= 0); used to count
/// violations during training.
inline double schedule_weight_floor(WeightSchedule k) {
    switch (k) {
        case WeightSchedule::Rmtl:
        case WeightSchedule::Constant:
        case WeightSchedule::LabelScaled: return 1.0;
        case WeightSchedule::NegativeQ:
        case WeightSchedule::Decay: return 0.0;
    }
    return 0.0;
}

/// B x 2 weights for a transition batch. Q values are taken from the
/// estimation critic at the stored behavior actions and treated as constants.
inline Matrix compute_weights(const WeightParams& wp, const CriticParams* critic,
                              const FeatureSchema& schema, const TransitionBatch& batch,
                              std::size_t epoch) {
    if (batch.size() == 0) throw ValidationError("compute_weights: empty batch");
    Matrix w(batch.size(), 2);
    if (!schedule_needs_critic(wp.kind)) {
        Matrix y = batch_labels(batch.steps);
        for (std::size_t i = 0; i < batch.size(); ++i)
            for (std::size_t k = 0; k < 2; ++k)
                w(i, k) = schedule_weight(wp, 0.0, y(i, k), epoch);
        return w;
    }
    if (critic == nullptr)
        throw StateError(std::string("compute_weights: schedule '") + to_string(wp.kind) +
                         "' requires a critic");
    FeatureBatch fb = batch_features(schema, batch.steps);
    Matrix y = batch_labels(batch.steps);
    for (std::size_t k = 0; k < 2; ++k) {
        Vector actions = batch_actions(batch.steps, k);
        Vector q = critic_forward(*critic, schema, fb, actions, k);
        for (std::size_t i = 0; i < batch.size(); ++i)
            w(i, k) = schedule_weight(wp, q[i], y(i, k), epoch);
    }
    return w;
}

}  // namespace rmtl
