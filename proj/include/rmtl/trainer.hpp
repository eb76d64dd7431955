#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rmtl/adam.hpp"
#include "rmtl/metrics.hpp"
#include "rmtl/weights.hpp"

namespace rmtl {

struct Hyperparams {
    double lambda = 0.7;        // punish scale in omega = 1 - lambda * Q
    double beta = 0.2;          // target retention in soft updates
    double gamma = 0.95;        // reward discount
    double decay_rate = 0.99;   // decay schedule per-epoch factor
    double omega0 = 1.0;        // decay schedule start
    double actor_lr = 1e-3;
    double critic_lr = 1e-3;
    double epsilon = 0.05;      // TD-error convergence threshold
    std::size_t batch_size = 256;
    std::size_t epochs = 5;
    std::size_t max_critic_epochs = 2;  // unfreeze the actor after this many epochs regardless
    std::size_t pretrain_epochs = 10;
    std::size_t pretrain_patience = 3;
    std::string td_error_mode = "signed";  // or "mean_abs"
    double divergence_limit = 1e3;
    std::uint64_t seed = 1;

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0) throw ValidationError("hyperparams: lambda outside [0,1]");
        if (beta < 0.0 || beta > 1.0) throw ValidationError("hyperparams: beta outside [0,1]");
        if (gamma < 0.0 || gamma > 1.0) throw ValidationError("hyperparams: gamma outside [0,1]");
        if (actor_lr <= 0.0 || critic_lr <= 0.0)
            throw ValidationError("hyperparams: learning rates must be positive");
        if (epsilon <= 0.0) throw ValidationError("hyperparams: epsilon must be positive");
        if (batch_size == 0) throw ValidationError("hyperparams: batch_size must be positive");
        if (decay_rate <= 0.0 || decay_rate > 1.0)
            throw ValidationError("hyperparams: decay_rate outside (0,1]");
        if (omega0 <= 0.0) throw ValidationError("hyperparams: omega0 must be positive");
        if (td_error_mode != "signed" && td_error_mode != "mean_abs")
            throw ValidationError("hyperparams: td_error_mode must be signed or mean_abs");
        if (divergence_limit <= 0.0)
            throw ValidationError("hyperparams: divergence_limit must be positive");
    }
};

/// rmtl/wl/nlc: critic-gated branching with their weight schedules.
/// cw/decay: supervised-only, no critic. dple: policy-gradient branch only.
enum class TrainMode { Rmtl, Cw, Wl, Nlc, Decay, Dple };

inline const char* to_string(TrainMode m) {
    switch (m) {
        case TrainMode::Rmtl: return "rmtl";
        case TrainMode::Cw: return "cw";
        case TrainMode::Wl: return "wl";
        case TrainMode::Nlc: return "nlc";
        case TrainMode::Decay: return "decay";
        case TrainMode::Dple: return "dple";
    }
    return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
    if (s == "rmtl") return TrainMode::Rmtl;
    if (s == "cw") return TrainMode::Cw;
    if (s == "wl") return TrainMode::Wl;
    if (s == "nlc") return TrainMode::Nlc;
    if (s == "decay") return TrainMode::Decay;
    if (s == "dple") return TrainMode::Dple;
    throw ValidationError("unknown train mode: " + s);
}

inline WeightSchedule mode_schedule(TrainMode m) {
    switch (m) {
        case TrainMode::Cw: return WeightSchedule::Constant;
        case TrainMode::Wl: return WeightSchedule::LabelScaled;
        case TrainMode::Nlc: return WeightSchedule::NegativeQ;
        case TrainMode::Decay: return WeightSchedule::Decay;
        default: return WeightSchedule::Rmtl;
    }
}

inline bool mode_uses_critic(TrainMode m) {
    return m == TrainMode::Rmtl || m == TrainMode::Wl || m == TrainMode::Nlc ||
           m == TrainMode::Dple;
}

// rng stream tags, so optional machinery (critic, pretraining) never shifts
// the draws another consumer sees
inline constexpr std::uint64_t kStreamBatch = 1;
inline constexpr std::uint64_t kStreamDropout = 2;
inline constexpr std::uint64_t kStreamCriticInit = 3;
inline constexpr std::uint64_t kStreamPretrainBatch = 4;
inline constexpr std::uint64_t kStreamPretrainDropout = 5;
inline constexpr std::uint64_t kStreamModelInit = 6;

inline double td_target(double reward, double q_next, bool terminal, double gamma) {
    return reward + (terminal ? 0.0 : gamma * q_next);
}

struct TdBatch {
    Matrix td;  // B x 2 bootstrapped targets
    Matrix q;   // B x 2 estimation-critic values at the stored actions
    double delta_signed = 0.0;
    double delta_mean_abs = 0.0;
};

/// TD targets from the target nets and the signed average TD error
/// delta = mean over all (transition, task) pairs of (TD - Q).
inline TdBatch td_error_batch(const FullModel& target_actor, const CriticParams& critic,
                              const CriticParams& target_critic, const FeatureSchema& schema,
                              const TransitionBatch& batch, double gamma) {
    if (batch.size() == 0) throw ValidationError("td_error_batch: empty batch");
    const std::size_t B = batch.size();
    FeatureBatch fb_cur = batch_features(schema, batch.steps);
    FeatureBatch fb_next = batch_features(schema, batch.next);
    SeededRng nil(0);  // eval mode draws nothing
    Matrix a_next = model_forward(target_actor, fb_next, false, nil);

    TdBatch out;
    out.td = Matrix(B, 2);
    out.q = Matrix(B, 2);
    for (std::size_t k = 0; k < 2; ++k) {
        Vector an(B);
        for (std::size_t i = 0; i < B; ++i) an[i] = a_next(i, k);
        Vector q_next = critic_forward(target_critic, schema, fb_next, an, k);
        Vector q_cur = critic_forward(critic, schema, fb_cur, batch_actions(batch.steps, k), k);
        Vector r = batch_rewards(batch.steps, k);
        for (std::size_t i = 0; i < B; ++i) {
            out.td(i, k) = td_target(r[i], q_next[i], batch.terminal[i] != 0, gamma);
            out.q(i, k) = q_cur[i];
            const double res = out.td(i, k) - out.q(i, k);
            out.delta_signed += res;
            out.delta_mean_abs += std::fabs(res);
        }
    }
    out.delta_signed /= static_cast<double>(2 * B);
    out.delta_mean_abs /= static_cast<double>(2 * B);
    return out;
}

/// Elementwise convex blend target = beta * target + (1 - beta) * online.
template <class M>
void soft_update(M& target, M& online, double beta) {
    if (beta < 0.0 || beta > 1.0) throw ValidationError("soft_update: beta outside [0,1]");
    auto tv = collect_params(target);
    auto ov = collect_params(online);
    if (tv.size() != ov.size()) throw ShapeError("soft_update: block count mismatch");
    for (std::size_t b = 0; b < tv.size(); ++b) {
        if (tv[b].size() != ov[b].size())
            throw ShapeError("soft_update: block size mismatch at " + tv[b].name);
        for (std::size_t i = 0; i < tv[b].size(); ++i)
            tv[b].data[i] = beta * tv[b].data[i] + (1.0 - beta) * ov[b].data[i];
    }
}

struct CriticStepInfo {
    double delta_signed = 0.0;    // computed before the update
    double delta_mean_abs = 0.0;
    double mse = 0.0;
    double max_q = -std::numeric_limits<double>::infinity();
};

/// One fitted-TD step: Adam descent on the mean squared residual
/// (1/(2B)) sum_i sum_k (Q(s_i, a_ik) - TD_ik)^2 with TD held constant.
/// Raises Q toward the target wherever TD > Q, which is what drives the
/// signed average delta to zero.
inline CriticStepInfo critic_update(CriticParams& critic, AdamOpt& opt,
                                    const FullModel& target_actor,
                                    const CriticParams& target_critic,
                                    const FeatureSchema& schema, const TransitionBatch& batch,
                                    double gamma) {
    if (batch.size() == 0) throw ValidationError("critic_update: empty batch");
    const std::size_t B = batch.size();
    TdBatch tb = td_error_batch(target_actor, critic, target_critic, schema, batch, gamma);

    FeatureBatch fb_cur = batch_features(schema, batch.steps);
    CriticParams grads = zeros_like(critic);
    CriticStepInfo info;
    info.delta_signed = tb.delta_signed;
    info.delta_mean_abs = tb.delta_mean_abs;
    for (std::size_t k = 0; k < 2; ++k) {
        CriticCache cache;
        Vector q = critic_forward(critic, schema, fb_cur, batch_actions(batch.steps, k), k,
                                  &cache);
        Vector grad_q(B);
        for (std::size_t i = 0; i < B; ++i) {
            const double res = q[i] - tb.td(i, k);
            info.mse += res * res;
            grad_q[i] = res / static_cast<double>(B);
            info.max_q = std::max(info.max_q, q[i]);
        }
        critic_backward(critic, schema, cache, grad_q, grads);
    }
    info.mse /= static_cast<double>(2 * B);
    if (!std::isfinite(info.mse)) throw NumericError("critic_update: non-finite TD residual");
    opt.step(critic, grads);
    return info;
}

/// Weighted supervised loss (1/(2B)) sum_i sum_k w_ik * bce(a_ik, y_ik).
/// Weights are constants; gradients (if requested) accumulate into `grads`.
inline double weighted_bce_loss(const FullModel& model, const FeatureBatch& fb,
                                const Matrix& labels, const Matrix& weights, bool train,
                                SeededRng& rng, FullModelGrads* grads = nullptr) {
    const std::size_t B = fb.size();
    if (B == 0) throw ValidationError("weighted_bce_loss: empty batch");
    if (labels.rows != B || labels.cols != 2 || weights.rows != B || weights.cols != 2)
        throw ShapeError("weighted_bce_loss: labels/weights must be B x 2");
    for (double w : weights.data)
        if (w < 0.0) throw ValidationError("weighted_bce_loss: negative weight");

    ModelCache cache;
    Matrix actions = model_forward(model, fb, train, rng, grads ? &cache : nullptr);
    const double denom = static_cast<double>(2 * B);
    double loss = 0.0;
    Matrix grad_actions(B, 2);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            loss += weights(i, k) * bce(actions(i, k), labels(i, k));
            if (grads)
                grad_actions(i, k) =
                    weights(i, k) * bce_grad(actions(i, k), labels(i, k)) / denom;
        }
    loss /= denom;
    if (grads) model_backward(model, cache, grad_actions, *grads);
    return loss;
}

/// Policy objective J = (1/(2B)) sum_i sum_k Q_k(s_i, a_ik(theta)), the mean
/// critic value at the actor's own actions. Gradients of -J (for Adam
/// descent, hence ascent on J) accumulate into `grads`; the critic stays
/// frozen, its gradient scratch is discarded.
inline double policy_objective(const FullModel& model, const CriticParams& critic,
                               const FeatureBatch& fb, bool train, SeededRng& rng,
                               FullModelGrads* grads = nullptr) {
    const std::size_t B = fb.size();
    if (B == 0) throw ValidationError("policy_objective: empty batch");
    ModelCache cache;
    Matrix actions = model_forward(model, fb, train, rng, grads ? &cache : nullptr);
    const double denom = static_cast<double>(2 * B);
    double j = 0.0;
    Matrix grad_actions(B, 2);
    CriticParams scratch = zeros_like(critic);
    for (std::size_t k = 0; k < 2; ++k) {
        Vector a(B);
        for (std::size_t i = 0; i < B; ++i) a[i] = actions(i, k);
        CriticCache ccache;
        Vector q = critic_forward(critic, model.schema, fb, a, k, &ccache);
        for (double v : q) j += v;
        Vector grad_q(B, -1.0 / denom);
        Vector grad_a;
        critic_backward(critic, model.schema, ccache, grad_q, scratch, &grad_a);
        for (std::size_t i = 0; i < B; ++i) grad_actions(i, k) = grad_a[i];
    }
    j /= denom;
    if (grads) model_backward(model, cache, grad_actions, *grads);
    return j;
}

struct SplitMetrics {
    double auc_ctr = 0.0, auc_ctcvr = 0.0;
    double logloss_ctr = 0.0, logloss_ctcvr = 0.0;
    double s_logloss_ctr = 0.0, s_logloss_ctcvr = 0.0;
};

struct PredictionRows {
    std::vector<std::string> session;
    std::vector<std::int64_t> timestamp;
    Vector y1, y2, p1, p2;

    std::size_t size() const { return p1.size(); }
};

/// Eval-mode predictions for every row, session by session in dataset order.
inline PredictionRows predict_sessions(const FullModel& model,
                                       const std::vector<Session>& sessions) {
    PredictionRows out;
    SeededRng nil(0);
    for (const auto& s : sessions) {
        if (s.rows.empty()) continue;
        std::vector<const InteractionRow*> ptrs;
        for (const auto& r : s.rows) ptrs.push_back(&r);
        FeatureBatch fb = make_feature_batch(model.schema, ptrs);
        Matrix a = model_forward(model, fb, false, nil);
        for (std::size_t i = 0; i < s.rows.size(); ++i) {
            out.session.push_back(s.id);
            out.timestamp.push_back(s.rows[i].timestamp);
            out.p1.push_back(a(i, 0));
            out.p2.push_back(a(i, 1));
            out.y1.push_back(s.rows[i].y_click);
            out.y2.push_back(s.rows[i].y_convert);
        }
    }
    return out;
}

inline SplitMetrics metrics_from(const PredictionRows& rows) {
    if (rows.size() == 0) throw ValidationError("metrics_from: no predictions");
    SplitMetrics m;
    m.auc_ctr = auc_or(rows.p1, rows.y1, 0.5);
    m.auc_ctcvr = auc_or(rows.p2, rows.y2, 0.5);
    m.logloss_ctr = logloss(rows.p1, rows.y1);
    m.logloss_ctcvr = logloss(rows.p2, rows.y2);

    std::vector<Vector> s1, l1, s2, l2;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 || rows.session[i] != rows.session[i - 1]) {
            s1.emplace_back();
            l1.emplace_back();
            s2.emplace_back();
            l2.emplace_back();
        }
        s1.back().push_back(rows.p1[i]);
        l1.back().push_back(rows.y1[i]);
        s2.back().push_back(rows.p2[i]);
        l2.back().push_back(rows.y2[i]);
    }
    m.s_logloss_ctr = s_logloss(s1, l1);
    m.s_logloss_ctcvr = s_logloss(s2, l2);
    return m;
}

inline SplitMetrics evaluate_sessions(const FullModel& model,
                                      const std::vector<Session>& sessions) {
    return metrics_from(predict_sessions(model, sessions));
}

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = std::numeric_limits<double>::quiet_NaN();
    double policy_objective_mean = std::numeric_limits<double>::quiet_NaN();
    double delta_mean = 0.0;
    double delta_abs_mean = 0.0;
    std::size_t critic_batches = 0;
    std::size_t policy_batches = 0;
    std::size_t weighted_batches = 0;
    double mean_weight = std::numeric_limits<double>::quiet_NaN();
    SplitMetrics val;
};

struct PretrainResult {
    FullModel model;
    std::vector<EpochLog> log;
    double best_val_auc = -1.0;
    std::size_t best_epoch = 0;
};

/// Supervised warm start: constant weights, Adam, dropout active; keeps the
/// epoch checkpoint with the best mean validation AUC, early-stopping after
/// `pretrain_patience` epochs without improvement.
inline PretrainResult pretrain_actor(FullModel model, const std::vector<Session>& train_sessions,
                                     const std::vector<Session>& val_sessions,
                                     const Hyperparams& hp) {
    hp.validate();
    std::vector<const InteractionRow*> rows;
    for (const auto& s : train_sessions)
        for (const auto& r : s.rows) rows.push_back(&r);
    if (rows.empty()) throw ValidationError("pretrain_actor: no training rows");

    SeededRng root(hp.seed);
    SeededRng batch_rng = root.stream(kStreamPretrainBatch);
    SeededRng drop_rng = root.stream(kStreamPretrainDropout);
    AdamOpt opt(hp.actor_lr);

    PretrainResult res{model, {}, -1.0, 0};
    std::size_t stale = 0;
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < hp.pretrain_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[batch_rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t stop = std::min(order.size(), start + hp.batch_size);
            std::vector<const InteractionRow*> chunk;
            for (std::size_t i = start; i < stop; ++i) chunk.push_back(rows[order[i]]);
            FeatureBatch fb = make_feature_batch(model.schema, chunk);
            Matrix labels(chunk.size(), 2);
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                labels(i, 0) = chunk[i]->y_click;
                labels(i, 1) = chunk[i]->y_convert;
            }
            FullModelGrads grads = zeros_like(model);
            const double loss = weighted_bce_loss(model, fb, labels, Matrix(chunk.size(), 2, 1.0),
                                                  true, drop_rng, &grads);
            if (!std::isfinite(loss) || loss > hp.divergence_limit)
                throw NumericError("pretrain_actor: diverged, loss=" + std::to_string(loss));
            opt.step(model, grads);
            loss_sum += loss;
            ++batches;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(batches);
        log.weighted_batches = batches;
        log.mean_weight = 1.0;
        log.val = evaluate_sessions(model, val_sessions);
        res.log.push_back(log);

        const double score = 0.5 * (log.val.auc_ctr + log.val.auc_ctcvr);
        if (score > res.best_val_auc) {
            res.best_val_auc = score;
            res.best_epoch = epoch;
            res.model = model;
            stale = 0;
        } else if (++stale >= hp.pretrain_patience) {
            break;
        }
    }
    return res;
}

struct TrainHooks {
    std::function<void(const FullModel&, std::size_t epoch, std::size_t batch)>
        after_actor_update;
};

struct TrainResult {
    FullModel model;
    CriticParams critic;
    bool has_critic = false;
    std::vector<EpochLog> log;
    double min_weight = std::numeric_limits<double>::infinity();
    double max_q = -std::numeric_limits<double>::infinity();
    std::size_t weight_violations = 0;
    std::size_t q_violations = 0;
    std::size_t actor_updates = 0;
    std::size_t critic_updates = 0;
};

/// The two-phase RL training loop. Each epoch re-rolls every training session
/// into the replay buffer under the current policy, then per sampled batch:
/// update critics on the TD residual, soft-update targets, and (once the
/// critics have converged, |delta| < epsilon, or max_critic_epochs passed)
/// update the actor by the policy gradient when |delta| >= epsilon and by the
/// weighted BCE loss otherwise. Sessions must already be standardized.
inline TrainResult train_model(FullModel model, const std::vector<Session>& train_sessions,
                               const std::vector<Session>& val_sessions, TrainMode mode,
                               const Hyperparams& hp, const CriticDims& critic_dims,
                               const CriticParams* warm_critic = nullptr,
                               const TrainHooks* hooks = nullptr) {
    hp.validate();
    if (train_sessions.empty()) throw ValidationError("train_model: no training sessions");
    const bool use_critic = mode_uses_critic(mode);
    const FeatureSchema& schema = model.schema;

    SeededRng root(hp.seed);
    SeededRng batch_rng = root.stream(kStreamBatch);
    SeededRng drop_rng = root.stream(kStreamDropout);

    TrainResult res;
    res.has_critic = use_critic;
    if (use_critic) {
        if (warm_critic) {
            res.critic = *warm_critic;
        } else {
            SeededRng crng = root.stream(kStreamCriticInit);
            res.critic = make_critic(schema, critic_dims, crng);
        }
    }
    CriticParams target_critic = res.critic;
    FullModel target_actor = model;
    AdamOpt actor_opt(hp.actor_lr);
    AdamOpt critic_opt(hp.critic_lr);
    WeightParams wp{mode_schedule(mode), hp.lambda, hp.omega0, hp.decay_rate};

    ReplayBuffer buffer;
    bool warmed = !use_critic;

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        buffer.clear();
        for (const auto& s : train_sessions) buffer.push(build_episode(model, s));
        const std::size_t n_batches =
            (buffer.transition_count() + hp.batch_size - 1) / hp.batch_size;

        EpochLog log;
        log.epoch = epoch;
        double loss_sum = 0.0, j_sum = 0.0, delta_sum = 0.0, delta_abs_sum = 0.0;
        double weight_sum = 0.0;
        std::size_t weight_count = 0;

        for (std::size_t b = 0; b < n_batches; ++b) {
            TransitionBatch tb = sample_transitions(buffer, hp.batch_size, batch_rng);
            double gate = 0.0;
            if (use_critic) {
                CriticStepInfo info = critic_update(res.critic, critic_opt, target_actor,
                                                    target_critic, schema, tb, hp.gamma);
                ++res.critic_updates;
                ++log.critic_batches;
                delta_sum += info.delta_signed;
                delta_abs_sum += info.delta_mean_abs;
                res.max_q = std::max(res.max_q, info.max_q);
                if (info.max_q > 0.0) ++res.q_violations;
                soft_update(target_critic, res.critic, hp.beta);
                gate = hp.td_error_mode == "mean_abs" ? info.delta_mean_abs
                                                      : std::fabs(info.delta_signed);
                if (!warmed && (gate < hp.epsilon || epoch >= hp.max_critic_epochs))
                    warmed = true;
            }
            if (!warmed) continue;

            const bool policy_branch =
                use_critic && (mode == TrainMode::Dple || gate >= hp.epsilon);
            FeatureBatch fb = batch_features(schema, tb.steps);
            FullModelGrads grads = zeros_like(model);
            if (policy_branch) {
                const double j = policy_objective(model, res.critic, fb, true, drop_rng, &grads);
                if (!std::isfinite(j) || std::fabs(j) > hp.divergence_limit)
                    throw NumericError("train_model: diverged, J=" + std::to_string(j));
                j_sum += j;
                ++log.policy_batches;
            } else {
                Matrix w = compute_weights(wp, use_critic ? &res.critic : nullptr, schema, tb,
                                           epoch);
                const double floor = schedule_weight_floor(wp.kind);
                for (double v : w.data) {
                    res.min_weight = std::min(res.min_weight, v);
                    if (v < floor) ++res.weight_violations;
                    weight_sum += v;
                    ++weight_count;
                }
                Matrix labels = batch_labels(tb.steps);
                const double loss = weighted_bce_loss(model, fb, labels, w, true, drop_rng,
                                                      &grads);
                if (!std::isfinite(loss) || loss > hp.divergence_limit)
                    throw NumericError("train_model: diverged, loss=" + std::to_string(loss));
                loss_sum += loss;
                ++log.weighted_batches;
            }
            actor_opt.step(model, grads);
            ++res.actor_updates;
            if (hooks && hooks->after_actor_update)
                hooks->after_actor_update(model, epoch, b);
            if (use_critic) soft_update(target_actor, model, hp.beta);
        }

        if (log.weighted_batches > 0)
            log.train_loss = loss_sum / static_cast<double>(log.weighted_batches);
        if (log.policy_batches > 0)
            log.policy_objective_mean = j_sum / static_cast<double>(log.policy_batches);
        if (log.critic_batches > 0) {
            log.delta_mean = delta_sum / static_cast<double>(log.critic_batches);
            log.delta_abs_mean = delta_abs_sum / static_cast<double>(log.critic_batches);
        }
        if (weight_count > 0) log.mean_weight = weight_sum / static_cast<double>(weight_count);
        log.val = evaluate_sessions(model, val_sessions);
        res.log.push_back(log);
    }
    res.model = std::move(model);
    return res;
}

}  // namespace rmtl
