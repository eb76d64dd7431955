#pragma once

#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "rmtl/dataset.hpp"
#include "rmtl/loss.hpp"
#include "rmtl/model.hpp"

namespace rmtl {

/// One interaction inside an episode: the raw feature row, the actions the
/// behavior policy took for it, and the per-task rewards.
struct EpisodeStep {
    InteractionRow row;
    double a1 = 0.0;  // pCTR
    double a2 = 0.0;  // pCTCVR
    double r1 = 0.0;
    double r2 = 0.0;
};

/// A session rolled out under a fixed policy. Step t transitions to step t+1;
/// the last step is terminal.
struct Episode {
    std::string session_id;
    std::vector<EpisodeStep> steps;

    std::size_t length() const { return steps.size(); }
};

inline double step_reward(double action, double label) { return -bce(action, label); }

/// Roll a session through the model in eval mode (one batched forward) and
/// attach rewards. Rows are copied so the episode outlives the dataset.
inline Episode build_episode(const FullModel& model, const Session& session) {
    if (session.rows.empty()) throw ValidationError("build_episode: empty session");
    std::vector<const InteractionRow*> ptrs;
    ptrs.reserve(session.rows.size());
    for (const auto& r : session.rows) ptrs.push_back(&r);
    FeatureBatch batch = make_feature_batch(model.schema, ptrs);
    SeededRng rng(0);  // eval mode draws nothing
    Matrix actions = model_forward(model, batch, false, rng);

    Episode ep;
    ep.session_id = session.id;
    ep.steps.reserve(session.rows.size());
    for (std::size_t i = 0; i < session.rows.size(); ++i) {
        EpisodeStep s;
        s.row = session.rows[i];
        s.a1 = actions(i, 0);
        s.a2 = actions(i, 1);
        s.r1 = step_reward(s.a1, s.row.y_click);
        s.r2 = step_reward(s.a2, s.row.y_convert);
        ep.steps.push_back(std::move(s));
    }
    return ep;
}

/// FIFO store of whole episodes. `max_episodes` of 0 means unbounded.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t max_episodes = 0) : max_episodes_(max_episodes) {}

    void push(Episode ep) {
        transitions_ += ep.length();
        episodes_.push_back(std::move(ep));
        while (max_episodes_ > 0 && episodes_.size() > max_episodes_) {
            transitions_ -= episodes_.front().length();
            episodes_.pop_front();
        }
    }

    void clear() {
        episodes_.clear();
        transitions_ = 0;
    }

    std::size_t episode_count() const { return episodes_.size(); }
    std::size_t transition_count() const { return transitions_; }
    const std::deque<Episode>& episodes() const { return episodes_; }

  private:
    std::size_t max_episodes_ = 0;
    std::deque<Episode> episodes_;
    std::size_t transitions_ = 0;
};

/// A minibatch of transitions (s_t, a_t, r_t, s_{t+1}). `next[i]` repeats the
/// step itself when `terminal[i]` is set, so the column always featurizes;
/// targets must zero the bootstrap term instead of reading it. Steps are
/// copies, so the batch stays valid if the buffer evicts.
struct TransitionBatch {
    std::vector<EpisodeStep> steps;
    std::vector<EpisodeStep> next;
    std::vector<char> terminal;

    std::size_t size() const { return steps.size(); }
};

/// Draw distinct episodes uniformly and append them whole, in time order,
/// until at least `min_transitions` transitions are gathered or the buffer is
/// exhausted.
inline TransitionBatch sample_transitions(const ReplayBuffer& buffer,
                                          std::size_t min_transitions, SeededRng& rng) {
    if (buffer.episode_count() == 0)
        throw StateError("sample_transitions: replay buffer is empty");
    std::vector<std::size_t> order(buffer.episode_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TransitionBatch batch;
    std::size_t remaining = order.size();
    while (batch.size() < min_transitions && remaining > 0) {
        const std::size_t pick = rng.below(remaining);
        std::swap(order[pick], order[remaining - 1]);
        const Episode& ep = buffer.episodes()[order[--remaining]];
        for (std::size_t t = 0; t < ep.steps.size(); ++t) {
            batch.steps.push_back(ep.steps[t]);
            const bool last = t + 1 == ep.steps.size();
            batch.next.push_back(last ? ep.steps[t] : ep.steps[t + 1]);
            batch.terminal.push_back(last ? 1 : 0);
        }
    }
    return batch;
}

inline FeatureBatch batch_features(const FeatureSchema& schema,
                                   const std::vector<EpisodeStep>& steps) {
    std::vector<const InteractionRow*> ptrs;
    ptrs.reserve(steps.size());
    for (const auto& s : steps) ptrs.push_back(&s.row);
    return make_feature_batch(schema, ptrs);
}

/// Labels as a B x 2 matrix: column 0 click, column 1 conversion.
inline Matrix batch_labels(const std::vector<EpisodeStep>& steps) {
    Matrix y(steps.size(), 2);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        y(i, 0) = steps[i].row.y_click;
        y(i, 1) = steps[i].row.y_convert;
    }
    return y;
}

inline Vector batch_actions(const std::vector<EpisodeStep>& steps, std::size_t task) {
    if (task >= 2) throw ValidationError("batch_actions: task index out of range");
    Vector a(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) a[i] = task == 0 ? steps[i].a1 : steps[i].a2;
    return a;
}

inline Vector batch_rewards(const std::vector<EpisodeStep>& steps, std::size_t task) {
    if (task >= 2) throw ValidationError("batch_rewards: task index out of range");
    Vector r(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) r[i] = task == 0 ? steps[i].r1 : steps[i].r2;
    return r;
}

}  // namespace rmtl
