#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "rmtl/errors.hpp"
#include "rmtl/loss.hpp"
#include "rmtl/matrix.hpp"

namespace rmtl {

/// Rank-based (Mann-Whitney) AUC with average ranks over ties, so each tied
/// positive-negative pair contributes 0.5.
inline double auc(const Vector& scores, const Vector& labels) {
    if (scores.size() != labels.size()) throw ShapeError("auc: scores/labels size mismatch");
    if (scores.empty()) throw ValidationError("auc: empty input");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (std::size_t k = i; k <= j; ++k) {
            require_binary_label(labels[order[k]], "auc");
            if (labels[order[k]] == 1.0) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j + 1;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("auc: labels are single-class");
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// auc, except single-class labels yield `fallback` instead of throwing. For
/// scoring inside training loops, where a conversion-free validation split
/// should not abort the run.
inline double auc_or(const Vector& scores, const Vector& labels, double fallback) {
    bool has_pos = false, has_neg = false;
    for (double y : labels) {
        require_binary_label(y, "auc_or");
        (y == 1.0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) return fallback;
    return auc(scores, labels);
}

/// O(P*N) reference: every positive-negative pair scores 1 for a win, 0.5 for
/// a tie.
inline double brute_force_auc(const Vector& scores, const Vector& labels) {
    if (scores.size() != labels.size())
        throw ShapeError("brute_force_auc: scores/labels size mismatch");
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t p = 0; p < scores.size(); ++p) {
        require_binary_label(labels[p], "brute_force_auc");
        if (labels[p] != 1.0) continue;
        for (std::size_t q = 0; q < scores.size(); ++q) {
            if (labels[q] != 0.0) continue;
            ++pairs;
            if (scores[p] > scores[q])
                wins += 1.0;
            else if (scores[p] == scores[q])
                wins += 0.5;
        }
    }
    if (pairs == 0) throw ValidationError("brute_force_auc: labels are single-class");
    return wins / static_cast<double>(pairs);
}

inline double logloss(const Vector& scores, const Vector& labels) {
    if (scores.size() != labels.size()) throw ShapeError("logloss: scores/labels size mismatch");
    if (scores.empty()) throw ValidationError("logloss: empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) total += bce(scores[i], labels[i]);
    return total / static_cast<double>(scores.size());
}

/// Mean BCE inside each session first, then an unweighted mean over sessions,
/// so long sessions do not dominate.
inline double s_logloss(const std::vector<Vector>& scores_by_session,
                        const std::vector<Vector>& labels_by_session) {
    if (scores_by_session.size() != labels_by_session.size())
        throw ShapeError("s_logloss: session count mismatch");
    if (scores_by_session.empty()) throw ValidationError("s_logloss: no sessions");
    double total = 0.0;
    for (std::size_t s = 0; s < scores_by_session.size(); ++s)
        total += logloss(scores_by_session[s], labels_by_session[s]);
    return total / static_cast<double>(scores_by_session.size());
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
    double mean_diff = 0.0;
};

/// Two-sided paired t-test of a against b (paired by index). Zero variance of
/// the differences is degenerate: p = 1 when the lists agree, p = 0 otherwise.
inline TTestResult paired_t_test(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("paired_t_test: size mismatch");
    if (a.size() < 2) throw ValidationError("paired_t_test: need at least 2 pairs");
    const std::size_t n = a.size();
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.df = static_cast<double>(n - 1);
    r.mean_diff = mean;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = mean > 0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    return r;
}

}  // namespace rmtl
