#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rmtl/errors.hpp"
#include "rmtl/matrix.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

struct GradCheckOptions {
    double h = 1e-5;
    double rtol = 1e-4;
    double abs_floor = 1e-6;      // denominators below this are treated as this
    std::size_t samples_per_block = 0;  // 0 checks every entry
};

struct GradCheckFailure {
    std::string block;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    std::size_t checked = 0;
    double max_rel_err = 0.0;
    std::vector<GradCheckFailure> failures;
    bool ok() const { return failures.empty(); }
};

inline double grad_rel_err(double analytic, double numeric, double floor_val) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor_val});
    return std::fabs(analytic - numeric) / denom;
}

/// Central-difference check of `grads` against `loss_fn` evaluated at `params`.
/// Entries that fail at the base step are retried at h/8 and h/64; ReLU-kink
/// artifacts collapse under the smaller steps while genuine gradient bugs
/// stay put. The loss function must be deterministic in the parameters.
inline GradCheckReport finite_diff_check(const std::vector<ParamView>& params,
                                         const std::vector<ParamView>& grads,
                                         const std::function<double()>& loss_fn,
                                         const GradCheckOptions& opts = {},
                                         SeededRng* sampler = nullptr) {
    if (params.size() != grads.size())
        throw ShapeError("finite_diff_check: param/grad block count mismatch");
    GradCheckReport report;
    for (std::size_t b = 0; b < params.size(); ++b) {
        const ParamView& pv = params[b];
        const ParamView& gv = grads[b];
        if (pv.size() != gv.size())
            throw ShapeError("finite_diff_check: block size mismatch at " + pv.name);
        std::vector<std::size_t> idx;
        if (opts.samples_per_block == 0 || opts.samples_per_block >= pv.size()) {
            idx.resize(pv.size());
            for (std::size_t i = 0; i < pv.size(); ++i) idx[i] = i;
        } else {
            if (sampler == nullptr)
                throw ValidationError("finite_diff_check: sampling requested without rng");
            for (std::size_t i = 0; i < opts.samples_per_block; ++i)
                idx.push_back(sampler->below(pv.size()));
        }
        for (std::size_t i : idx) {
            double* slot = pv.data + i;
            const double saved = *slot;
            const double analytic = gv.data[i];
            double best_err = std::numeric_limits<double>::infinity();
            double best_numeric = 0.0;
            for (double h : {opts.h, opts.h / 8.0, opts.h / 64.0}) {
                const double step = h * std::max(1.0, std::fabs(saved));
                *slot = saved + step;
                const double up = loss_fn();
                *slot = saved - step;
                const double dn = loss_fn();
                *slot = saved;
                const double numeric = (up - dn) / (2.0 * step);
                const double err = grad_rel_err(analytic, numeric, opts.abs_floor);
                if (err < best_err) {
                    best_err = err;
                    best_numeric = numeric;
                }
                if (err <= opts.rtol) break;
            }
            ++report.checked;
            report.max_rel_err = std::max(report.max_rel_err, best_err);
            if (best_err > opts.rtol)
                report.failures.push_back({pv.name, i, analytic, best_numeric, best_err});
        }
    }
    return report;
}

template <class P, class G>
GradCheckReport finite_diff_check_model(P& params, G& grads,
                                        const std::function<double()>& loss_fn,
                                        const GradCheckOptions& opts = {},
                                        SeededRng* sampler = nullptr) {
    auto pv = collect_params(params);
    auto gv = collect_params(grads);
    return finite_diff_check(pv, gv, loss_fn, opts, sampler);
}

/// Move every parameter to a generic point before a finite-difference check.
/// Freshly built nets have all-zero biases; a batch row whose relu layer goes
/// fully dead then lands the next pre-activation exactly on the kink, where
/// the analytic subgradient (0) and the one-sided numeric slope disagree at
/// any step size. A small random offset removes the degeneracy.
template <class M>
void jitter_params(M& model, SeededRng& rng, double scale = 0.1) {
    for (auto& blk : collect_params(model))
        for (std::size_t i = 0; i < blk.size(); ++i)
            blk.data[i] += rng.uniform(-scale, scale);
}

}  // namespace rmtl
