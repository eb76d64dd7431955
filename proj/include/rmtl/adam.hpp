#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rmtl/errors.hpp"
#include "rmtl/matrix.hpp"

namespace rmtl {

/// Bias-corrected Adam state for one parameter block.
struct AdamState {
    std::size_t step_count = 0;
    Vector m;
    Vector v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n, double learning_rate)
        : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

inline void adam_step(AdamState& st, std::span<double> param, std::span<const double> grad) {
    if (param.size() != grad.size() || st.m.size() != param.size())
        throw ShapeError("adam_step: size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
    st.step_count += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (std::size_t i = 0; i < param.size(); ++i) {
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        param[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

inline void adam_step(AdamState& st, Matrix& param, const Matrix& grad) {
    if (!param.same_shape(grad)) throw ShapeError("adam_step: matrix shape mismatch");
    adam_step(st, std::span<double>(param.data), std::span<const double>(grad.data));
}

/// Adam across every block of a model, keyed by canonical visitation order.
/// `grads` must be a zeros_like-shaped twin of `params`.
class AdamOpt {
public:
    explicit AdamOpt(double lr) : lr_(lr) {}

    template <class P, class G>
    void step(P& params, G& grads) {
        auto pv = collect_params(params);
        auto gv = collect_params(grads);
        if (pv.size() != gv.size()) throw ShapeError("AdamOpt: param/grad block mismatch");
        if (states_.empty())
            for (const auto& p : pv) states_.emplace_back(p.size(), lr_);
        if (states_.size() != pv.size()) throw ShapeError("AdamOpt: model structure changed");
        for (std::size_t i = 0; i < pv.size(); ++i) {
            if (pv[i].size() != gv[i].size())
                throw ShapeError("AdamOpt: block size mismatch at " + pv[i].name);
            adam_step(states_[i], std::span<double>(pv[i].data, pv[i].size()),
                      std::span<const double>(gv[i].data, gv[i].size()));
        }
    }

private:
    double lr_;
    std::vector<AdamState> states_;
};

}  // namespace rmtl
