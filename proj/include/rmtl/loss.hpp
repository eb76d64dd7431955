#pragma once

#include <algorithm>
#include <cmath>

#include "rmtl/errors.hpp"

namespace rmtl {

/// Probabilities are clamped into [kProbFloor, 1 - kProbFloor] before any log
/// so loss and reward magnitudes stay bounded.
inline constexpr double kProbFloor = 1e-7;

inline double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

inline void require_binary_label(double y, const char* what) {
    if (y != 0.0 && y != 1.0)
        throw ValidationError(std::string(what) + ": label must be 0 or 1");
}

/// Binary cross-entropy of a clamped prediction against a 0/1 label.
inline double bce(double pred, double y) {
    require_binary_label(y, "bce");
    const double p = clamp_prob(pred);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

/// d bce / d pred, evaluated at the clamped prediction. Zero when the raw
/// prediction sits outside the clamp range (the clamp is flat there).
inline double bce_grad(double pred, double y) {
    require_binary_label(y, "bce_grad");
    if (pred < kProbFloor || pred > 1.0 - kProbFloor) return 0.0;
    return -y / pred + (1.0 - y) / (1.0 - pred);
}

}  // namespace rmtl
