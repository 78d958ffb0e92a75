#pragma once

#include "msnet/core.hpp"

namespace msnet {

/// Per-weight COCOB-Backprop accumulators. There is no learning rate; alpha
/// only caps the initial bet fraction.
struct CocobState {
    Vector initial;   // w_1
    Vector max_grad;  // L
    Vector abs_sum;   // G
    Vector reward;
    Vector grad_sum;  // θ
    double alpha = 100.0;

    static CocobState start(const Eigen::Ref<const Vector>& weights, double alpha = 100.0);
};

/// Applies one betting step to `weights` given the gradient at `weights`.
void cocob_update(Vector& weights, CocobState& state, const Eigen::Ref<const Vector>& gradient);

}  // namespace msnet
