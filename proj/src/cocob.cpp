#include "msnet/cocob.hpp"

#include <algorithm>
#include <cmath>

namespace msnet {

CocobState CocobState::start(const Eigen::Ref<const Vector>& weights, double alpha) {
    const auto n = weights.size();
    return {weights, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), alpha};
}

void cocob_update(Vector& weights, CocobState& state, const Eigen::Ref<const Vector>& gradient) {
    if (gradient.size() != weights.size() || state.initial.size() != weights.size())
        throw Error(ErrorCode::ShapeMismatch, "lstm", "COCOB state, weights and gradient differ in length");
    if (!gradient.allFinite()) throw Error(ErrorCode::NonFiniteGradient, "lstm", "COCOB received a non-finite gradient");

    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double g = gradient[i];
        double& big_l = state.max_grad[i];
        big_l = std::max(big_l, std::abs(g));
        state.abs_sum[i] += std::abs(g);
        state.reward[i] = std::max(state.reward[i] - (weights[i] - state.initial[i]) * g, 0.0);
        state.grad_sum[i] += g;
        // Nothing has been observed for this weight yet.
        if (big_l == 0.0) continue;
        const double denom = big_l * std::max(state.abs_sum[i] + big_l, state.alpha * big_l);
        weights[i] = state.initial[i] - state.grad_sum[i] / denom * (big_l + state.reward[i]);
    }
}

}  // namespace msnet
