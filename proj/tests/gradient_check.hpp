#pragma once

// Finite-difference oracle for backprop_gradients, shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>

#include "msnet/lstm.hpp"

namespace msnet::testing {

struct GradientCheck {
    NetworkShape shape;
    double worst_relative = 0.0;
    Eigen::Index components = 0;
};

/// Builds a random small network and batch, places every target at least
/// `margin` away from the prediction, and compares each analytic gradient
/// component with a central difference evaluated in long double.
inline GradientCheck check_random_gradient(std::mt19937_64& rng, double step = 1e-6, double margin = 0.05) {
    auto pick = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    GradientCheck out;
    out.shape = {pick(1, 6), pick(1, 5), pick(1, 2), pick(1, 3)};
    auto net = LstmNetwork<double>::initialized(out.shape, rng());
    Eigen::VectorXd flat = net.flatten();
    for (auto& v : flat) v += 0.3 * u(rng);  // move biases and peepholes off their initial values
    net.unflatten(flat);
    const double psi = pick(0, 1) ? 0.0 : 1e-3 * (1.0 + u(rng));

    std::vector<Sequence<double>> batch(static_cast<std::size_t>(pick(1, 2)));
    for (auto& seq : batch) {
        const int steps = pick(1, 4);
        seq.inputs = Eigen::MatrixXd::NullaryExpr(out.shape.input_dim, steps, [&] { return u(rng); });
        seq.init = zero_states<double>(out.shape);
        if (pick(0, 1))
            for (auto& s : seq.init) {
                s.h = Eigen::VectorXd::NullaryExpr(out.shape.hidden_dim, [&] { return 0.5 * u(rng); });
                s.c = Eigen::VectorXd::NullaryExpr(out.shape.hidden_dim, [&] { return u(rng); });
            }
        const auto pred = network_forward(net, seq.inputs, seq.init).outputs;
        seq.targets = pred.unaryExpr([&](double p) {
            const double offset = margin + 0.5 * std::abs(u(rng));
            return u(rng) < 0 ? p - offset : p + offset;
        });
    }

    const auto analytic = backprop_gradients(net, batch, psi).gradient.flatten();

    using LD = long double;
    LstmNetwork<LD> wide(out.shape);
    std::vector<Sequence<LD>> wide_batch;
    for (const auto& seq : batch) {
        Sequence<LD> w;
        w.inputs = seq.inputs.cast<LD>();
        w.targets = seq.targets.cast<LD>();
        for (const auto& s : seq.init) w.init.push_back({s.h.cast<LD>(), s.c.cast<LD>()});
        wide_batch.push_back(std::move(w));
    }
    const Eigen::Matrix<LD, Eigen::Dynamic, 1> base = flat.cast<LD>();
    auto loss_at = [&](const Eigen::Matrix<LD, Eigen::Dynamic, 1>& params) {
        wide.unflatten(params);
        LD total = 0;
        for (const auto& seq : wide_batch)
            total += (network_forward(wide, seq.inputs, seq.init).outputs - seq.targets).cwiseAbs().sum();
        return total + static_cast<LD>(psi) * wide.regularized_weights().squaredNorm();
    };

    for (Eigen::Index k = 0; k < base.size(); ++k) {
        auto plus = base;
        auto minus = base;
        plus[k] += step;
        minus[k] -= step;
        const double numeric = static_cast<double>((loss_at(plus) - loss_at(minus)) / (2 * static_cast<LD>(step)));
        const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
        out.worst_relative = std::max(out.worst_relative, std::abs(numeric - analytic[k]) / scale);
    }
    out.components = base.size();
    return out;
}

}  // namespace msnet::testing
