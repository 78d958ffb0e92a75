#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gradient_check.hpp"
#include "msnet/cocob.hpp"
#include "msnet/lstm.hpp"

using namespace msnet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("zero cell step") {
    const auto w = LstmLayerWeights<double>::zeros(2, 3);
    const auto next = lstm_cell_step(w, VectorXd::Zero(2), CellState<double>::zeros(3));
    CHECK(next.h.size() == 3);
    CHECK(next.c.size() == 3);
    CHECK(next.h.isZero(0.0));
    CHECK(next.c.isZero(0.0));
}

TEST_CASE("zero weights halve the previous cell") {
    const auto w = LstmLayerWeights<double>::zeros(1, 1);
    const double c = 0.8;
    const auto next = lstm_cell_step(w, VectorXd::Zero(1), CellState<double>{VectorXd::Zero(1), VectorXd::Constant(1, c)});
    CHECK(next.c[0] == 0.5 * c);
    CHECK(next.h[0] == doctest::Approx(0.5 * std::tanh(0.5 * c)).epsilon(1e-15));
}

TEST_CASE("cell step against a scalar hand evaluation") {
    auto w = LstmLayerWeights<double>::zeros(1, 1);
    w.W << 0.1, 0.2, 0.3, 0.4;
    w.U << 0.5, -0.6, 0.7, -0.8;
    w.P << 0.9, -1.0, 1.1;
    w.b << 0.01, 0.02, 0.03, 0.04;
    const double x = 0.7, h0 = -0.2, c0 = 0.4;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double i = sig(0.1 * h0 + 0.5 * x + 0.9 * c0 + 0.01);
    const double f = sig(0.2 * h0 - 0.6 * x - 1.0 * c0 + 0.02);
    const double g = std::tanh(0.4 * h0 - 0.8 * x + 0.04);
    const double c = f * c0 + i * g;
    const double o = sig(0.3 * h0 + 0.7 * x + 1.1 * c + 0.03);
    const auto next = lstm_cell_step(w, VectorXd::Constant(1, x), CellState<double>{VectorXd::Constant(1, h0), VectorXd::Constant(1, c0)});
    CHECK(next.c[0] == doctest::Approx(c).epsilon(1e-14));
    CHECK(next.h[0] == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("cell step shape errors") {
    const auto w = LstmLayerWeights<double>::zeros(2, 3);
    CHECK_THROWS_AS(lstm_cell_step(w, VectorXd::Zero(3), CellState<double>::zeros(3)), Error);
    CHECK_THROWS_AS(lstm_cell_step(w, VectorXd::Zero(2), CellState<double>::zeros(2)), Error);
}

TEST_CASE("forward matches repeated cell steps and the dense projection") {
    const NetworkShape shape{3, 4, 2, 2};
    const auto net = LstmNetwork<double>::initialized(shape, 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    const MatrixXd x = MatrixXd::NullaryExpr(3, 6, [&] { return u(rng); });
    const auto fwd = network_forward(net, x, zero_states<double>(shape));
    REQUIRE(fwd.outputs.rows() == 2);
    REQUIRE(fwd.outputs.cols() == 6);

    auto s0 = CellState<double>::zeros(4);
    auto s1 = CellState<double>::zeros(4);
    for (int t = 0; t < 6; ++t) {
        s0 = lstm_cell_step(net.layers()[0], x.col(t), s0);
        s1 = lstm_cell_step(net.layers()[1], s0.h, s1);
        CHECK((fwd.outputs.col(t) - net.dense() * s1.h).cwiseAbs().maxCoeff() <= 1e-14);
    }
    CHECK((fwd.final_states[1].c - s1.c).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("zero network forecasts zeros, dense scales h") {
    const NetworkShape shape{5, 3, 1, 4};
    const LstmNetwork<double> zero(shape);
    const auto fwd = network_forward(zero, MatrixXd::Ones(5, 7), zero_states<double>(shape));
    CHECK(fwd.outputs.isZero(0.0));
    CHECK(fwd.outputs.cols() == 7);

    // hidden 1, dense [[2]]: output gate fully open and a saturated candidate force h ≈ tanh(c).
    const NetworkShape one{1, 1, 1, 1};
    LstmNetwork<double> net(one);
    net.dense()(0, 0) = 2.0;
    auto init = zero_states<double>(one);
    init[0].h[0] = 0.3;
    const auto out = network_forward(net, MatrixXd::Zero(1, 1), init);
    const double h = out.final_states[0].h[0];
    CHECK(out.outputs(0, 0) == 2.0 * h);

    CHECK_THROWS_AS(network_forward(zero, MatrixXd::Ones(4, 2), zero_states<double>(shape)), Error);
}

TEST_CASE("property: activations stay in range") {
    const NetworkShape shape{4, 6, 2, 2};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> big(0.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = LstmNetwork<double>::initialized(shape, static_cast<std::uint64_t>(trial));
        VectorXd flat = net.flatten();
        for (auto& v : flat) v *= 4.0;
        net.unflatten(flat);
        const MatrixXd x = MatrixXd::NullaryExpr(4, 10, [&] { return big(rng); });
        const auto fwd = network_forward(net, x, zero_states<double>(shape), true);
        for (const auto& tr : fwd.traces) {
            CHECK(tr.i.minCoeff() >= 0.0);
            CHECK(tr.i.maxCoeff() <= 1.0);
            CHECK(tr.f.maxCoeff() <= 1.0);
            CHECK(tr.o.minCoeff() >= 0.0);
            CHECK(tr.g.cwiseAbs().maxCoeff() <= 1.0);
            CHECK(tr.h.cwiseAbs().maxCoeff() <= 1.0);
        }
    }
}

TEST_CASE("parameter count and regularization mask") {
    const NetworkShape shape{7, 5, 2, 3};
    const auto expected = (4 * 25 + 4 * 5 * 7 + 3 * 5 + 4 * 5) + (4 * 25 + 4 * 5 * 5 + 3 * 5 + 4 * 5) + 3 * 5;
    CHECK(shape.parameter_count() == expected);
    const auto net = LstmNetwork<double>::initialized(shape, 1);
    CHECK(net.flatten().size() == expected);
    CHECK(net.regularization_mask().sum() == doctest::Approx(expected - 2 * 4 * 5));
    CHECK(net.regularized_weights().size() == expected - 40);
    for (const auto& layer : net.layers()) CHECK(layer.b_gate(kForgetGate).isOnes(0.0));
}

TEST_CASE("initialization is seeded and bounded") {
    const NetworkShape shape{4, 6, 1, 2};
    const auto a = LstmNetwork<double>::initialized(shape, 42);
    CHECK(a == LstmNetwork<double>::initialized(shape, 42));
    CHECK_FALSE(a == LstmNetwork<double>::initialized(shape, 43));
    CHECK(a.layers()[0].U.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(10.0));
    CHECK(a.dense().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(6.0));
}

TEST_CASE("L1 + L2 loss") {
    const MatrixXd y{{1.0, 2.0}};
    CHECK(l1_l2_loss(y, y, VectorXd::Ones(3), 0.0) == 0.0);
    CHECK(l1_l2_loss(MatrixXd::Zero(1, 2), y, VectorXd::Ones(3), 0.0) == 3.0);
    CHECK(l1_l2_loss(MatrixXd::Zero(1, 2), y, VectorXd{{1.0, -1.0}}, 0.1) == doctest::Approx(3.2).epsilon(1e-15));
    CHECK_THROWS_AS(l1_l2_loss(MatrixXd::Zero(2, 2), y, VectorXd::Ones(1), 0.0), Error);
}

TEST_CASE("zero residual gives the pure regularizer gradient") {
    const NetworkShape shape{3, 4, 2, 2};
    const auto net = LstmNetwork<double>::initialized(shape, 3);
    Sequence<double> seq;
    seq.inputs = MatrixXd::Random(3, 5);
    seq.init = zero_states<double>(shape);
    seq.targets = network_forward(net, seq.inputs, seq.init).outputs;

    const auto none = backprop_gradients(net, std::vector{seq}, 0.0);
    CHECK(none.gradient.flatten().isZero(0.0));
    CHECK(none.loss == 0.0);

    const double psi = 0.37;
    const auto reg = backprop_gradients(net, std::vector{seq}, psi);
    const VectorXd expected = (2.0 * psi * net.flatten().array() * net.regularization_mask().array()).matrix();
    CHECK(reg.gradient.flatten() == expected);

    CHECK_THROWS_AS(backprop_gradients(net, std::vector<Sequence<double>>{}, 0.0), Error);
}

TEST_CASE("property: BPTT matches central finite differences") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = msnet::testing::check_random_gradient(rng);
        INFO("trial " << trial << " shape I=" << r.shape.input_dim << " H=" << r.shape.hidden_dim
                      << " L=" << r.shape.layers << " m=" << r.shape.output_dim);
        CHECK(r.worst_relative < 1e-4);
    }
}

TEST_CASE("gradient check on the reference size") {
    // hidden 4, n 5, m 2, three steps
    const NetworkShape shape{5, 4, 1, 2};
    auto net = LstmNetwork<double>::initialized(shape, 77);
    Sequence<double> seq;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    seq.inputs = MatrixXd::NullaryExpr(5, 3, [&] { return u(rng); });
    seq.init = zero_states<double>(shape);
    seq.targets = network_forward(net, seq.inputs, seq.init).outputs.array() + 0.5;
    const auto g = backprop_gradients(net, std::vector{seq}, 0.0).gradient.flatten();
    VectorXd flat = net.flatten();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
        VectorXd p = flat, m = flat;
        p[k] += 1e-6;
        m[k] -= 1e-6;
        LstmNetwork<double> np(shape), nm(shape);
        np.unflatten(p);
        nm.unflatten(m);
        const double lp = (network_forward(np, seq.inputs, seq.init).outputs - seq.targets).cwiseAbs().sum();
        const double lm = (network_forward(nm, seq.inputs, seq.init).outputs - seq.targets).cwiseAbs().sum();
        const double numeric = (lp - lm) / 2e-6;
        worst = std::max(worst, std::abs(numeric - g[k]) / std::max({std::abs(numeric), std::abs(g[k]), 1e-4}));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("save and load are bit-exact") {
    const NetworkShape shape{6, 5, 2, 3};
    const auto net = LstmNetwork<double>::initialized(shape, 99);
    std::stringstream buf;
    save_network(buf, net);
    const auto back = load_network(buf);
    CHECK(back == net);
    const MatrixXd x = MatrixXd::Random(6, 4);
    CHECK(network_forward(back, x, zero_states<double>(shape)).outputs ==
          network_forward(net, x, zero_states<double>(shape)).outputs);

    std::stringstream bad("lstm-msnet-network v1\nshape 6 5 2 3\nparameters 3\n");
    CHECK_THROWS_AS(load_network(bad), Error);
    std::stringstream wrong("something else\n");
    CHECK_THROWS_AS(load_network(wrong), Error);
    CHECK(detail::parse_hex_double(detail::hex_double(0.1)) == 0.1);
}

namespace {

// Direct transcription of the COCOB-Backprop recursion for one scalar weight.
struct ScalarCocob {
    double w0, w, l = 0, g_abs = 0, reward = 0, theta = 0, alpha = 100;
    void step(double g) {
        l = std::max(l, std::abs(g));
        g_abs += std::abs(g);
        reward = std::max(reward - (w - w0) * g, 0.0);
        theta += g;
        if (l > 0) w = w0 - theta / (l * std::max(g_abs + l, alpha * l)) * (l + reward);
    }
};

}  // namespace

TEST_CASE("COCOB: zero gradients leave weights unchanged") {
    VectorXd w{{0.3, -1.2, 4.0}};
    const VectorXd w0 = w;
    auto state = CocobState::start(w);
    for (int i = 0; i < 50; ++i) cocob_update(w, state, VectorXd::Zero(3));
    CHECK(w == w0);
}

TEST_CASE("COCOB: constant positive gradient decreases the weight monotonically") {
    VectorXd w{{0.5}};
    auto state = CocobState::start(w);
    ScalarCocob ref{0.5, 0.5};
    double prev = w[0];
    for (int i = 0; i < 500; ++i) {
        cocob_update(w, state, VectorXd::Constant(1, 0.7));
        ref.step(0.7);
        CHECK(w[0] < prev);
        CHECK(w[0] == ref.w);
        prev = w[0];
    }
}

TEST_CASE("COCOB: alternating gradients stay bounded") {
    VectorXd w{{0.0}};
    auto state = CocobState::start(w);
    const double g = 2.0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        cocob_update(w, state, VectorXd::Constant(1, i % 2 ? -g : g));
        worst = std::max(worst, std::abs(w[0]));
    }
    // |θ| ≤ g and the wealth stays below L, so |w - w0| ≤ g (L + L) / (L · αL) = 2/α.
    CHECK(worst <= 2.0 / state.alpha + 1e-12);
}

TEST_CASE("COCOB: matches the scalar recursion on random gradients and rejects NaN") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n(0.0, 1.0);
    VectorXd w{{1.0, -2.0}};
    auto state = CocobState::start(w);
    ScalarCocob a{1.0, 1.0}, b{-2.0, -2.0};
    for (int i = 0; i < 300; ++i) {
        const VectorXd g{{n(rng), i < 10 ? 0.0 : n(rng)}};
        cocob_update(w, state, g);
        a.step(g[0]);
        b.step(g[1]);
        CHECK(w[0] == a.w);
        CHECK(w[1] == b.w);
    }
    CHECK_THROWS_AS(cocob_update(w, state, VectorXd::Constant(2, std::nan(""))), Error);
}

TEST_CASE("COCOB minimizes a quadratic without a learning rate") {
    VectorXd w{{5.0, -3.0}};
    auto state = CocobState::start(w);
    for (int i = 0; i < 3000; ++i) cocob_update(w, state, 2.0 * (w - VectorXd{{1.0, 2.0}}));
    CHECK(std::abs(w[0] - 1.0) < 0.05);
    CHECK(std::abs(w[1] - 2.0) < 0.05);
}
