#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "msnet/core.hpp"

namespace msnet {

/// Gate rows are stacked in the order input, forget, output, candidate.
enum Gate : int { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };

struct NetworkShape {
    int input_dim = 1;
    int hidden_dim = 1;
    int layers = 1;
    int output_dim = 1;

    int layer_input_dim(int layer) const { return layer == 0 ? input_dim : hidden_dim; }

    /// Per layer 4H² + 4HI + 3H peephole + 4H bias, plus the m×H dense projection.
    Eigen::Index parameter_count() const {
        Eigen::Index total = 0;
        for (int l = 0; l < layers; ++l) {
            const Eigen::Index h = hidden_dim;
            const Eigen::Index in = layer_input_dim(l);
            total += 4 * h * h + 4 * h * in + 3 * h + 4 * h;
        }
        return total + static_cast<Eigen::Index>(output_dim) * hidden_dim;
    }

    bool operator==(const NetworkShape&) const = default;
};

/// Peephole LSTM layer. W is 4H×H (recurrent), U is 4H×I (input), P holds the
/// three peephole vectors [P_i; P_f; P_o] and b the four gate biases.
template <typename Scalar>
struct LstmLayerWeights {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    MatrixX W;
    MatrixX U;
    VectorX P;
    VectorX b;

    static LstmLayerWeights zeros(int input_dim, int hidden_dim) {
        return {MatrixX::Zero(4 * hidden_dim, hidden_dim), MatrixX::Zero(4 * hidden_dim, input_dim),
                VectorX::Zero(3 * hidden_dim), VectorX::Zero(4 * hidden_dim)};
    }

    int hidden_dim() const { return static_cast<int>(W.cols()); }
    int input_dim() const { return static_cast<int>(U.cols()); }

    auto W_gate(Gate g) const { return W.middleRows(g * W.cols(), W.cols()); }
    auto U_gate(Gate g) const { return U.middleRows(g * W.cols(), W.cols()); }
    auto b_gate(Gate g) const { return b.segment(g * W.cols(), W.cols()); }
    auto P_gate(Gate g) const { return P.segment(g * W.cols(), W.cols()); }
};

template <typename Scalar>
struct CellState {
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    VectorX h;
    VectorX c;

    static CellState zeros(int hidden_dim) { return {VectorX::Zero(hidden_dim), VectorX::Zero(hidden_dim)}; }
};

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    return Scalar(1) / (Scalar(1) + (-x).exp());
}

}  // namespace detail

/// One peephole LSTM step: input/forget gates read C_{t-1}, the output gate reads C_t.
template <typename Scalar>
CellState<Scalar> lstm_cell_step(const LstmLayerWeights<Scalar>& weights,
                                 const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>>& x,
                                 const CellState<Scalar>& prev) {
    const int h = weights.hidden_dim();
    if (x.size() != weights.input_dim() || prev.h.size() != h || prev.c.size() != h)
        throw Error(ErrorCode::ShapeMismatch, "lstm", "cell step dimensions do not match the weights");
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const VectorX z = weights.W * prev.h + weights.U * x + weights.b;
    const auto pc = weights.P.array();
    const auto cp = prev.c.array();
    const VectorX i = detail::sigmoid(z.segment(0, h).array() + pc.segment(0, h) * cp);
    const VectorX f = detail::sigmoid(z.segment(h, h).array() + pc.segment(h, h) * cp);
    const VectorX g = z.segment(3 * h, h).array().tanh();
    CellState<Scalar> next;
    next.c = f.array() * cp + i.array() * g.array();
    const VectorX o = detail::sigmoid(z.segment(2 * h, h).array() + pc.segment(2 * h, h) * next.c.array());
    next.h = o.array() * next.c.array().tanh();
    return next;
}

/// Stacked peephole LSTM with a bias-free dense projection to the output window.
template <typename Scalar>
class LstmNetwork {
public:
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    LstmNetwork() = default;

    explicit LstmNetwork(const NetworkShape& shape) : shape_(shape) {
        if (shape.input_dim < 1 || shape.hidden_dim < 1 || shape.layers < 1 || shape.output_dim < 1)
            throw Error(ErrorCode::ShapeMismatch, "lstm", "network dimensions must be positive");
        for (int l = 0; l < shape.layers; ++l)
            layers_.push_back(LstmLayerWeights<Scalar>::zeros(shape.layer_input_dim(l), shape.hidden_dim));
        dense_ = MatrixX::Zero(shape.output_dim, shape.hidden_dim);
    }

    /// Uniform in ±1/sqrt(fan_in); forget-gate bias starts at 1.
    static LstmNetwork initialized(const NetworkShape& shape, std::uint64_t seed) {
        LstmNetwork net(shape);
        std::mt19937_64 rng(seed);
        auto fill = [&rng](auto&& m, double bound) {
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(dist(rng));
        };
        for (auto& layer : net.layers_) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer.input_dim() + layer.hidden_dim()));
            fill(layer.W, bound);
            fill(layer.U, bound);
            fill(layer.P, bound);
            layer.b.segment(kForgetGate * shape.hidden_dim, shape.hidden_dim).setOnes();
        }
        fill(net.dense_, 1.0 / std::sqrt(static_cast<double>(shape.hidden_dim)));
        return net;
    }

    const NetworkShape& shape() const noexcept { return shape_; }
    const std::vector<LstmLayerWeights<Scalar>>& layers() const noexcept { return layers_; }
    std::vector<LstmLayerWeights<Scalar>>& layers() noexcept { return layers_; }
    const MatrixX& dense() const noexcept { return dense_; }
    MatrixX& dense() noexcept { return dense_; }

    Eigen::Index parameter_count() const { return shape_.parameter_count(); }

    /// Flat parameter order: per layer W, U, P, b (column-major), then dense.
    VectorX flatten() const {
        VectorX out(parameter_count());
        Eigen::Index pos = 0;
        auto put = [&](const auto& m) {
            out.segment(pos, m.size()) = Eigen::Map<const VectorX>(m.data(), m.size());
            pos += m.size();
        };
        for (const auto& layer : layers_) {
            put(layer.W);
            put(layer.U);
            put(layer.P);
            put(layer.b);
        }
        put(dense_);
        return out;
    }

    void unflatten(const Eigen::Ref<const VectorX>& flat) {
        if (flat.size() != parameter_count())
            throw Error(ErrorCode::ShapeMismatch, "lstm", "parameter vector has the wrong length");
        Eigen::Index pos = 0;
        auto get = [&](auto& m) {
            Eigen::Map<VectorX>(m.data(), m.size()) = flat.segment(pos, m.size());
            pos += m.size();
        };
        for (auto& layer : layers_) {
            get(layer.W);
            get(layer.U);
            get(layer.P);
            get(layer.b);
        }
        get(dense_);
    }

    /// 1 for every weight entering the L2 penalty (W, U, P, dense), 0 for biases.
    VectorX regularization_mask() const {
        VectorX mask(parameter_count());
        Eigen::Index pos = 0;
        for (const auto& layer : layers_) {
            const Eigen::Index weighted = layer.W.size() + layer.U.size() + layer.P.size();
            mask.segment(pos, weighted).setOnes();
            pos += weighted;
            mask.segment(pos, layer.b.size()).setZero();
            pos += layer.b.size();
        }
        mask.segment(pos, dense_.size()).setOnes();
        return mask;
    }

    /// Weights covered by the L2 penalty, in flat order.
    VectorX regularized_weights() const {
        const VectorX flat = flatten();
        const VectorX mask = regularization_mask();
        VectorX out(static_cast<Eigen::Index>(mask.sum()));
        Eigen::Index pos = 0;
        for (Eigen::Index i = 0; i < flat.size(); ++i)
            if (mask[i] != Scalar(0)) out[pos++] = flat[i];
        return out;
    }

    bool operator==(const LstmNetwork& other) const {
        return shape_ == other.shape_ && flatten() == other.flatten();
    }

private:
    NetworkShape shape_;
    std::vector<LstmLayerWeights<Scalar>> layers_;
    MatrixX dense_;
};

/// Per-step activations of one layer over a sequence (columns are steps).
template <typename Scalar>
struct LayerTrace {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixX x, h_prev, c_prev, i, f, o, g, c, tanh_c, h;
};

template <typename Scalar>
struct ForwardResult {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixX outputs;  // m × L, one projected output per step
    std::vector<CellState<Scalar>> final_states;
    std::vector<LayerTrace<Scalar>> traces;  // filled only when requested
};

namespace detail {

template <typename Scalar>
void check_states(const NetworkShape& shape, const std::vector<CellState<Scalar>>& init) {
    if (static_cast<int>(init.size()) != shape.layers)
        throw Error(ErrorCode::ShapeMismatch, "lstm", "one initial state per layer is required");
    for (const auto& s : init)
        if (s.h.size() != shape.hidden_dim || s.c.size() != shape.hidden_dim)
            throw Error(ErrorCode::ShapeMismatch, "lstm", "initial state has the wrong hidden size");
}

}  // namespace detail

template <typename Scalar>
std::vector<CellState<Scalar>> zero_states(const NetworkShape& shape) {
    return std::vector<CellState<Scalar>>(shape.layers, CellState<Scalar>::zeros(shape.hidden_dim));
}

/// Runs the stack over `inputs` (input_dim × L), threading state from `init`.
template <typename Scalar>
ForwardResult<Scalar> network_forward(const LstmNetwork<Scalar>& net,
                                      const std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>>& inputs,
                                      const std::vector<CellState<Scalar>>& init, bool keep_traces = false) {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const auto& shape = net.shape();
    if (inputs.rows() != shape.input_dim)
        throw Error(ErrorCode::ShapeMismatch, "lstm",
                    "input rows " + std::to_string(inputs.rows()) + " != input dim " + std::to_string(shape.input_dim));
    detail::check_states(shape, init);

    const Eigen::Index steps = inputs.cols();
    const int hd = shape.hidden_dim;
    ForwardResult<Scalar> result;
    MatrixX layer_in = inputs;
    for (int l = 0; l < shape.layers; ++l) {
        const auto& w = net.layers()[l];
        LayerTrace<Scalar> tr;
        const MatrixX pre = (w.U * layer_in).colwise() + w.b;
        tr.h_prev.resize(hd, steps);
        tr.c_prev.resize(hd, steps);
        tr.i.resize(hd, steps);
        tr.f.resize(hd, steps);
        tr.o.resize(hd, steps);
        tr.g.resize(hd, steps);
        tr.c.resize(hd, steps);
        tr.tanh_c.resize(hd, steps);
        tr.h.resize(hd, steps);

        VectorX h = init[l].h;
        VectorX c = init[l].c;
        const auto p_i = w.P.segment(0, hd).array();
        const auto p_f = w.P.segment(hd, hd).array();
        const auto p_o = w.P.segment(2 * hd, hd).array();
        VectorX z(4 * hd);
        for (Eigen::Index t = 0; t < steps; ++t) {
            tr.h_prev.col(t) = h;
            tr.c_prev.col(t) = c;
            z.noalias() = pre.col(t);
            z.noalias() += w.W * h;
            tr.i.col(t) = detail::sigmoid(z.segment(0, hd).array() + p_i * c.array());
            tr.f.col(t) = detail::sigmoid(z.segment(hd, hd).array() + p_f * c.array());
            tr.g.col(t) = z.segment(3 * hd, hd).array().tanh();
            c = tr.f.col(t).array() * c.array() + tr.i.col(t).array() * tr.g.col(t).array();
            tr.o.col(t) = detail::sigmoid(z.segment(2 * hd, hd).array() + p_o * c.array());
            tr.c.col(t) = c;
            tr.tanh_c.col(t) = c.array().tanh();
            h = tr.o.col(t).array() * tr.tanh_c.col(t).array();
            tr.h.col(t) = h;
        }
        result.final_states.push_back({h, c});
        if (keep_traces) tr.x = layer_in;
        layer_in = tr.h;
        if (keep_traces) result.traces.push_back(std::move(tr));
    }
    result.outputs = net.dense() * layer_in;
    return result;
}

/// Training loss: Σ|Y - Ŷ| + ψ Σ w² over the regularized weights.
template <typename Scalar, typename DerivedP, typename DerivedT, typename DerivedW>
Scalar l1_l2_loss(const Eigen::MatrixBase<DerivedP>& predictions, const Eigen::MatrixBase<DerivedT>& targets,
                  const Eigen::MatrixBase<DerivedW>& weights, Scalar psi) {
    if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
        throw Error(ErrorCode::ShapeMismatch, "lstm", "predictions and targets differ in shape");
    return (targets - predictions).cwiseAbs().sum() + psi * weights.squaredNorm();
}

/// One training sequence: consecutive network inputs with their targets.
template <typename Scalar>
struct Sequence {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixX inputs;   // input_dim × L
    MatrixX targets;  // m × L
    std::vector<CellState<Scalar>> init;
};

template <typename Scalar>
struct GradientResult {
    LstmNetwork<Scalar> gradient;  // same layout as the network
    Scalar data_loss = 0;          // Σ|Y - Ŷ| over the batch
    Scalar loss = 0;               // data_loss + ψ Σ w²
    std::vector<std::vector<CellState<Scalar>>> final_states;  // per sequence
};

/// Backpropagation through time of the training loss over a batch of sequences.
/// The L1 subgradient at a zero residual is taken as 0.
template <typename Scalar>
GradientResult<Scalar> backprop_gradients(const LstmNetwork<Scalar>& net, const std::vector<Sequence<Scalar>>& batch,
                                          Scalar psi) {
    using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "lstm", "gradient batch is empty");
    const auto& shape = net.shape();
    const int hd = shape.hidden_dim;

    GradientResult<Scalar> out;
    out.gradient = LstmNetwork<Scalar>(shape);
    auto& grad = out.gradient;

    for (const auto& seq : batch) {
        if (seq.targets.rows() != shape.output_dim || seq.targets.cols() != seq.inputs.cols())
            throw Error(ErrorCode::ShapeMismatch, "lstm", "targets must be m × L");
        auto fwd = network_forward(net, seq.inputs, seq.init, true);
        const MatrixX residual = fwd.outputs - seq.targets;
        out.data_loss += residual.cwiseAbs().sum();
        const MatrixX d_out = residual.unaryExpr([](Scalar r) { return Scalar((r > 0) - (r < 0)); });

        grad.dense().noalias() += d_out * fwd.traces.back().h.transpose();
        MatrixX d_h_above = net.dense().transpose() * d_out;

        for (int l = shape.layers - 1; l >= 0; --l) {
            const auto& w = net.layers()[l];
            const auto& tr = fwd.traces[l];
            auto& gw = grad.layers()[l];
            const Eigen::Index steps = tr.h.cols();
            MatrixX dz(4 * hd, steps);
            VectorX dh_next = VectorX::Zero(hd);
            VectorX dc_next = VectorX::Zero(hd);
            const auto p_i = w.P.segment(0, hd).array();
            const auto p_f = w.P.segment(hd, hd).array();
            const auto p_o = w.P.segment(2 * hd, hd).array();
            for (Eigen::Index t = steps - 1; t >= 0; --t) {
                const auto i = tr.i.col(t).array();
                const auto f = tr.f.col(t).array();
                const auto o = tr.o.col(t).array();
                const auto g = tr.g.col(t).array();
                const auto tc = tr.tanh_c.col(t).array();
                const auto cp = tr.c_prev.col(t).array();

                const VectorX dh = d_h_above.col(t) + dh_next;
                const VectorX dzo = dh.array() * tc * o * (1 - o);
                const VectorX dc = dc_next.array() + dh.array() * o * (1 - tc * tc) + dzo.array() * p_o;
                const VectorX dzi = dc.array() * g * i * (1 - i);
                const VectorX dzf = dc.array() * cp * f * (1 - f);
                const VectorX dzg = dc.array() * i * (1 - g * g);

                dz.col(t) << dzi, dzf, dzo, dzg;
                gw.P.segment(0, hd).array() += dzi.array() * cp;
                gw.P.segment(hd, hd).array() += dzf.array() * cp;
                gw.P.segment(2 * hd, hd).array() += dzo.array() * tr.c.col(t).array();

                dc_next = dc.array() * f + dzi.array() * p_i + dzf.array() * p_f;
                dh_next.noalias() = w.W.transpose() * dz.col(t);
            }
            gw.W.noalias() += dz * tr.h_prev.transpose();
            gw.U.noalias() += dz * tr.x.transpose();
            gw.b += dz.rowwise().sum();
            if (l > 0) d_h_above = w.U.transpose() * dz;
        }
        out.final_states.push_back(std::move(fwd.final_states));
    }

    const VectorX flat = net.flatten();
    const VectorX mask = net.regularization_mask();
    const VectorX reg = (flat.array() * mask.array()).matrix();
    out.loss = out.data_loss + psi * reg.squaredNorm();
    VectorX g = grad.flatten() + Scalar(2) * psi * reg;
    if (!g.allFinite()) throw Error(ErrorCode::NonFiniteGradient, "lstm", "gradient contains NaN or Inf");
    grad.unflatten(g);
    return out;
}

/// Text weight file: a version tag, the shape, the parameter count, then one
/// hexadecimal float per line in flatten() order. Loading is bit-exact.
inline constexpr const char* kNetworkFormatTag = "lstm-msnet-network v1";

namespace detail {

inline std::string hex_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    return std::string(buf, res.ptr);
}

inline double parse_hex_double(const std::string& s) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::ParseError, "lstm", "bad weight value '" + s + "'");
    return v;
}

}  // namespace detail

inline void save_network(std::ostream& os, const LstmNetwork<double>& net) {
    const auto& s = net.shape();
    os << kNetworkFormatTag << '\n';
    os << "shape " << s.input_dim << ' ' << s.hidden_dim << ' ' << s.layers << ' ' << s.output_dim << '\n';
    const Eigen::VectorXd flat = net.flatten();
    os << "parameters " << flat.size() << '\n';
    for (Eigen::Index i = 0; i < flat.size(); ++i) os << detail::hex_double(flat[i]) << '\n';
}

inline LstmNetwork<double> load_network(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kNetworkFormatTag)
        throw Error(ErrorCode::ParseError, "lstm", "missing '" + std::string(kNetworkFormatTag) + "' header");
    std::string word;
    NetworkShape s;
    if (!(is >> word >> s.input_dim >> s.hidden_dim >> s.layers >> s.output_dim) || word != "shape")
        throw Error(ErrorCode::ParseError, "lstm", "bad shape line");
    Eigen::Index count = 0;
    if (!(is >> word >> count) || word != "parameters" || count != s.parameter_count())
        throw Error(ErrorCode::ParseError, "lstm", "parameter count does not match the shape");
    Eigen::VectorXd flat(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        if (!(is >> word)) throw Error(ErrorCode::ParseError, "lstm", "truncated weight list");
        flat[i] = detail::parse_hex_double(word);
    }
    LstmNetwork<double> net(s);
    net.unflatten(flat);
    return net;
}

}  // namespace msnet
