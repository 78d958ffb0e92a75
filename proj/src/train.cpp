#include "msnet/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "msnet/cocob.hpp"

namespace msnet {

using Eigen::Index;

void check_train_config(const TrainConfig& c) {
    if (c.cell_dim < 1 || c.hidden_layers < 1 || c.mini_batch_size < 1 || c.epoch_size < 1 || c.max_epochs < 0 ||
        !(c.noise_std >= 0.0) || !(c.l2_weight >= 0.0))
        throw Error(ErrorCode::InvalidConfig, "lstm", "training configuration out of range");
}

SeriesSequences group_sequences(const WindowedDataset& dataset) {
    SeriesSequences out;
    const Index dim = dataset.feature_dim();
    for (auto [begin, end] : dataset.series_ranges()) {
        const Index steps = static_cast<Index>(end - begin);
        Matrix in(dim, steps);
        Matrix tg(dataset.m, steps);
        for (Index t = 0; t < steps; ++t) {
            const auto& r = dataset.records[begin + static_cast<std::size_t>(t)];
            in.col(t) = r.features();
            tg.col(t) = r.target;
        }
        out.ids.push_back(dataset.records[begin].series_id);
        out.inputs.push_back(std::move(in));
        out.targets.push_back(std::move(tg));
    }
    return out;
}

double validation_loss(const LstmNetwork<double>& net, const std::vector<ValidationSequence>& validation) {
    double total = 0.0;
    Index count = 0;
    for (const auto& v : validation) {
        const auto fwd = network_forward(net, v.inputs, zero_states<double>(net.shape()));
        total += (fwd.outputs.col(fwd.outputs.cols() - 1) - v.target).cwiseAbs().sum();
        count += v.target.size();
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double training_loss(const LstmNetwork<double>& net, const WindowedDataset& dataset) {
    const auto seqs = group_sequences(dataset);
    double total = 0.0;
    Index count = 0;
    for (std::size_t s = 0; s < seqs.inputs.size(); ++s) {
        const auto fwd = network_forward(net, seqs.inputs[s], zero_states<double>(net.shape()));
        total += (fwd.outputs - seqs.targets[s]).cwiseAbs().sum();
        count += seqs.targets[s].size();
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

TrainResult train(LstmNetwork<double> net, const WindowedDataset& dataset,
                  const std::vector<ValidationSequence>& validation, const TrainConfig& config) {
    check_train_config(config);
    if (dataset.records.empty()) throw Error(ErrorCode::EmptyDataset, "lstm", "no training records");
    if (net.shape().input_dim != dataset.feature_dim() || net.shape().output_dim != dataset.m)
        throw Error(ErrorCode::ShapeMismatch, "lstm", "network shape does not match the dataset");

    TrainResult result;
    result.network = net;
    result.best_validation = std::numeric_limits<double>::infinity();
    if (config.max_epochs == 0) return result;

    const auto seqs = group_sequences(dataset);
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.noise_std);

    Vector weights = net.flatten();
    auto cocob = CocobState::start(weights);
    const Index window_rows = dataset.n;
    const double psi = config.l2_weight;

    std::vector<std::size_t> order(seqs.inputs.size());
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }

        double epoch_total = 0.0;
        Index epoch_count = 0;
        bool finite = true;
        for (std::size_t s : order) {
            const Matrix& inputs = seqs.inputs[s];
            const Matrix& targets = seqs.targets[s];
            auto state = zero_states<double>(net.shape());
            for (Index start = 0; start < inputs.cols() && finite; start += config.mini_batch_size) {
                const Index len = std::min<Index>(config.mini_batch_size, inputs.cols() - start);
                Sequence<double> chunk{inputs.middleCols(start, len), targets.middleCols(start, len), state};
                if (config.noise_std > 0.0) {
                    for (Index t = 0; t < len; ++t)
                        for (Index r = 0; r < window_rows; ++r) chunk.inputs(r, t) += noise(rng);
                }
                GradientResult<double> grad;
                try {
                    grad = backprop_gradients(net, std::vector<Sequence<double>>{std::move(chunk)}, psi);
                    cocob_update(weights, cocob, grad.gradient.flatten());
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::NonFiniteGradient) throw;
                    finite = false;
                    result.diagnostic = e.what();
                    break;
                }
                if (!std::isfinite(grad.data_loss) || !weights.allFinite()) {
                    finite = false;
                    break;
                }
                net.unflatten(weights);
                state = std::move(grad.final_states.front());
                epoch_total += grad.data_loss;
                epoch_count += len * dataset.m;
            }
            if (!finite) break;
        }

        if (!finite) {
            result.aborted = true;
            if (result.diagnostic.empty()) result.diagnostic = "non-finite loss";
            result.diagnostic = "[lstm] NonFiniteLoss at epoch " + std::to_string(epoch) + ": " + result.diagnostic;
            if (result.best_epoch == 0) result.network = net;
            return result;
        }
        result.loss_trace.push_back(epoch_total / static_cast<double>(epoch_count));

        if (validation.empty()) {
            result.network = net;
            result.best_epoch = epoch;
        } else if (epoch % config.epoch_size == 0 || epoch == config.max_epochs) {
            const double v = validation_loss(net, validation);
            result.validation_trace.emplace_back(epoch, v);
            if (v < result.best_validation) {
                result.best_validation = v;
                result.best_epoch = epoch;
                result.network = net;
            }
        }
    }
    return result;
}

}  // namespace msnet
