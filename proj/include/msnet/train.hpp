#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msnet/lstm.hpp"
#include "msnet/windowing.hpp"

namespace msnet {

/// Recurrent-layer hyper-parameters (cell dimension and depth included).
struct TrainConfig {
    int cell_dim = 20;
    int hidden_layers = 1;
    int mini_batch_size = 50;
    int epoch_size = 2;  // validation cadence, in epochs
    int max_epochs = 20;
    double noise_std = 1e-4;
    double l2_weight = 1e-4;
    std::uint64_t seed = 1;

    bool operator==(const TrainConfig&) const = default;
};

void check_train_config(const TrainConfig& config);

/// Inputs for every available window of one series (columns, in time order)
/// and the held-out target the final step should predict.
struct ValidationSequence {
    std::string series_id;
    Matrix inputs;
    Vector target;
};

struct TrainResult {
    LstmNetwork<double> network;
    std::vector<double> loss_trace;  // mean absolute training error per epoch
    std::vector<std::pair<int, double>> validation_trace;
    int best_epoch = 0;
    double best_validation = 0.0;
    bool aborted = false;
    std::string diagnostic;
};

/// Training frames grouped per series: input_dim × L and m × L matrices.
struct SeriesSequences {
    std::vector<std::string> ids;
    std::vector<Matrix> inputs;
    std::vector<Matrix> targets;
};

SeriesSequences group_sequences(const WindowedDataset& dataset);

/// Mean absolute error per target element of the final step of each sequence.
double validation_loss(const LstmNetwork<double>& net, const std::vector<ValidationSequence>& validation);

/// Mean absolute error per target element over all training frames, noise-free, state threaded per series.
double training_loss(const LstmNetwork<double>& net, const WindowedDataset& dataset);

/// COCOB training with Gaussian input noise, truncated BPTT over consecutive
/// frames, and selection of the weights with the best validation loss.
TrainResult train(LstmNetwork<double> net, const WindowedDataset& dataset,
                  const std::vector<ValidationSequence>& validation, const TrainConfig& config);

}  // namespace msnet
