#pragma once

#include <optional>
#include <string>
#include <vector>

#include "msnet/decompose.hpp"
#include "msnet/preprocess.hpp"
#include "msnet/train.hpp"
#include "msnet/windowing.hpp"

namespace msnet {

enum class DecomposerKind { None, Mstl, Fourier };

const char* to_string(DecomposerKind k);

/// Training paradigm plus the seasonal decomposer feeding it.
struct ParadigmSpec {
    Paradigm paradigm = Paradigm::Baseline;
    DecomposerKind decomposer = DecomposerKind::None;
    MstlConfig mstl;
    FourierConfig fourier;
    bool fourier_k1 = false;  // pins every k to 1

    static ParadigmSpec baseline() { return {}; }
    static ParadigmSpec ds_mstl(MstlConfig c = {}) { return {Paradigm::DS, DecomposerKind::Mstl, c, {}, false}; }
    static ParadigmSpec se_mstl(MstlConfig c = {}) { return {Paradigm::SE, DecomposerKind::Mstl, c, {}, false}; }
    static ParadigmSpec se_fourier(FourierConfig f) { return {Paradigm::SE, DecomposerKind::Fourier, {}, std::move(f), false}; }
    static ParadigmSpec se_fourier_k1(std::size_t periods) {
        return {Paradigm::SE, DecomposerKind::Fourier, {}, FourierConfig::ones(periods), true};
    }

    std::string name() const;
};

void check_spec(const ParadigmSpec& spec, const SeasonalPeriods& periods);

/// Width of the exogenous block appended to each input window.
int exogenous_dim(const ParadigmSpec& spec, const SeasonalPeriods& periods);

struct SeriesFactors {
    std::string id;
    PreprocessRecord record;
    double final_factor = 0.0;
};

struct FittedModel {
    ParadigmSpec spec;
    SeasonalPeriods periods;
    int horizon = 1;
    int input_window = 1;
    TrainConfig config;
    LstmNetwork<double> network;
    std::vector<SeriesFactors> series;
    std::vector<double> loss_trace;
    double validation_loss = 0.0;
};

struct SeriesForecast {
    std::string id;
    Vector forecast;  // original scale, length M
    Vector network_output;
    double local_factor = 0.0;
    PreprocessRecord record;
    std::optional<Decomposition> components;
    bool reseasonalized = false;
};

struct ForecastResult {
    std::vector<SeriesForecast> series;
};

/// Network inputs for one (already preprocessed) series under a paradigm.
struct PreparedSeries {
    Vector model_series;                   // deseasonalised for DS, the preprocessed series otherwise
    std::optional<Decomposition> decomposition;
    Matrix inputs;                         // features × (K - n + 1), every stride-1 window
    Vector factors;                        // local factor of each window
};

PreparedSeries prepare_series(const Eigen::Ref<const Vector>& preprocessed, const ParadigmSpec& spec,
                              const SeasonalPeriods& periods, int n);

/// Tiles the last full cycle of every seasonal component over base.size() steps and adds it.
Vector reseasonalize(const Eigen::Ref<const Vector>& base, const Decomposition& decomp, const SeasonalPeriods& periods);

/// scale · (exp(v + factor) - shift).
Vector renormalize(const Eigen::Ref<const Vector>& v, double local_factor, const PreprocessRecord& record);

/// Builds the training dataset and validation sequences exactly as fit() does.
struct TrainingData {
    WindowedDataset dataset;
    std::vector<ValidationSequence> validation;
};

TrainingData build_training_data(const SeriesCollection& collection, const ParadigmSpec& spec, int input_window);

/// input_window <= 0 selects ceil(1.25 M).
FittedModel fit(const SeriesCollection& collection, const ParadigmSpec& spec, const TrainConfig& config,
                int input_window = 0);

ForecastResult forecast(const FittedModel& model, const SeriesCollection& collection);

/// Inclusive hyper-parameter ranges searched by random_search_tune.
struct TuningBounds {
    int cell_dim_min = 20, cell_dim_max = 50;
    int mini_batch_min = 20, mini_batch_max = 80;
    int epoch_size_min = 2, epoch_size_max = 10;
    int max_epochs_min = 10, max_epochs_max = 40;
    int layers_min = 1, layers_max = 2;
    double noise_min = 1e-4, noise_max = 8e-4;
    double l2_min = 1e-4, l2_max = 8e-4;
};

struct TuningTrial {
    TrainConfig config;
    std::optional<FourierConfig> fourier;
    double validation_loss = 0.0;
};

struct TuningResult {
    TrainConfig best;
    ParadigmSpec best_spec;
    std::vector<TuningTrial> trials;
};

TrainConfig sample_config(const TuningBounds& bounds, std::mt19937_64& rng);

TuningResult random_search_tune(const SeriesCollection& collection, const ParadigmSpec& spec,
                                const TuningBounds& bounds, int trials, std::uint64_t seed, int input_window = 0);

}  // namespace msnet
