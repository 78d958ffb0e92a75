#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msnet/io.hpp"
#include "msnet/pipeline.hpp"

namespace msnet {

inline constexpr const char* kManifestFormatTag = "lstm-msnet-run v1";
inline constexpr const char* kLibraryVersion = "0.1.0";

/// One experiment. Loaded from a flat JSON object; unknown keys are rejected.
struct ExperimentConfig {
    std::filesystem::path dataset;
    std::vector<int> periods;
    int horizon = 1;
    int input_window = 0;  // 0 selects ceil(1.25 M)
    ParadigmSpec spec;
    TrainConfig train;
    int tuning_trials = 0;
    TuningBounds bounds;
    std::uint64_t seed = 1;
    double epsilon = 0.0;
    int mase_season = 0;   // 0 selects the longest period
    std::filesystem::path output_dir;
    std::string method;    // defaults to the variant name
    bool test_holdout = true;
};

/// Documented config keys, in the order they are echoed to the manifest.
const std::vector<std::string>& experiment_config_keys();

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& config);

struct ExperimentOutcome {
    FittedModel model;
    ForecastResult forecasts;
    MetricsReport metrics;
};

/// Splits the dataset into history and test, validates, fits (optionally
/// tuned), forecasts, and scores the test window.
ExperimentOutcome execute_experiment(const ExperimentConfig& config);

/// execute_experiment plus forecasts.csv, metrics.tsv, model.txt and
/// manifest.json written atomically into config.output_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Loads a dataset, applies periods/horizon and optionally strips the last `horizon` values.
SeriesCollection load_history(const ExperimentConfig& config);

/// Friedman + Hochberg over the sMAPE columns of several metrics reports.
SignificanceReport compare_methods(const std::vector<MetricsReport>& reports);
SignificanceReport compare_methods(const std::vector<std::filesystem::path>& reports,
                                   const std::filesystem::path& output);

/// SVG per selected series: history + forecast, plus one panel per seasonal
/// component when the run used MSTL.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir, std::size_t max_series = 3);

}  // namespace msnet
