#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "msnet/experiment.hpp"
#include "msnet/synth.hpp"

namespace fs = std::filesystem;
using namespace msnet;

namespace {

SeriesCollection load_data(const fs::path& data, const std::vector<int>& periods, int horizon, bool exclude_last) {
    if (!fs::exists(data)) throw Error(ErrorCode::IoError, "cli", "dataset not found: " + data.string());
    auto c = ingest_csv(data);
    c.periods = SeasonalPeriods(periods);
    c.horizon = horizon;
    if (exclude_last)
        for (auto& s : c.series) {
            if (s.values.size() <= horizon) throw Error(ErrorCode::SeriesTooShort, "cli", s.id + " is too short");
            s.values = Vector(s.values.head(s.values.size() - horizon));
        }
    return c;
}

void write_components(std::ostream& out, const std::vector<TimeSeries>& series, const SeasonalPeriods& periods,
                      const MstlConfig& config, bool raw) {
    out << "series_id,index,value";
    for (int p : periods.values()) out << ",seasonal_" << p;
    out << ",trend,remainder\n";
    for (const auto& s : series) {
        const Vector x = raw ? s.values : preprocess(s.values).first;
        const auto d = mstl_decompose(x, periods, config);
        for (Eigen::Index t = 0; t < x.size(); ++t) {
            out << s.id << ',' << t << ',' << format_double(x[t]);
            for (const auto& comp : d.seasonal) out << ',' << format_double(comp[t]);
            out << ',' << format_double(d.trend[t]) << ',' << format_double(d.remainder[t]) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-seasonal LSTM forecasting: decomposition, training, forecasting and evaluation"};
    app.require_subcommand(1);

    // validate
    auto* validate = app.add_subcommand("validate", "Check a config and its dataset without training");
    fs::path validate_config;
    validate->add_option("--config", validate_config, "Experiment config (JSON)")->required();

    // decompose
    auto* decompose = app.add_subcommand("decompose", "MSTL components of every series as CSV");
    fs::path decompose_data, decompose_out;
    std::vector<int> decompose_periods;
    std::string decompose_window = "periodic";
    int decompose_inner = 2, decompose_outer = 1;
    bool decompose_raw = false;
    decompose->add_option("--data", decompose_data, "Series CSV")->required();
    decompose->add_option("--periods", decompose_periods, "Seasonal periods, ascending")->required()->delimiter(',');
    decompose->add_option("--seasonal-window", decompose_window, "\"periodic\" or an odd span");
    decompose->add_option("--inner", decompose_inner, "Inner iterations");
    decompose->add_option("--outer", decompose_outer, "Robustness iterations");
    decompose->add_flag("--raw", decompose_raw, "Decompose the raw values instead of the log-scaled series");
    decompose->add_option("--out", decompose_out, "Output CSV (stdout if omitted)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit a model and save the bundle");
    fs::path train_config, train_model;
    train_cmd->add_option("--config", train_config, "Experiment config (JSON)")->required();
    train_cmd->add_option("--model", train_model, "Model bundle to write")->required();

    // forecast
    auto* forecast_cmd = app.add_subcommand("forecast", "Forecast M steps past the end of every series");
    fs::path forecast_model, forecast_data, forecast_out;
    bool exclude_last = false;
    forecast_cmd->add_option("--model", forecast_model, "Model bundle")->required();
    forecast_cmd->add_option("--data", forecast_data, "Series CSV")->required();
    forecast_cmd->add_flag("--exclude-last", exclude_last, "Drop the last M values of each series first");
    forecast_cmd->add_option("--out", forecast_out, "Forecast CSV")->required();

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score forecasts against the last M values of each series");
    fs::path evaluate_forecasts, evaluate_data, evaluate_out;
    std::string evaluate_method = "method";
    double evaluate_epsilon = 0.0;
    int evaluate_season = 1;
    evaluate_cmd->add_option("--forecasts", evaluate_forecasts, "Forecast CSV")->required();
    evaluate_cmd->add_option("--data", evaluate_data, "Series CSV including the test window")->required();
    evaluate_cmd->add_option("--season", evaluate_season, "MASE seasonal lag");
    evaluate_cmd->add_option("--epsilon", evaluate_epsilon, "sMAPE denominator offset");
    evaluate_cmd->add_option("--method", evaluate_method, "Method name recorded in the report");
    evaluate_cmd->add_option("--out", evaluate_out, "Metrics report")->required();

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Friedman and Hochberg tests over metrics reports");
    std::vector<fs::path> compare_reports;
    fs::path compare_out;
    compare_cmd->add_option("reports", compare_reports, "Metrics reports")->required();
    compare_cmd->add_option("--out", compare_out, "Significance table")->required();

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "SVG plots for a run directory");
    fs::path plot_run;
    std::size_t plot_max = 3;
    plot_cmd->add_option("--run", plot_run, "Run directory")->required();
    plot_cmd->add_option("--max-series", plot_max, "Number of series to plot");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic collection");
    SynthConfig synth;
    fs::path synth_out;
    synth_cmd->add_option("--out", synth_out, "Series CSV")->required();
    synth_cmd->add_option("--series", synth.series, "Number of series");
    synth_cmd->add_option("--length", synth.length, "Length of every series");
    synth_cmd->add_option("--periods", synth.periods, "Seasonal periods")->delimiter(',');
    synth_cmd->add_option("--amplitudes", synth.amplitudes, "Relative amplitude per period")->delimiter(',');
    synth_cmd->add_option("--noise", synth.noise, "Relative noise standard deviation");
    synth_cmd->add_option("--slope", synth.slope, "Relative trend per step");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");

    // run
    auto* run_cmd = app.add_subcommand("run", "validate, fit, forecast and evaluate in one step");
    fs::path run_config, run_output;
    run_cmd->add_option("--config", run_config, "Experiment config (JSON)")->required();
    run_cmd->add_option("--output-dir", run_output, "Overrides output_dir from the config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto config = load_experiment_config(validate_config);
            const auto history = load_history(config);
            const int n = config.input_window > 0 ? config.input_window : input_window_length(config.horizon);
            const auto valid = validate_collection(history, n);
            std::cout << "ok: " << valid.series.size() << " series, periods";
            for (int p : valid.periods.values()) std::cout << ' ' << p;
            std::cout << ", horizon " << valid.horizon << ", input window " << n << ", variant " << config.spec.name()
                      << '\n';
        } else if (*decompose) {
            MstlConfig mc;
            if (decompose_window != "periodic") mc = MstlConfig::span_window(std::stoi(decompose_window));
            mc.inner_iterations = decompose_inner;
            mc.outer_iterations = decompose_outer;
            const auto c = load_data(decompose_data, decompose_periods, 1, false);
            std::ostringstream out;
            write_components(out, c.series, c.periods, mc, decompose_raw);
            if (decompose_out.empty()) std::cout << out.str();
            else write_file_atomic(decompose_out, out.str());
        } else if (*train_cmd) {
            const auto config = load_experiment_config(train_config);
            const auto history = load_history(config);
            ParadigmSpec spec = config.spec;
            TrainConfig tc = config.train;
            if (config.tuning_trials > 0) {
                const auto tuned = random_search_tune(history, spec, config.bounds, config.tuning_trials, config.seed,
                                                      config.input_window);
                spec = tuned.best_spec;
                tc = tuned.best;
            }
            const auto model = fit(history, spec, tc, config.input_window);
            std::ostringstream out;
            save_model(out, model);
            write_file_atomic(train_model, out.str());
            std::cout << "validation loss " << format_double(model.validation_loss) << '\n';
        } else if (*forecast_cmd) {
            const auto model = load_model(forecast_model);
            const auto c = load_data(forecast_data, model.periods.values(), model.horizon, exclude_last);
            std::ostringstream out;
            write_forecast_csv(out, forecast(model, c));
            write_file_atomic(forecast_out, out.str());
        } else if (*evaluate_cmd) {
            const auto rows = read_forecast_csv(evaluate_forecasts);
            const auto data = ingest_csv(evaluate_data);
            MetricsReport report;
            report.method = evaluate_method;
            report.epsilon = evaluate_epsilon;
            report.season = evaluate_season;
            for (const auto& row : rows) {
                const auto it = std::find_if(data.series.begin(), data.series.end(),
                                             [&](const TimeSeries& s) { return s.id == row.series_id; });
                if (it == data.series.end())
                    throw Error(ErrorCode::MismatchedSeriesSets, "cli", row.series_id + " is not in the dataset");
                const Eigen::Index m = row.values.size();
                if (it->values.size() <= m) throw Error(ErrorCode::SeriesTooShort, "cli", row.series_id + " is too short");
                const Vector test = it->values.tail(m);
                const Vector hist = it->values.head(it->values.size() - m);
                report.errors.push_back({row.series_id, smape(row.values, test, evaluate_epsilon),
                                         mase(row.values, test, hist, evaluate_season)});
            }
            report.summary = summarize(report.errors);
            std::ostringstream out;
            write_metrics(out, report);
            write_file_atomic(evaluate_out, out.str());
            std::cout << "mean sMAPE " << format_double(report.summary.mean_smape) << ", mean MASE "
                      << format_double(report.summary.mean_mase) << '\n';
        } else if (*compare_cmd) {
            const auto sig = compare_methods(compare_reports, compare_out);
            std::cout << "Friedman p " << format_double(sig.friedman_p) << ", control " << sig.control_method << '\n';
        } else if (*plot_cmd) {
            for (const auto& p : emit_plots(plot_run, plot_max)) std::cout << p.string() << '\n';
        } else if (*synth_cmd) {
            std::ostringstream out;
            write_series_csv(out, synthesize(synth));
            write_file_atomic(synth_out, out.str());
        } else if (*run_cmd) {
            auto config = load_experiment_config(run_config);
            if (!run_output.empty()) config.output_dir = run_output;
            const auto outcome = run_experiment(config);
            std::cout << outcome.metrics.method << ": mean sMAPE " << format_double(outcome.metrics.summary.mean_smape)
                      << ", mean MASE " << format_double(outcome.metrics.summary.mean_mase) << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: [cli] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
