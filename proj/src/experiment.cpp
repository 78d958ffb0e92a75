#include "msnet/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace msnet {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_config_keys() {
    static const std::vector<std::string> keys = {
        "dataset",       "periods",         "horizon",       "input_window",     "paradigm",
        "decomposer",    "seasonal_window", "inner_iterations", "outer_iterations", "fourier_k",
        "fourier_k1",    "cell_dim",        "hidden_layers", "mini_batch_size",  "epoch_size",
        "max_epochs",    "noise_std",       "l2_weight",     "tuning_trials",    "seed",
        "epsilon",       "mase_season",     "output_dir",    "method",           "test_holdout"};
    return keys;
}

namespace {

Error config_error(const std::string& what) { return Error(ErrorCode::InvalidConfig, "cli", what); }

template <typename T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error(std::string("key '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "cli", e.what());
    }
    if (!j.is_object()) throw config_error("config must be a flat JSON object");
    const auto& keys = experiment_config_keys();
    for (const auto& [key, value] : j.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw config_error("unknown key '" + key + "'");

    ExperimentConfig c;
    if (!j.contains("dataset")) throw config_error("'dataset' is required");
    if (!j.contains("periods")) throw config_error("'periods' is required");
    if (!j.contains("horizon")) throw config_error("'horizon' is required");
    c.dataset = get<std::string>(j, "dataset", "");
    if (c.dataset.is_relative() && !base_dir.empty()) c.dataset = base_dir / c.dataset;
    c.periods = get<std::vector<int>>(j, "periods", {});
    c.horizon = get<int>(j, "horizon", 1);
    c.input_window = get<int>(j, "input_window", 0);

    const auto paradigm = paradigm_from_string(get<std::string>(j, "paradigm", "Baseline"));
    const auto decomposer = get<std::string>(j, "decomposer", paradigm == Paradigm::Baseline ? "none" : "mstl");
    c.spec.paradigm = paradigm;
    if (decomposer == "none") c.spec.decomposer = DecomposerKind::None;
    else if (decomposer == "mstl") c.spec.decomposer = DecomposerKind::Mstl;
    else if (decomposer == "fourier") c.spec.decomposer = DecomposerKind::Fourier;
    else throw config_error("unknown decomposer '" + decomposer + "'");

    if (j.contains("seasonal_window")) {
        const auto& w = j.at("seasonal_window");
        if (w.is_string() && w.get<std::string>() == "periodic") {
            c.spec.mstl.periodic = true;
        } else if (w.is_number_integer()) {
            c.spec.mstl.periodic = false;
            c.spec.mstl.seasonal_span = w.get<int>();
        } else {
            throw config_error("seasonal_window must be \"periodic\" or an odd integer");
        }
    }
    c.spec.mstl.inner_iterations = get<int>(j, "inner_iterations", c.spec.mstl.inner_iterations);
    c.spec.mstl.outer_iterations = get<int>(j, "outer_iterations", c.spec.mstl.outer_iterations);
    c.spec.fourier_k1 = get<bool>(j, "fourier_k1", false);
    if (c.spec.decomposer == DecomposerKind::Fourier) {
        const auto k = get<std::vector<int>>(j, "fourier_k", {});
        c.spec.fourier.k_per_period = c.spec.fourier_k1 || k.empty() ? std::vector<int>(c.periods.size(), 1) : k;
    }

    c.train.cell_dim = get<int>(j, "cell_dim", c.train.cell_dim);
    c.train.hidden_layers = get<int>(j, "hidden_layers", c.train.hidden_layers);
    c.train.mini_batch_size = get<int>(j, "mini_batch_size", c.train.mini_batch_size);
    c.train.epoch_size = get<int>(j, "epoch_size", c.train.epoch_size);
    c.train.max_epochs = get<int>(j, "max_epochs", c.train.max_epochs);
    c.train.noise_std = get<double>(j, "noise_std", c.train.noise_std);
    c.train.l2_weight = get<double>(j, "l2_weight", c.train.l2_weight);
    c.tuning_trials = get<int>(j, "tuning_trials", 0);
    c.seed = get<std::uint64_t>(j, "seed", 1);
    c.train.seed = c.seed;
    c.epsilon = get<double>(j, "epsilon", 0.0);
    c.mase_season = get<int>(j, "mase_season", 0);
    c.output_dir = get<std::string>(j, "output_dir", "");
    if (c.output_dir.is_relative() && !c.output_dir.empty() && !base_dir.empty()) c.output_dir = base_dir / c.output_dir;
    c.method = get<std::string>(j, "method", c.spec.name());
    c.test_holdout = get<bool>(j, "test_holdout", true);

    // Range checks that do not need the data.
    const SeasonalPeriods periods(c.periods);
    if (c.horizon < 1) throw config_error("horizon must be >= 1");
    if (c.input_window < 0) throw config_error("input_window must be >= 0");
    if (c.tuning_trials < 0) throw config_error("tuning_trials must be >= 0");
    if (c.epsilon < 0.0) throw config_error("epsilon must be >= 0");
    if (c.mase_season < 0) throw config_error("mase_season must be >= 0");
    check_spec(c.spec, periods);
    check_train_config(c.train);
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    return parse_experiment_config(read_file(path), path.parent_path());
}

std::string experiment_config_json(const ExperimentConfig& c) {
    json j = json::object();
    j["dataset"] = c.dataset.string();
    j["periods"] = c.periods;
    j["horizon"] = c.horizon;
    j["input_window"] = c.input_window;
    j["paradigm"] = to_string(c.spec.paradigm);
    j["decomposer"] = to_string(c.spec.decomposer);
    if (c.spec.mstl.periodic) j["seasonal_window"] = "periodic";
    else j["seasonal_window"] = c.spec.mstl.seasonal_span;
    j["inner_iterations"] = c.spec.mstl.inner_iterations;
    j["outer_iterations"] = c.spec.mstl.outer_iterations;
    j["fourier_k"] = c.spec.fourier.k_per_period;
    j["fourier_k1"] = c.spec.fourier_k1;
    j["cell_dim"] = c.train.cell_dim;
    j["hidden_layers"] = c.train.hidden_layers;
    j["mini_batch_size"] = c.train.mini_batch_size;
    j["epoch_size"] = c.train.epoch_size;
    j["max_epochs"] = c.train.max_epochs;
    j["noise_std"] = c.train.noise_std;
    j["l2_weight"] = c.train.l2_weight;
    j["tuning_trials"] = c.tuning_trials;
    j["seed"] = c.seed;
    j["epsilon"] = c.epsilon;
    j["mase_season"] = c.mase_season;
    j["output_dir"] = c.output_dir.string();
    j["method"] = c.method;
    j["test_holdout"] = c.test_holdout;
    return j.dump(2);
}

SeriesCollection load_history(const ExperimentConfig& c) {
    if (!fs::exists(c.dataset)) throw Error(ErrorCode::IoError, "cli", "dataset not found: " + c.dataset.string());
    auto collection = ingest_csv(c.dataset);
    collection.periods = SeasonalPeriods(c.periods);
    collection.horizon = c.horizon;
    if (c.test_holdout) {
        for (auto& s : collection.series) {
            if (s.values.size() <= c.horizon)
                throw Error(ErrorCode::SeriesTooShort, "cli", s.id + " cannot spare a test window");
            s.values = Vector(s.values.head(s.values.size() - c.horizon));
        }
    }
    return collection;
}

ExperimentOutcome execute_experiment(const ExperimentConfig& c) {
    if (!c.test_holdout) throw config_error("scoring an experiment requires test_holdout = true");
    if (!fs::exists(c.dataset)) throw Error(ErrorCode::IoError, "cli", "dataset not found: " + c.dataset.string());
    auto full = ingest_csv(c.dataset);
    const auto history = load_history(c);
    const int n = c.input_window > 0 ? c.input_window : input_window_length(c.horizon);
    validate_collection(history, n);

    ParadigmSpec spec = c.spec;
    TrainConfig train_config = c.train;
    if (c.tuning_trials > 0) {
        const auto tuned = random_search_tune(history, spec, c.bounds, c.tuning_trials, c.seed, c.input_window);
        spec = tuned.best_spec;
        train_config = tuned.best;
    }

    ExperimentOutcome out;
    out.model = fit(history, spec, train_config, c.input_window);
    out.forecasts = forecast(out.model, history);

    out.metrics.method = c.method.empty() ? spec.name() : c.method;
    out.metrics.epsilon = c.epsilon;
    out.metrics.season = c.mase_season > 0 ? c.mase_season : history.periods.longest();
    for (std::size_t i = 0; i < history.series.size(); ++i) {
        const auto& hist = history.series[i].values;
        const Vector test = full.series[i].values.tail(c.horizon);
        const auto& f = out.forecasts.series[i].forecast;
        out.metrics.errors.push_back({history.series[i].id, smape(f, test, c.epsilon),
                                      mase(f, test, hist, out.metrics.season)});
    }
    out.metrics.summary = summarize(out.metrics.errors);
    return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig& c) {
    if (c.output_dir.empty()) throw config_error("output_dir is required");
    auto out = execute_experiment(c);

    // Render everything before touching the output directory.
    std::ostringstream forecasts, metrics, model;
    write_forecast_csv(forecasts, out.forecasts);
    write_metrics(metrics, out.metrics);
    save_model(model, out.model);

    json manifest = json::object();
    manifest["format"] = kManifestFormatTag;
    manifest["files"] = {{"forecasts", {{"path", "forecasts.csv"}, {"header", kForecastCsvHeader}}},
                         {"metrics", {{"path", "metrics.tsv"}, {"format", kMetricsFormatTag}}},
                         {"model", {{"path", "model.txt"}, {"format", kModelFormatTag}}}};
    manifest["config"] = json::parse(experiment_config_json(c));
    manifest["seed"] = c.seed;
    manifest["selected_train_config"] = {{"cell_dim", out.model.config.cell_dim},
                                         {"hidden_layers", out.model.config.hidden_layers},
                                         {"mini_batch_size", out.model.config.mini_batch_size},
                                         {"epoch_size", out.model.config.epoch_size},
                                         {"max_epochs", out.model.config.max_epochs},
                                         {"noise_std", out.model.config.noise_std},
                                         {"l2_weight", out.model.config.l2_weight}};
    manifest["fourier_k"] = out.model.spec.fourier.k_per_period;
    manifest["input_window"] = out.model.input_window;
    manifest["versions"] = {{"msnet", kLibraryVersion},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"compiler", __VERSION__}};

    write_file_atomic(c.output_dir / "forecasts.csv", forecasts.str());
    write_file_atomic(c.output_dir / "metrics.tsv", metrics.str());
    write_file_atomic(c.output_dir / "model.txt", model.str());
    write_file_atomic(c.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return out;
}

SignificanceReport compare_methods(const std::vector<MetricsReport>& reports) {
    if (reports.size() < 2) throw Error(ErrorCode::DegenerateMatrix, "evaluate", "need at least two reports");
    const auto& first = reports.front();
    std::set<std::string> ids;
    for (const auto& e : first.errors) ids.insert(e.series_id);
    std::set<std::string> names;
    for (const auto& r : reports) {
        if (!names.insert(r.method).second)
            throw Error(ErrorCode::InvalidConfig, "cli", "duplicate method name '" + r.method + "'");
        std::set<std::string> other;
        for (const auto& e : r.errors) other.insert(e.series_id);
        if (other != ids || r.errors.size() != first.errors.size())
            throw Error(ErrorCode::MismatchedSeriesSets, "cli", r.method + " covers a different set of series");
    }

    Matrix errors(static_cast<Eigen::Index>(first.errors.size()), static_cast<Eigen::Index>(reports.size()));
    std::vector<std::string> methods;
    for (std::size_t j = 0; j < reports.size(); ++j) {
        methods.push_back(reports[j].method);
        std::map<std::string, double> by_id;
        for (const auto& e : reports[j].errors) by_id[e.series_id] = e.smape;
        for (std::size_t i = 0; i < first.errors.size(); ++i)
            errors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = by_id.at(first.errors[i].series_id);
    }
    return significance(errors, methods);
}

SignificanceReport compare_methods(const std::vector<fs::path>& paths, const fs::path& output) {
    std::vector<MetricsReport> reports;
    for (const auto& p : paths) reports.push_back(read_metrics(p));
    auto sig = compare_methods(reports);
    std::ostringstream out;
    write_significance(out, sig, reports);
    write_file_atomic(output, out.str());
    return sig;
}

namespace {

struct Panel {
    std::string title;
    std::vector<std::pair<std::vector<double>, std::string>> lines;  // y values with colour; x is shared
    std::size_t x_count = 0;
};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string render_svg(const std::string& title, const std::vector<Panel>& panels) {
    constexpr double width = 800.0, panel_h = 180.0, margin = 40.0;
    const double height = margin + panels.size() * (panel_h + margin);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double top = margin + p * (panel_h + margin);
        double lo = 1e300, hi = -1e300;
        for (const auto& [ys, colour] : panel.lines)
            for (double y : ys)
                if (std::isfinite(y)) lo = std::min(lo, y), hi = std::max(hi, y);
        if (!(hi > lo)) hi = lo + 1.0;
        const double xs = (width - 2 * margin) / std::max<double>(1.0, static_cast<double>(panel.x_count) - 1.0);
        svg << "<g class=\"" << (p == 0 ? "forecast-panel" : "seasonal-panel") << "\">\n";
        svg << "<rect x=\"" << margin << "\" y=\"" << fmt2(top) << "\" width=\"" << width - 2 * margin << "\" height=\""
            << panel_h << "\" fill=\"none\" stroke=\"#999\"/>\n";
        svg << "<text x=\"" << margin + 4 << "\" y=\"" << fmt2(top + 14) << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << panel.title << "</text>\n";
        for (const auto& [ys, colour] : panel.lines) {
            svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1\" points=\"";
            for (std::size_t i = 0; i < ys.size(); ++i) {
                if (!std::isfinite(ys[i])) continue;
                const double x = margin + xs * static_cast<double>(i);
                const double y = top + panel_h - (ys[i] - lo) / (hi - lo) * panel_h;
                svg << fmt2(x) << ',' << fmt2(y) << ' ';
            }
            svg << "\"/>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::vector<fs::path> emit_plots(const fs::path& run_dir, std::size_t max_series) {
    const auto manifest_path = run_dir / "manifest.json";
    const auto forecasts_path = run_dir / "forecasts.csv";
    const auto model_path = run_dir / "model.txt";
    for (const auto& p : {manifest_path, forecasts_path, model_path})
        if (!fs::exists(p)) throw Error(ErrorCode::MissingArtifacts, "cli", "missing " + p.string());

    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, "cli", std::string("manifest: ") + e.what());
    }
    const auto config = parse_experiment_config(manifest.at("config").dump());
    const auto model = load_model(model_path);
    const auto history = load_history(config);
    const auto rows = read_forecast_csv(forecasts_path);
    const auto full = ingest_csv(config.dataset);

    std::vector<fs::path> written;
    const std::size_t count = std::min(max_series, rows.size());
    for (std::size_t i = 0; i < count; ++i) {
        const auto& row = rows[i];
        const auto it = std::find_if(history.series.begin(), history.series.end(),
                                     [&](const TimeSeries& s) { return s.id == row.series_id; });
        if (it == history.series.end())
            throw Error(ErrorCode::MissingArtifacts, "cli", "series " + row.series_id + " not in the dataset");
        const Vector& hist = it->values;
        const Eigen::Index m = row.values.size();
        const Eigen::Index shown = std::min<Eigen::Index>(hist.size(), 2 * model.periods.longest());
        const std::size_t x_count = static_cast<std::size_t>(shown + m);
        const double nan = std::numeric_limits<double>::quiet_NaN();

        Panel main{"history and forecast", {}, x_count};
        std::vector<double> h(x_count, nan), f(x_count, nan), actual(x_count, nan);
        for (Eigen::Index t = 0; t < shown; ++t) h[static_cast<std::size_t>(t)] = hist[hist.size() - shown + t];
        for (Eigen::Index t = 0; t < m; ++t) f[static_cast<std::size_t>(shown + t)] = row.values[t];
        const auto& full_values = full.series[static_cast<std::size_t>(it - history.series.begin())].values;
        if (config.test_holdout)
            for (Eigen::Index t = 0; t < m; ++t) actual[static_cast<std::size_t>(shown + t)] = full_values[hist.size() + t];
        main.lines = {{h, "#1f77b4"}, {actual, "#7f7f7f"}, {f, "#d62728"}};
        std::vector<Panel> panels{main};

        if (model.spec.decomposer == DecomposerKind::Mstl) {
            const auto [z, record] = preprocess(hist);
            const auto d = mstl_decompose(z, model.periods, model.spec.mstl);
            for (std::size_t j = 0; j < d.seasonal.size(); ++j) {
                Panel sp{"seasonal component, period " + std::to_string(model.periods[j]), {}, x_count};
                std::vector<double> s(x_count, nan);
                for (Eigen::Index t = 0; t < shown; ++t)
                    s[static_cast<std::size_t>(t)] = d.seasonal[j][hist.size() - shown + t];
                sp.lines = {{s, "#2ca02c"}};
                panels.push_back(std::move(sp));
            }
        }
        const auto path = run_dir / ("plot_" + row.series_id + ".svg");
        write_file_atomic(path, render_svg(config.method + " - " + row.series_id, panels));
        written.push_back(path);
    }
    return written;
}

}  // namespace msnet
