#include "msnet/pipeline.hpp"

#include <limits>
#include <random>

namespace msnet {

using Eigen::Index;

const char* to_string(DecomposerKind k) {
    switch (k) {
        case DecomposerKind::None: return "none";
        case DecomposerKind::Mstl: return "mstl";
        case DecomposerKind::Fourier: return "fourier";
    }
    return "?";
}

std::string ParadigmSpec::name() const {
    std::string out = "LSTM-";
    switch (decomposer) {
        case DecomposerKind::None: return "LSTM-Baseline";
        case DecomposerKind::Mstl: out += mstl.periodic ? "MSTL" : "MSTL-" + std::to_string(mstl.seasonal_span); break;
        case DecomposerKind::Fourier: out += "Fourier"; break;
    }
    out += paradigm == Paradigm::DS ? "-DS" : "-SE";
    if (fourier_k1) out += " (k = 1)";
    return out;
}

void check_spec(const ParadigmSpec& spec, const SeasonalPeriods& periods) {
    switch (spec.paradigm) {
        case Paradigm::DS:
            if (spec.decomposer != DecomposerKind::Mstl)
                throw Error(ErrorCode::InvalidSpec, "pipeline", "DS requires an MSTL decomposer");
            break;
        case Paradigm::SE:
            if (spec.decomposer == DecomposerKind::None)
                throw Error(ErrorCode::InvalidSpec, "pipeline", "SE requires MSTL or Fourier exogenous inputs");
            break;
        case Paradigm::Baseline:
            if (spec.decomposer != DecomposerKind::None)
                throw Error(ErrorCode::InvalidSpec, "pipeline", "Baseline takes no decomposer");
            break;
    }
    if (spec.decomposer == DecomposerKind::Fourier) {
        check_fourier_config(periods, spec.fourier);
        if (spec.fourier_k1)
            for (int k : spec.fourier.k_per_period)
                if (k != 1) throw Error(ErrorCode::InvalidSpec, "pipeline", "k = 1 variant requires every k = 1");
    }
}

int exogenous_dim(const ParadigmSpec& spec, const SeasonalPeriods& periods) {
    if (spec.paradigm != Paradigm::SE) return 0;
    if (spec.decomposer == DecomposerKind::Mstl) return static_cast<int>(periods.size());
    return spec.fourier.dimension();
}

namespace {

WindowRecord normalize_frame(const Frame& frame, const ParadigmSpec& spec, const std::optional<Decomposition>& decomp,
                             const SeasonalPeriods& periods) {
    switch (spec.paradigm) {
        case Paradigm::DS: return local_normalize_ds(frame, decomp->trend);
        case Paradigm::SE: {
            const Index last = frame.last_input_index();
            if (spec.decomposer == DecomposerKind::Mstl)
                return local_normalize_se(frame, seasonal_snapshot(*decomp, last));
            return local_normalize_se(frame, fourier_terms(last, periods, spec.fourier));
        }
        case Paradigm::Baseline: return local_normalize_se(frame, Vector{});
    }
    throw Error(ErrorCode::InvalidSpec, "pipeline", "unknown paradigm");
}

}  // namespace

PreparedSeries prepare_series(const Eigen::Ref<const Vector>& preprocessed, const ParadigmSpec& spec,
                              const SeasonalPeriods& periods, int n) {
    PreparedSeries out;
    if (spec.decomposer == DecomposerKind::Mstl) out.decomposition = mstl_decompose(preprocessed, periods, spec.mstl);
    out.model_series = spec.paradigm == Paradigm::DS ? Vector(preprocessed - out.decomposition->seasonal_sum())
                                                     : Vector(preprocessed);
    const auto windows = input_windows(out.model_series, n);
    const Index dim = n + exogenous_dim(spec, periods);
    out.inputs.resize(dim, static_cast<Index>(windows.size()));
    out.factors.resize(static_cast<Index>(windows.size()));
    for (std::size_t j = 0; j < windows.size(); ++j) {
        const auto rec = normalize_frame(windows[j], spec, out.decomposition, periods);
        out.inputs.col(static_cast<Index>(j)) = rec.features();
        out.factors[static_cast<Index>(j)] = rec.local_factor;
    }
    return out;
}

Vector reseasonalize(const Eigen::Ref<const Vector>& base, const Decomposition& decomp, const SeasonalPeriods& periods) {
    if (decomp.seasonal.size() != periods.size())
        throw Error(ErrorCode::ShapeMismatch, "pipeline", "one seasonal component per period is required");
    Vector out = base;
    for (std::size_t j = 0; j < decomp.seasonal.size(); ++j) {
        const Vector& s = decomp.seasonal[j];
        const Index period = periods[j];
        const Index k = s.size();
        if (k < period) throw Error(ErrorCode::SeriesTooShortForPeriod, "pipeline", "component shorter than its period");
        for (Index h = 0; h < out.size(); ++h) out[h] += s[k - period + h % period];
    }
    return out;
}

Vector renormalize(const Eigen::Ref<const Vector>& v, double local_factor, const PreprocessRecord& record) {
    return invert_preprocess(v.array() + local_factor, record);
}

TrainingData build_training_data(const SeriesCollection& collection, const ParadigmSpec& spec, int n) {
    const int m = collection.horizon;
    TrainingData out;
    out.dataset.n = n;
    out.dataset.m = m;
    out.dataset.paradigm = spec.paradigm;
    for (const auto& s : collection.series) {
        const auto [z, record] = preprocess(s.values);
        const auto [train_part, holdout] = holdout_split(z, m);
        const auto prepared = prepare_series(train_part, spec, collection.periods, n);

        for (const auto& frame : moving_windows(prepared.model_series, n, m)) {
            auto rec = normalize_frame(frame, spec, prepared.decomposition, collection.periods);
            rec.series_id = s.id;
            out.dataset.records.push_back(std::move(rec));
        }

        // The held-out window, expressed in the same space the network predicts in.
        Vector target = holdout;
        if (spec.paradigm == Paradigm::DS)
            target = holdout - reseasonalize(Vector::Zero(m), *prepared.decomposition, collection.periods);
        const Index last = prepared.inputs.cols() - 1;
        out.validation.push_back({s.id, prepared.inputs, target.array() - prepared.factors[last]});
    }
    return out;
}

FittedModel fit(const SeriesCollection& collection, const ParadigmSpec& spec, const TrainConfig& config,
                int input_window) {
    const int n = input_window > 0 ? input_window : input_window_length(collection.horizon);
    const auto valid = validate_collection(collection, n);
    check_spec(spec, valid.periods);
    check_train_config(config);

    auto data = build_training_data(valid, spec, n);
    const NetworkShape shape{static_cast<int>(data.dataset.feature_dim()), config.cell_dim, config.hidden_layers,
                             valid.horizon};
    auto trained = train(LstmNetwork<double>::initialized(shape, config.seed), data.dataset, data.validation, config);
    if (trained.aborted) throw Error(ErrorCode::NonFiniteLoss, "lstm", trained.diagnostic);

    FittedModel model;
    model.spec = spec;
    model.periods = valid.periods;
    model.horizon = valid.horizon;
    model.input_window = n;
    model.config = config;
    model.network = std::move(trained.network);
    model.loss_trace = std::move(trained.loss_trace);
    model.validation_loss = trained.best_validation;
    for (const auto& s : valid.series) {
        const auto [z, record] = preprocess(s.values);
        const auto prepared = prepare_series(z, spec, valid.periods, n);
        model.series.push_back({s.id, record, prepared.factors[prepared.factors.size() - 1]});
    }
    return model;
}

ForecastResult forecast(const FittedModel& model, const SeriesCollection& collection) {
    SeriesCollection shaped = collection;
    shaped.periods = model.periods;
    shaped.horizon = model.horizon;
    if (shaped.series.empty()) throw Error(ErrorCode::EmptyCollection, "pipeline", "nothing to forecast");
    for (const auto& s : shaped.series)
        for (Index i = 0; i < s.values.size(); ++i)
            if (!std::isfinite(s.values[i]))
                throw Error(ErrorCode::NonFiniteValue, "core", s.id + " at index " + std::to_string(i));

    ForecastResult result;
    const auto zero_state = zero_states<double>(model.network.shape());
    for (const auto& s : shaped.series) {
        if (s.values.size() < model.input_window)
            throw Error(ErrorCode::SeriesTooShort, "pipeline", s.id + " is shorter than the input window");
        const auto [z, record] = preprocess(s.values);
        auto prepared = prepare_series(z, model.spec, model.periods, model.input_window);
        const auto fwd = network_forward(model.network, prepared.inputs, zero_state);

        SeriesForecast f;
        f.id = s.id;
        f.record = record;
        f.network_output = fwd.outputs.col(fwd.outputs.cols() - 1);
        f.local_factor = prepared.factors[prepared.factors.size() - 1];
        Vector v = f.network_output;
        if (model.spec.paradigm == Paradigm::DS) {
            v = reseasonalize(v, *prepared.decomposition, model.periods);
            f.reseasonalized = true;
        }
        f.forecast = renormalize(v, f.local_factor, record);
        f.components = std::move(prepared.decomposition);
        result.series.push_back(std::move(f));
    }
    return result;
}

TrainConfig sample_config(const TuningBounds& b, std::mt19937_64& rng) {
    auto uniform_int = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto uniform_real = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    TrainConfig c;
    c.cell_dim = uniform_int(b.cell_dim_min, b.cell_dim_max);
    c.mini_batch_size = uniform_int(b.mini_batch_min, b.mini_batch_max);
    c.epoch_size = uniform_int(b.epoch_size_min, b.epoch_size_max);
    c.max_epochs = uniform_int(b.max_epochs_min, b.max_epochs_max);
    c.hidden_layers = uniform_int(b.layers_min, b.layers_max);
    c.noise_std = uniform_real(b.noise_min, b.noise_max);
    c.l2_weight = uniform_real(b.l2_min, b.l2_max);
    c.seed = rng();
    return c;
}

TuningResult random_search_tune(const SeriesCollection& collection, const ParadigmSpec& spec,
                                const TuningBounds& bounds, int trials, std::uint64_t seed, int input_window) {
    if (trials < 1) throw Error(ErrorCode::InvalidConfig, "pipeline", "at least one tuning trial is required");
    check_spec(spec, collection.periods);
    const bool tune_k = spec.decomposer == DecomposerKind::Fourier && !spec.fourier_k1;

    std::mt19937_64 rng(seed);
    TuningResult result;
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        TuningTrial trial;
        trial.config = sample_config(bounds, rng);
        ParadigmSpec trial_spec = spec;
        if (tune_k) {
            FourierConfig f;
            for (int s : collection.periods.values())
                f.k_per_period.push_back(std::uniform_int_distribution<int>(1, s / 2)(rng));
            trial_spec.fourier = f;
            trial.fourier = f;
        }
        const auto model = fit(collection, trial_spec, trial.config, input_window);
        trial.validation_loss = model.validation_loss;
        if (t == 0 || trial.validation_loss < best) {
            best = trial.validation_loss;
            result.best = trial.config;
            result.best_spec = trial_spec;
        }
        result.trials.push_back(std::move(trial));
    }
    return result;
}

}  // namespace msnet
