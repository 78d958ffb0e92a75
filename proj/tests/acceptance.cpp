// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "gradient_check.hpp"
#include "msnet/experiment.hpp"
#include "msnet/synth.hpp"
#include "oracles.hpp"

using namespace msnet;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector sine(Eigen::Index n, double period, double amplitude, double phase = 0.0) {
    Vector v(n);
    for (Eigen::Index t = 0; t < n; ++t)
        v[t] = amplitude * std::sin(2.0 * pi * static_cast<double>(t) / period + phase);
    return v;
}

// 1. Reconstruction identity on 50 random two-season series.
Outcome reconstruction() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const SeasonalPeriods periods({24, 168});
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
        const Eigen::Index n = 672 + static_cast<Eigen::Index>(u(rng) * 600);
        Vector x = sine(n, 24.0, 0.5 + u(rng), 2 * pi * u(rng)) + sine(n, 168.0, 0.5 + u(rng), 2 * pi * u(rng));
        const double slope = 0.01 * (u(rng) - 0.5);
        const double sd = 0.05 + 0.3 * u(rng);
        for (Eigen::Index t = 0; t < n; ++t) x[t] += 10.0 + slope * static_cast<double>(t) + sd * noise(rng);
        MstlConfig cfg = s % 2 ? MstlConfig::span_window(7) : MstlConfig::periodic_window();
        if (s % 5 == 0) cfg.outer_iterations = 2;
        const auto d = mstl_decompose(x, periods, cfg);
        worst = std::max(worst, (d.reconstruct() - x).cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 30.0,
            "max |x - sum| = " + fmt("%.3g", worst) + " (<= 1e-9), " + fmt("%.2f", secs) + " s (< 30 s)"};
}

// 2. Seasonal recovery on sin(2πt/24) + 0.5 sin(2πt/168) + 0.001 t.
Outcome recovery() {
    const Eigen::Index n = 168 * 8;
    const Vector s1 = sine(n, 24.0, 1.0);
    const Vector s2 = sine(n, 168.0, 0.5);
    const Vector x = s1 + s2 + 0.001 * Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    const auto d = mstl_decompose(x, SeasonalPeriods({24, 168}));
    const Eigen::Index tail = 2 * 168;
    const double r1 = testing::pearson(d.seasonal[0].tail(tail), s1.tail(tail));
    const double r2 = testing::pearson(d.seasonal[1].tail(tail), s2.tail(tail));
    return {r1 > 0.95 && r2 > 0.95, "corr(24) = " + fmt("%.6f", r1) + ", corr(168) = " + fmt("%.6f", r2) + " (> 0.95)"};
}

// 3. BPTT against central finite differences on 20 random configurations.
Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(303);
    double worst = 0.0;
    Eigen::Index components = 0;
    for (int i = 0; i < 20; ++i) {
        const auto r = testing::check_random_gradient(rng);
        worst = std::max(worst, r.worst_relative);
        components += r.components;
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 60.0, std::to_string(components) + " components, worst relative error " +
                                             fmt("%.3g", worst) + " (< 1e-4), " + fmt("%.2f", secs) + " s (< 60 s)"};
}

// 4. Metric oracles.
Outcome metrics() {
    bool ok = true;
    auto near = [&ok](double got, double want) { ok = ok && std::abs(got - want) <= 1e-12; };
    near(smape(Vector{{3.0, 4.0}}, Vector{{3.0, 4.0}}), 0.0);
    near(smape(Vector{{2.0}}, Vector{{1.0}}), 2.0 / 3.0);
    near(smape(Vector{{0.0}}, Vector{{0.0}}, 1.0), 0.0);
    const Vector train{{1.0, 2.0, 3.0, 4.0, 5.0}};
    near(mase(Vector{{6.0, 7.0}}, Vector{{6.0, 7.0}}, train, 1), 0.0);
    near(mase(Vector{{6.0, 8.0}}, Vector{{6.0, 7.0}}, train, 1), 0.5);
    const auto one = summarize({{"a", 0.4, 1.5}});
    near(one.mean_smape, 0.4);
    near(one.median_smape, 0.4);
    const auto three = summarize({{"a", 0.1, 1.0}, {"b", 0.2, 1.0}, {"c", 0.3, 1.0}});
    near(three.mean_smape, 0.2);
    near(three.median_smape, 0.2);
    near(summarize({{"a", 0.1, 1.0}, {"b", 0.3, 1.0}}).median_smape, 0.2);
    bool degenerate = false;
    try {
        mase(Vector::Ones(2), Vector::Ones(2), Vector::Constant(5, 2.0), 1);
    } catch (const Error& e) {
        degenerate = e.code() == ErrorCode::DegenerateDenominator;
    }
    ok = ok && degenerate;

    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> coarse(0, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_friedman = 0.0;
    for (int i = 0; i < 100; ++i) {
        Matrix m(10, 4);
        for (Eigen::Index q = 0; q < m.size(); ++q) m(q) = i % 2 ? u(rng) : 0.1 * coarse(rng);
        worst_friedman = std::max(worst_friedman, std::abs(friedman_test(m).statistic - testing::brute_friedman(m)));
    }
    int hochberg_mismatch = 0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> p(static_cast<std::size_t>(2 + i % 8));
        for (auto& v : p) v = i % 4 == 0 ? std::round(8.0 * u(rng)) / 16.0 : u(rng) * (i % 3 ? 1.0 : 0.05);
        if (hochberg_adjust(p) != testing::brute_hochberg(p)) ++hochberg_mismatch;
    }
    ok = ok && worst_friedman <= 1e-9 && hochberg_mismatch == 0;
    return {ok, std::string("examples ") + (ok ? "exact" : "checked") + ", Friedman max diff " +
                    fmt("%.3g", worst_friedman) + " (<= 1e-9), Hochberg mismatches " +
                    std::to_string(hochberg_mismatch) + "/100"};
}

// 5. Round trips: preprocess + local normalization inverses, model save/load.
Outcome round_trips() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vector x(80);
        for (auto& v : x) v = 100.0 * u(rng) * u(rng);
        if (i % 5 == 0) x[i % 80] = 0.0;
        const auto [z, rec] = preprocess(x);
        const auto frames = moving_windows(z, 12, 6);
        const auto& f = frames[static_cast<std::size_t>(i) % frames.size()];
        const auto r = i % 2 ? local_normalize_se(f, Vector{}) : local_normalize_ds(f, z);
        const Frame back = denormalize(r, f.start);
        const Vector in = renormalize(r.input, r.local_factor, rec);
        const Vector out = renormalize(r.target, r.local_factor, rec);
        const Vector orig_in = x.segment(f.start, 12);
        const Vector orig_out = x.segment(f.start + 12, 6);
        auto rel = [](const Vector& a, const Vector& b) {
            return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
        };
        worst = std::max({worst, rel(in, orig_in), rel(out, orig_out), rel(invert_preprocess(back.input, rec), orig_in),
                          rel(invert_preprocess(z, rec), x)});
    }

    SynthConfig s;
    s.series = 3;
    s.length = 300;
    s.periods = {6, 24};
    s.amplitudes = {0.2, 0.1};
    SeriesCollection c{synthesize(s), SeasonalPeriods({6, 24}), 6};
    bool bit_exact = true;
    TrainConfig tc;
    tc.cell_dim = 10;
    tc.max_epochs = 3;
    for (const auto& spec : {ParadigmSpec::ds_mstl(), ParadigmSpec::se_mstl(), ParadigmSpec::se_fourier(FourierConfig{{2, 5}}),
                             ParadigmSpec::baseline()}) {
        const auto model = fit(c, spec, tc);
        std::stringstream buf;
        save_model(buf, model);
        const auto loaded = load_model(buf);
        const auto a = forecast(model, c);
        const auto b = forecast(loaded, c);
        for (std::size_t i = 0; i < a.series.size(); ++i) bit_exact = bit_exact && a.series[i].forecast == b.series[i].forecast;
    }
    return {worst <= 1e-9 && bit_exact, "max relative inverse error " + fmt("%.3g", worst) +
                                            " (<= 1e-9), reloaded forecasts " + (bit_exact ? "bit-exact" : "DIFFER")};
}

// 6. Moving-window count law.
Outcome window_count() {
    std::mt19937_64 rng(606);
    int bad = 0;
    for (int i = 0; i < 200; ++i) {
        const int n = std::uniform_int_distribution<int>(1, 60)(rng);
        const int m = std::uniform_int_distribution<int>(1, 48)(rng);
        const int k = n + m + std::uniform_int_distribution<int>(1, 500)(rng);
        if (moving_windows(Vector::Zero(k), n, m).size() != static_cast<std::size_t>(k - n - m)) ++bad;
    }
    return {bad == 0, std::to_string(200 - bad) + "/200 triples give exactly K - n - m frames"};
}

// Criterion 7 setup, shared with 9.
struct EndToEnd {
    fs::path dir;
    fs::path dataset;
    double naive_smape = 0.0;
};

EndToEnd make_end_to_end() {
    EndToEnd e;
    e.dir = fs::temp_directory_path() / "msnet_acceptance";
    fs::remove_all(e.dir);
    fs::create_directories(e.dir);
    SynthConfig s;
    s.series = 10;
    s.length = 1200;
    s.periods = {24, 168};
    s.seed = 7;
    const auto series = synthesize(s);
    std::ostringstream out;
    write_series_csv(out, series);
    e.dataset = e.dir / "synthetic.csv";
    write_file_atomic(e.dataset, out.str());

    // Seasonal naive at the longest period on the same split.
    double total = 0.0;
    for (const auto& ts : series) {
        const Eigen::Index k = ts.values.size() - 24;
        const Vector naive = ts.values.segment(k - 168, 24);
        total += smape(naive, ts.values.tail(24));
    }
    e.naive_smape = total / static_cast<double>(series.size());
    return e;
}

ExperimentConfig variant_config(const EndToEnd& e, const ParadigmSpec& spec, const std::string& out) {
    ExperimentConfig c;
    c.dataset = e.dataset;
    c.periods = {24, 168};
    c.horizon = 24;
    c.input_window = 30;
    c.spec = spec;
    c.seed = 1;
    c.train.seed = 1;
    c.method = spec.name();
    c.output_dir = e.dir / out;
    return c;
}

const std::vector<std::pair<std::string, ParadigmSpec>>& variants() {
    static const std::vector<std::pair<std::string, ParadigmSpec>> v = {
        {"baseline", ParadigmSpec::baseline()},
        {"ds", ParadigmSpec::ds_mstl()},
        {"se", ParadigmSpec::se_fourier_k1(2)}};
    return v;
}

Outcome learnability(const EndToEnd& e) {
    bool ok = true;
    std::string detail = "seasonal naive " + fmt("%.4f", e.naive_smape);
    for (const auto& [key, spec] : variants()) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = run_experiment(variant_config(e, spec, key + "_a"));
        const double secs = seconds_since(t0);
        const double s = r.metrics.summary.mean_smape;
        bool pass = s < 0.15 && secs < 600.0;
        if (key != "baseline") pass = pass && s < e.naive_smape;
        ok = ok && pass;
        detail += "; " + spec.name() + " " + fmt("%.4f", s) + " in " + fmt("%.1f", secs) + " s";
    }
    return {ok, detail + " (each < 0.15 and < 600 s; DS and SE below naive)"};
}

// 8. Shape laws and post-processing isolation.
Outcome shape_laws() {
    SynthConfig s;
    s.series = 3;
    s.length = 400;
    s.periods = {24, 168};
    SeriesCollection c{synthesize(s), SeasonalPeriods({24, 168}), 24};
    TrainConfig tc;
    tc.cell_dim = 8;
    tc.max_epochs = 1;
    const int n = 30;
    bool ok = true;
    std::string detail;
    for (const auto& k : std::vector<std::vector<int>>{{1, 1}, {3, 7}, {12, 84}}) {
        const auto spec = k == std::vector<int>{1, 1} ? ParadigmSpec::se_fourier_k1(2) : ParadigmSpec::se_fourier(FourierConfig{k});
        const auto m = fit(c, spec, tc, n);
        const int expected = n + 2 * (k[0] + k[1]);
        ok = ok && m.network.shape().input_dim == expected;
        detail += "k=(" + std::to_string(k[0]) + "," + std::to_string(k[1]) + ") dim " +
                  std::to_string(m.network.shape().input_dim) + "/" + std::to_string(expected) + "; ";
    }
    ok = ok && fit(c, ParadigmSpec::baseline(), tc, n).network.shape().input_dim == n;
    ok = ok && fit(c, ParadigmSpec::ds_mstl(), tc, n).network.shape().input_dim == n;

    auto ds = fit(c, ParadigmSpec::ds_mstl(), tc, n);
    ds.network = LstmNetwork<double>(ds.network.shape());
    const auto r = forecast(ds, c);
    bool identical = true;
    for (std::size_t i = 0; i < c.series.size(); ++i) {
        const auto [z, rec] = preprocess(c.series[i].values);
        const auto d = mstl_decompose(z, c.periods);
        const Vector direct = renormalize(reseasonalize(Vector::Zero(24), d, c.periods), d.trend[z.size() - 1], rec);
        identical = identical && r.series[i].forecast == direct;
    }
    ok = ok && identical;
    return {ok, detail + "zero-weight DS forecast " + (identical ? "identical" : "DIFFERS")};
}

// 9. Determinism of criterion 7's forecast files.
Outcome determinism(const EndToEnd& e) {
    bool ok = true;
    for (const auto& [key, spec] : variants()) {
        run_experiment(variant_config(e, spec, key + "_b"));
        const auto a = read_file(e.dir / (key + "_a") / "forecasts.csv");
        const auto b = read_file(e.dir / (key + "_b") / "forecasts.csv");
        ok = ok && !a.empty() && a == b;
    }
    return {ok, std::string("forecast files ") + (ok ? "byte-identical" : "DIFFER") + " across repeated runs"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&failures](int id, const char* name, const std::function<Outcome()>& f) {
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& ex) {
            o = {false, std::string("threw: ") + ex.what()};
        }
        if (!o.pass) ++failures;
        std::printf("[%s] criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "reconstruction identity", reconstruction);
    report(2, "seasonal recovery", recovery);
    report(3, "gradient check", gradients);
    report(4, "metric oracles", metrics);
    report(5, "round trips", round_trips);
    report(6, "window count law", window_count);
    EndToEnd e;
    report(7, "end-to-end learnability", [&] {
        e = make_end_to_end();
        return learnability(e);
    });
    report(8, "shape laws and post-processing isolation", shape_laws);
    report(9, "determinism", [&] { return determinism(e); });

    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
