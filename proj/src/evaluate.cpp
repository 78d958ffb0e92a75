#include "msnet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msnet {

using Eigen::Index;

double smape(const Eigen::Ref<const Vector>& forecast, const Eigen::Ref<const Vector>& actual, double epsilon) {
    if (forecast.size() != actual.size() || forecast.size() == 0)
        throw Error(ErrorCode::LengthMismatch, "evaluate", "forecast and actual must have the same nonzero length");
    double total = 0.0;
    for (Index t = 0; t < forecast.size(); ++t) {
        const double num = std::abs(forecast[t] - actual[t]);
        const double den = std::abs(forecast[t]) + std::abs(actual[t]) + epsilon;
        if (den > 0.0) total += num / den;
    }
    return 2.0 * total / static_cast<double>(forecast.size());
}

double mase(const Eigen::Ref<const Vector>& forecast, const Eigen::Ref<const Vector>& actual,
            const Eigen::Ref<const Vector>& train, int season) {
    if (forecast.size() != actual.size() || forecast.size() == 0)
        throw Error(ErrorCode::LengthMismatch, "evaluate", "forecast and actual must have the same nonzero length");
    if (season < 1 || train.size() <= season)
        throw Error(ErrorCode::DegenerateDenominator, "evaluate", "training series not longer than the season");
    const Index n = train.size();
    const double naive = (train.tail(n - season) - train.head(n - season)).cwiseAbs().mean();
    if (!(naive > 0.0))
        throw Error(ErrorCode::DegenerateDenominator, "evaluate", "seasonal-naive in-sample error is zero");
    return (forecast - actual).cwiseAbs().mean() / naive;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "evaluate", "median of nothing");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricSummary summarize(const std::vector<SeriesError>& errors) {
    if (errors.empty()) throw Error(ErrorCode::EmptyInput, "evaluate", "no per-series errors to summarize");
    std::vector<double> s, m;
    for (const auto& e : errors) {
        s.push_back(e.smape);
        m.push_back(e.mase);
    }
    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    return {mean(s), median(s), mean(m), median(m)};
}

namespace {

Vector rank_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const Index k = row.size();
    std::vector<Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return row[a] < row[b]; });
    Vector ranks(k);
    for (Index i = 0; i < k;) {
        Index j = i;
        while (j + 1 < k && row[idx[j + 1]] == row[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Index q = i; q <= j; ++q) ranks[idx[q]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

FriedmanResult friedman_test(const Eigen::Ref<const Matrix>& errors) {
    const Index n = errors.rows();
    const Index k = errors.cols();
    if (n < 2 || k < 2) throw Error(ErrorCode::DegenerateMatrix, "evaluate", "need at least 2 series and 2 methods");
    if (!errors.allFinite()) throw Error(ErrorCode::DegenerateMatrix, "evaluate", "error matrix has non-finite entries");

    Vector rank_sum = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) rank_sum += rank_row(errors.row(i));

    FriedmanResult r;
    r.average_ranks = rank_sum / static_cast<double>(n);
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    r.statistic = 12.0 * nd / (kd * (kd + 1.0)) *
                  (r.average_ranks.squaredNorm() - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
    if (std::abs(r.statistic) < 1e-12) r.statistic = 0.0;
    r.p_value = chi_square_sf(r.statistic, kd - 1.0);
    Index best = 0;
    for (Index j = 1; j < k; ++j)
        if (r.average_ranks[j] < r.average_ranks[best]) best = j;
    r.control = static_cast<std::size_t>(best);
    return r;
}

std::vector<double> hochberg_adjust(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        // r is the 0-based ascending position; the multiplier is m - r.
        const double candidate = static_cast<double>(m - r) * p_values[order[r]];
        running = (r == m - 1) ? std::min(1.0, p_values[order[r]]) : std::min(running, candidate);
        adjusted[order[r]] = std::min(1.0, running);
    }
    return adjusted;
}

std::map<std::string, double> hochberg_adjust(const std::map<std::string, double>& p_values) {
    std::vector<std::string> names;
    std::vector<double> raw;
    for (const auto& [name, p] : p_values) {
        names.push_back(name);
        raw.push_back(p);
    }
    const auto adj = hochberg_adjust(raw);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = adj[i];
    return out;
}

SignificanceReport significance(const Eigen::Ref<const Matrix>& errors, const std::vector<std::string>& methods) {
    if (static_cast<Index>(methods.size()) != errors.cols())
        throw Error(ErrorCode::DegenerateMatrix, "evaluate", "one method name per column is required");
    const auto fr = friedman_test(errors);
    SignificanceReport rep;
    rep.friedman_statistic = fr.statistic;
    rep.friedman_p = fr.p_value;
    rep.control_method = methods[fr.control];
    const double k = static_cast<double>(errors.cols());
    const double n = static_cast<double>(errors.rows());
    const double se = std::sqrt(k * (k + 1.0) / (6.0 * n));
    for (std::size_t j = 0; j < methods.size(); ++j) {
        rep.average_rank[methods[j]] = fr.average_ranks[static_cast<Index>(j)];
        if (j == fr.control) continue;
        const double z = (fr.average_ranks[static_cast<Index>(j)] - fr.average_ranks[static_cast<Index>(fr.control)]) / se;
        rep.raw_p[methods[j]] = std::erfc(std::abs(z) / std::sqrt(2.0));
    }
    rep.adjusted_p = hochberg_adjust(rep.raw_p);
    return rep;
}

double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        // Series for P(a, x).
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
    }
    // Lentz continued fraction for Q(a, x).
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(log_prefix) * h;
}

double chi_square_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return std::clamp(gamma_q(0.5 * dof, 0.5 * x), 0.0, 1.0);
}

}  // namespace msnet
