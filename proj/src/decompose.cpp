#include "msnet/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

namespace msnet {

using Eigen::Index;

namespace detail {

int next_odd(double x) {
    auto v = static_cast<int>(std::ceil(x));
    return v % 2 == 0 ? v + 1 : v;
}

std::optional<double> loess_estimate(const Eigen::Ref<const Vector>& y, int span, int degree, double xs, Index left,
                                     Index right, const Vector* robustness) {
    const Index n = y.size();
    const double range = static_cast<double>(n) - 1.0;
    double h = std::max(xs - static_cast<double>(left), static_cast<double>(right) - xs);
    if (span > n) h += static_cast<double>((span - n) / 2);
    const double h9 = 0.999 * h;
    const double h1 = 0.001 * h;

    Vector w = Vector::Zero(right - left + 1);
    double total = 0.0;
    for (Index j = left; j <= right; ++j) {
        const double r = std::abs(static_cast<double>(j) - xs);
        if (r > h9) continue;
        double wj = 1.0;
        if (r > h1) {
            const double q = r / h;
            const double c = 1.0 - q * q * q;
            wj = c * c * c;
        }
        if (robustness) wj *= (*robustness)[j];
        w[j - left] = wj;
        total += wj;
    }
    if (total <= 0.0) return std::nullopt;
    w /= total;

    const auto seg = y.segment(left, right - left + 1);
    if (h <= 0.0 || degree == 0) return w.dot(seg);

    const Vector pos = Vector::LinSpaced(right - left + 1, static_cast<double>(left), static_cast<double>(right));
    const double centre = w.dot(pos);
    const Vector dev = pos.array() - centre;
    const double spread = w.dot(dev.cwiseAbs2());
    if (std::sqrt(spread) <= 0.001 * range) return w.dot(seg);

    if (degree == 2) {
        // Weighted quadratic in u = (j - xs) / h, evaluated at u = 0.
        const Vector u = (pos.array() - xs) / h;
        Eigen::Matrix<double, Eigen::Dynamic, 3> basis(u.size(), 3);
        basis.col(0).setOnes();
        basis.col(1) = u;
        basis.col(2) = u.cwiseAbs2();
        const Eigen::Matrix3d gram = basis.transpose() * w.asDiagonal() * basis;
        const Eigen::Vector3d rhs = basis.transpose() * w.cwiseProduct(seg);
        Eigen::FullPivLU<Eigen::Matrix3d> lu(gram);
        lu.setThreshold(1e-10);
        if (lu.rank() == 3) return lu.solve(rhs)[0];
        // Too few distinct points for a quadratic: drop to the linear fit.
    }
    const double slope = (xs - centre) / spread;
    return (w.array() * (1.0 + slope * dev.array())).matrix().dot(seg);
}

Vector loess_fit(const Eigen::Ref<const Vector>& y, int span, int degree, const Vector* robustness) {
    const Index n = y.size();
    Vector out(n);
    if (n < 2) {
        out = y;
        return out;
    }
    Index left = 0;
    Index right = std::min<Index>(span, n) - 1;
    const Index half = (span + 1) / 2;
    for (Index i = 0; i < n; ++i) {
        if (span < n && i + 1 > half && right != n - 1) {
            ++left;
            ++right;
        }
        const auto est = loess_estimate(y, span, degree, static_cast<double>(i), left, right, robustness);
        out[i] = est ? *est : y[i];
    }
    return out;
}

Vector moving_average(const Eigen::Ref<const Vector>& x, int len) {
    const Index out_len = x.size() - len + 1;
    Vector out(out_len);
    double sum = x.head(len).sum();
    out[0] = sum / len;
    for (Index i = 1; i < out_len; ++i) {
        sum += x[i + len - 1] - x[i - 1];
        out[i] = sum / len;
    }
    return out;
}

Vector robustness_weights(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& fit) {
    const Vector r = (y - fit).cwiseAbs();
    std::vector<double> sorted(r.data(), r.data() + r.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::size_t m0 = n / 2;
    const std::size_t m1 = n - n / 2 - 1;
    const double cmad = 3.0 * (sorted[m0] + sorted[m1]);
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    Vector w(r.size());
    for (Index i = 0; i < r.size(); ++i) {
        if (r[i] <= c1) {
            w[i] = 1.0;
        } else if (r[i] <= c9) {
            const double q = r[i] / cmad;
            w[i] = (1.0 - q * q) * (1.0 - q * q);
        } else {
            w[i] = 0.0;
        }
    }
    return w;
}

}  // namespace detail

Vector loess_smooth(const Eigen::Ref<const Vector>& y, int span, int degree, const std::optional<Vector>& weights) {
    if (degree < 0 || degree > 2) throw Error(ErrorCode::BadDegree, "decompose", "degree " + std::to_string(degree));
    if (span < 1 || span % 2 == 0)
        throw Error(ErrorCode::SpanTooLarge, "decompose", "span must be a positive odd integer");
    if (span > y.size())
        throw Error(ErrorCode::SpanTooLarge, "decompose",
                    "span " + std::to_string(span) + " exceeds length " + std::to_string(y.size()));
    if (weights && weights->size() != y.size())
        throw Error(ErrorCode::ShapeMismatch, "decompose", "weights length differs from series length");
    return detail::loess_fit(y, span, degree, weights ? &*weights : nullptr);
}

namespace {

struct StlSpans {
    int period;
    int seasonal;
    int seasonal_degree;
    int trend;
    int lowpass;
};

// Cycle-subseries smoothing: returns period-extended seasonal of length n + 2·period.
Vector smooth_cycle_subseries(const Vector& y, const StlSpans& sp, const Vector* rw) {
    const Index n = y.size();
    const int np = sp.period;
    Vector out(n + 2 * np);
    for (int j = 0; j < np; ++j) {
        const Index k = (n - 1 - j) / np + 1;
        Vector sub(k);
        Vector subw;
        for (Index i = 0; i < k; ++i) sub[i] = y[i * np + j];
        if (rw) {
            subw.resize(k);
            for (Index i = 0; i < k; ++i) subw[i] = (*rw)[i * np + j];
        }
        const Vector* wptr = rw ? &subw : nullptr;
        const Vector fit = detail::loess_fit(sub, sp.seasonal, sp.seasonal_degree, wptr);

        const Index right_end = std::min<Index>(sp.seasonal, k) - 1;
        const auto before = detail::loess_estimate(sub, sp.seasonal, sp.seasonal_degree, -1.0, 0, right_end, wptr);
        const Index left_start = std::max<Index>(0, k - sp.seasonal);
        const auto after = detail::loess_estimate(sub, sp.seasonal, sp.seasonal_degree, static_cast<double>(k),
                                                  left_start, k - 1, wptr);
        out[j] = before ? *before : fit[0];
        for (Index i = 0; i < k; ++i) out[(i + 1) * np + j] = fit[i];
        out[(k + 1) * np + j] = after ? *after : fit[k - 1];
    }
    return out;
}

void stl_inner(const Vector& y, const StlSpans& sp, int inner, const Vector* rw, Vector& season, Vector& trend) {
    const Index n = y.size();
    const int np = sp.period;
    for (int it = 0; it < inner; ++it) {
        const Vector detrended = y - trend;
        const Vector cycle = smooth_cycle_subseries(detrended, sp, rw);
        Vector low = detail::moving_average(cycle, np);
        low = detail::moving_average(low, np);
        low = detail::moving_average(low, 3);
        low = detail::loess_fit(low, sp.lowpass, 1, nullptr);
        season = cycle.segment(np, n) - low;
        const Vector deseason = y - season;
        trend = detail::loess_fit(deseason, sp.trend, 1, rw);
    }
}

}  // namespace

Decomposition stl_decompose(const Eigen::Ref<const Vector>& series, int period, const MstlConfig& config) {
    const Index n = series.size();
    if (period < 2) throw Error(ErrorCode::NonAscendingPeriods, "decompose", "period must be >= 2");
    if (n < 2 * static_cast<Index>(period))
        throw Error(ErrorCode::SeriesTooShortForPeriod, "decompose",
                    "length " + std::to_string(n) + " < 2 x period " + std::to_string(period));
    if (!config.periodic && (config.seasonal_span < 7 || config.seasonal_span % 2 == 0))
        throw Error(ErrorCode::InvalidSpec, "decompose", "seasonal span must be odd and >= 7");
    if (config.inner_iterations < 1 || config.outer_iterations < 0)
        throw Error(ErrorCode::InvalidSpec, "decompose", "iteration counts out of range");

    StlSpans sp;
    sp.period = period;
    sp.seasonal = config.periodic ? static_cast<int>(10 * n + 1) : config.seasonal_span;
    sp.seasonal_degree = 0;
    sp.trend = std::max(3, detail::next_odd(1.5 * period / (1.0 - 1.5 / sp.seasonal)));
    sp.lowpass = std::max(3, detail::next_odd(period));

    const Vector y = series;
    Vector season = Vector::Zero(n);
    Vector trend = Vector::Zero(n);
    Vector rw;
    for (int pass = 0;; ++pass) {
        stl_inner(y, sp, config.inner_iterations, pass == 0 ? nullptr : &rw, season, trend);
        if (pass >= config.outer_iterations) break;
        rw = detail::robustness_weights(y, season + trend);
    }

    if (config.periodic) {
        // Replace the seasonal by its cycle-position means so every cycle is identical.
        Vector means = Vector::Zero(period);
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(period);
        for (Index t = 0; t < n; ++t) {
            means[t % period] += season[t];
            ++counts[t % period];
        }
        for (int j = 0; j < period; ++j) means[j] /= counts[j];
        for (Index t = 0; t < n; ++t) season[t] = means[t % period];
    }

    Decomposition d;
    d.remainder = y - season - trend;
    d.seasonal.push_back(std::move(season));
    d.trend = std::move(trend);
    return d;
}

Decomposition mstl_decompose(const Eigen::Ref<const Vector>& series, const SeasonalPeriods& periods,
                             const MstlConfig& config) {
    const auto& ps = periods.values();
    if (ps.empty()) throw Error(ErrorCode::NonAscendingPeriods, "decompose", "no seasonal periods");
    if (series.size() < 2 * static_cast<Index>(ps.back()))
        throw Error(ErrorCode::SeriesTooShortForPeriod, "decompose",
                    "length " + std::to_string(series.size()) + " < 2 x longest period " +
                        std::to_string(ps.back()));

    const Index n = series.size();
    const Vector x = series;
    std::vector<Vector> seasonal(ps.size(), Vector::Zero(n));
    Vector trend = Vector::Zero(n);
    constexpr int kSweeps = 2;
    for (int sweep = 0; sweep < kSweeps; ++sweep) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            Vector others = Vector::Zero(n);
            for (std::size_t j = 0; j < ps.size(); ++j)
                if (j != i) others += seasonal[j];
            auto fit = stl_decompose(x - others, ps[i], config);
            seasonal[i] = std::move(fit.seasonal.front());
            trend = std::move(fit.trend);
        }
    }

    Decomposition d;
    d.seasonal = std::move(seasonal);
    d.trend = std::move(trend);
    d.remainder = x - d.seasonal_sum() - d.trend;
    return d;
}

int FourierConfig::dimension() const { return 2 * std::accumulate(k_per_period.begin(), k_per_period.end(), 0); }

void check_fourier_config(const SeasonalPeriods& periods, const FourierConfig& config) {
    if (config.k_per_period.size() != periods.size())
        throw Error(ErrorCode::KOutOfRange, "decompose", "one k per seasonal period is required");
    for (std::size_t j = 0; j < periods.size(); ++j) {
        const int k = config.k_per_period[j];
        if (k < 1 || k > periods[j] / 2)
            throw Error(ErrorCode::KOutOfRange, "decompose",
                        "k = " + std::to_string(k) + " for period " + std::to_string(periods[j]));
    }
}

Vector fourier_terms(long long t, const SeasonalPeriods& periods, const FourierConfig& config) {
    check_fourier_config(periods, config);
    Vector out(config.dimension());
    Index pos = 0;
    for (std::size_t j = 0; j < periods.size(); ++j) {
        const long long s = periods[j];
        for (int k = 1; k <= config.k_per_period[j]; ++k) {
            // Reduce the phase before scaling so the terms are exactly periodic in t.
            long long phase = (static_cast<long long>(k) * (t % s)) % s;
            if (phase < 0) phase += s;
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(s);
            out[pos++] = std::sin(angle);
            out[pos++] = std::cos(angle);
        }
    }
    return out;
}

Vector seasonal_snapshot(const Decomposition& decomp, Index t) {
    if (t < 0 || t >= decomp.trend.size())
        throw Error(ErrorCode::IndexOutOfRange, "decompose",
                    "index " + std::to_string(t) + " outside [0, " + std::to_string(decomp.trend.size()) + ")");
    Vector out(static_cast<Index>(decomp.seasonal.size()));
    for (std::size_t j = 0; j < decomp.seasonal.size(); ++j) out[static_cast<Index>(j)] = decomp.seasonal[j][t];
    return out;
}

}  // namespace msnet
