#pragma once

#include <optional>

#include "msnet/core.hpp"

namespace msnet {

/// STL/MSTL settings. `periodic` mirrors s.window = "periodic"; otherwise
/// `seasonal_span` is the odd seasonal loess span (>= 7).
struct MstlConfig {
    bool periodic = true;
    int seasonal_span = 7;
    int inner_iterations = 2;
    int outer_iterations = 1;

    static MstlConfig periodic_window() { return {}; }
    static MstlConfig span_window(int span) { return {false, span, 2, 1}; }
};

/// Number of sin/cos pairs per seasonal period.
struct FourierConfig {
    std::vector<int> k_per_period;

    static FourierConfig ones(std::size_t periods) { return {std::vector<int>(periods, 1)}; }
    int dimension() const;
};

/// Locally weighted polynomial smoother with tricube neighbourhood weights.
/// `span` must be odd and no larger than the series; `degree` is 0, 1 or 2.
Vector loess_smooth(const Eigen::Ref<const Vector>& y, int span, int degree,
                    const std::optional<Vector>& weights = std::nullopt);

Decomposition stl_decompose(const Eigen::Ref<const Vector>& series, int period, const MstlConfig& config = {});

Decomposition mstl_decompose(const Eigen::Ref<const Vector>& series, const SeasonalPeriods& periods,
                             const MstlConfig& config = {});

/// [sin(2πkt/s), cos(2πkt/s)] for every period s and k = 1..k_s, period-major.
Vector fourier_terms(long long t, const SeasonalPeriods& periods, const FourierConfig& config);

void check_fourier_config(const SeasonalPeriods& periods, const FourierConfig& config);

/// Seasonal component values [S¹_t, ..., Sᴾ_t].
Vector seasonal_snapshot(const Decomposition& decomp, Eigen::Index t);

namespace detail {

/// Loess estimate at position xs from points [left, right]. Spans larger
/// than the series widen the bandwidth the way netlib STL does.
std::optional<double> loess_estimate(const Eigen::Ref<const Vector>& y, int span, int degree, double xs,
                                     Eigen::Index left, Eigen::Index right, const Vector* robustness);

/// Loess at every index, falling back to the raw value where no weight exists.
Vector loess_fit(const Eigen::Ref<const Vector>& y, int span, int degree, const Vector* robustness);

/// Trailing moving average; output length = size - len + 1.
Vector moving_average(const Eigen::Ref<const Vector>& x, int len);

Vector robustness_weights(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& fit);

int next_odd(double x);

}  // namespace detail

}  // namespace msnet
