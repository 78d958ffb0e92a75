#pragma once

#include <map>
#include <string>
#include <vector>

#include "msnet/core.hpp"

namespace msnet {

inline constexpr double kSignificanceLevel = 0.05;

struct MetricSummary {
    double mean_smape = 0.0;
    double median_smape = 0.0;
    double mean_mase = 0.0;
    double median_mase = 0.0;
};

struct SeriesError {
    std::string series_id;
    double smape = 0.0;
    double mase = 0.0;
};

/// (2/m) Σ |F - Y| / (|F| + |Y| + ε). A 0/0 term counts as 0.
double smape(const Eigen::Ref<const Vector>& forecast, const Eigen::Ref<const Vector>& actual, double epsilon = 0.0);

/// Mean absolute test error scaled by the in-sample seasonal-naive error at lag `season`.
double mase(const Eigen::Ref<const Vector>& forecast, const Eigen::Ref<const Vector>& actual,
            const Eigen::Ref<const Vector>& train, int season);

double median(std::vector<double> values);

MetricSummary summarize(const std::vector<SeriesError>& errors);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    Vector average_ranks;
    std::size_t control = 0;  // method with the lowest average rank
};

/// Rows are series, columns are methods; lower error ranks first, ties share the average rank.
FriedmanResult friedman_test(const Eigen::Ref<const Matrix>& errors);

/// Hochberg step-up adjustment of the raw p-values (order preserved).
std::vector<double> hochberg_adjust(const std::vector<double>& p_values);
std::map<std::string, double> hochberg_adjust(const std::map<std::string, double>& p_values);

struct SignificanceReport {
    double friedman_statistic = 0.0;
    double friedman_p = 1.0;
    std::string control_method;
    std::map<std::string, double> average_rank;
    std::map<std::string, double> raw_p;
    std::map<std::string, double> adjusted_p;
};

/// Friedman test plus Hochberg post-hoc comparisons of every method against the control.
SignificanceReport significance(const Eigen::Ref<const Matrix>& errors, const std::vector<std::string>& methods);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

}  // namespace msnet
