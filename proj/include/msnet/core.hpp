#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace msnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
    EmptyCollection,
    NonFiniteValue,
    SeriesTooShort,
    NonAscendingPeriods,
    ZeroMean,
    NegativeValue,
    SpanTooLarge,
    BadDegree,
    SeriesTooShortForPeriod,
    KOutOfRange,
    IndexOutOfRange,
    MisalignedTrend,
    ShapeMismatch,
    NonFiniteGradient,
    NonFiniteLoss,
    EmptyDataset,
    InvalidSpec,
    LengthMismatch,
    DegenerateDenominator,
    EmptyInput,
    DegenerateMatrix,
    ParseError,
    NonContiguousIndex,
    EmptyFile,
    MismatchedSeriesSets,
    MissingArtifacts,
    InvalidConfig,
    IoError,
};

const char* to_string(ErrorCode code);

/// Every failure in the library is reported as an Error carrying a code and
/// the module that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string module, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorCode code_;
    std::string module_;
};

struct TimeSeries {
    std::string id;
    Vector values;

    Eigen::Index length() const { return values.size(); }
};

/// Strictly ascending seasonal periods, each >= 2.
class SeasonalPeriods {
public:
    SeasonalPeriods() = default;
    explicit SeasonalPeriods(std::vector<int> periods);

    const std::vector<int>& values() const noexcept { return periods_; }
    std::size_t size() const noexcept { return periods_.size(); }
    int operator[](std::size_t i) const { return periods_[i]; }
    int longest() const { return periods_.back(); }

    bool operator==(const SeasonalPeriods&) const = default;

private:
    std::vector<int> periods_;
};

struct SeriesCollection {
    std::vector<TimeSeries> series;
    SeasonalPeriods periods;
    int horizon = 1;
};

/// Additive split x = sum(seasonal) + trend + remainder.
struct Decomposition {
    std::vector<Vector> seasonal;
    Vector trend;
    Vector remainder;

    Vector reconstruct() const;
    Vector seasonal_sum() const;
};

SeriesCollection validate_collection(const SeriesCollection& raw, int input_window);

}  // namespace msnet
