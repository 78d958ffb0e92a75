#include "msnet/core.hpp"

#include <cmath>

namespace msnet {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyCollection: return "EmptyCollection";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::NonAscendingPeriods: return "NonAscendingPeriods";
        case ErrorCode::ZeroMean: return "ZeroMean";
        case ErrorCode::NegativeValue: return "NegativeValue";
        case ErrorCode::SpanTooLarge: return "SpanTooLarge";
        case ErrorCode::BadDegree: return "BadDegree";
        case ErrorCode::SeriesTooShortForPeriod: return "SeriesTooShortForPeriod";
        case ErrorCode::KOutOfRange: return "KOutOfRange";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::MisalignedTrend: return "MisalignedTrend";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::NonContiguousIndex: return "NonContiguousIndex";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::MismatchedSeriesSets: return "MismatchedSeriesSets";
        case ErrorCode::MissingArtifacts: return "MissingArtifacts";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string module, const std::string& detail)
    : std::runtime_error("[" + module + "] " + to_string(code) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      module_(std::move(module)) {}

SeasonalPeriods::SeasonalPeriods(std::vector<int> periods) : periods_(std::move(periods)) {
    if (periods_.empty()) throw Error(ErrorCode::NonAscendingPeriods, "core", "no seasonal periods");
    for (std::size_t i = 0; i < periods_.size(); ++i) {
        if (periods_[i] < 2)
            throw Error(ErrorCode::NonAscendingPeriods, "core", "period " + std::to_string(periods_[i]) + " < 2");
        if (i > 0 && periods_[i] <= periods_[i - 1])
            throw Error(ErrorCode::NonAscendingPeriods, "core", "periods must be strictly ascending");
    }
}

Vector Decomposition::seasonal_sum() const {
    Vector sum = Vector::Zero(trend.size());
    for (const auto& s : seasonal) sum += s;
    return sum;
}

Vector Decomposition::reconstruct() const { return seasonal_sum() + trend + remainder; }

SeriesCollection validate_collection(const SeriesCollection& raw, int input_window) {
    if (raw.series.empty()) throw Error(ErrorCode::EmptyCollection, "core", "collection holds no series");
    // Re-run the period invariants in case the list was built by aggregate init.
    const auto& p = raw.periods.values();
    if (p.empty()) throw Error(ErrorCode::NonAscendingPeriods, "core", "no seasonal periods");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 2 || (i > 0 && p[i] <= p[i - 1]))
            throw Error(ErrorCode::NonAscendingPeriods, "core", "periods must be strictly ascending and >= 2");
    }
    if (raw.horizon < 1) throw Error(ErrorCode::InvalidSpec, "core", "horizon must be >= 1");

    for (const auto& s : raw.series) {
        for (Eigen::Index i = 0; i < s.values.size(); ++i) {
            if (!std::isfinite(s.values[i]))
                throw Error(ErrorCode::NonFiniteValue, "core", s.id + " at index " + std::to_string(i));
        }
        if (s.values.size() <= static_cast<Eigen::Index>(input_window) + raw.horizon)
            throw Error(ErrorCode::SeriesTooShort, "core",
                        s.id + " has " + std::to_string(s.values.size()) + " values, needs more than " +
                            std::to_string(input_window + raw.horizon));
    }
    return raw;
}

}  // namespace msnet
