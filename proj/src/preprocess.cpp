#include "msnet/preprocess.hpp"

namespace msnet {

ScaledSeries mean_scale(const Eigen::Ref<const Vector>& series) {
    if (series.size() == 0) throw Error(ErrorCode::ZeroMean, "preprocess", "empty series");
    const double mean = series.mean();
    if (!(mean > 0.0)) throw Error(ErrorCode::ZeroMean, "preprocess", "series mean is " + std::to_string(mean));
    return {series / mean, mean};
}

StabilizedSeries log_stabilize(const Eigen::Ref<const Vector>& series) {
    if (series.size() == 0) return {Vector{}, false};
    const double lo = series.minCoeff();
    if (lo < 0.0) throw Error(ErrorCode::NegativeValue, "preprocess", "minimum value " + std::to_string(lo));
    if (lo == 0.0) return {series.array().log1p().matrix(), true};
    return {series.array().log().matrix(), false};
}

std::pair<Vector, PreprocessRecord> preprocess(const Eigen::Ref<const Vector>& series) {
    auto scaled = mean_scale(series);
    auto stable = log_stabilize(scaled.values);
    return {std::move(stable.values), PreprocessRecord{scaled.scale, stable.shifted}};
}

Vector invert_preprocess(const Eigen::Ref<const Vector>& series, const PreprocessRecord& record) {
    // expm1 keeps the shifted branch exact near zero.
    Vector out = record.shifted ? Vector(series.array().expm1()) : Vector(series.array().exp());
    return out * record.scale;
}

}  // namespace msnet
