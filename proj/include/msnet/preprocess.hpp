#pragma once

#include "msnet/core.hpp"

namespace msnet {

/// Factors needed to undo mean scaling and log stabilisation of one series.
struct PreprocessRecord {
    double scale = 1.0;
    bool shifted = false;
};

struct ScaledSeries {
    Vector values;
    double scale;
};

struct StabilizedSeries {
    Vector values;
    bool shifted;
};

/// Divides by the series mean. Throws ZeroMean when the mean is not positive.
ScaledSeries mean_scale(const Eigen::Ref<const Vector>& series);

/// ln(x) when min(x) > 0, ln(x + 1) when min(x) == 0.
StabilizedSeries log_stabilize(const Eigen::Ref<const Vector>& series);

/// Both forward steps, returning the transformed series and the record to invert it.
std::pair<Vector, PreprocessRecord> preprocess(const Eigen::Ref<const Vector>& series);

Vector invert_preprocess(const Eigen::Ref<const Vector>& series, const PreprocessRecord& record);

}  // namespace msnet
