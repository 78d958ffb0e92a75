#include "msnet/windowing.hpp"

namespace msnet {

using Eigen::Index;

const char* to_string(Paradigm p) {
    switch (p) {
        case Paradigm::DS: return "DS";
        case Paradigm::SE: return "SE";
        case Paradigm::Baseline: return "Baseline";
    }
    return "?";
}

Paradigm paradigm_from_string(const std::string& s) {
    if (s == "DS" || s == "ds") return Paradigm::DS;
    if (s == "SE" || s == "se") return Paradigm::SE;
    if (s == "Baseline" || s == "baseline") return Paradigm::Baseline;
    throw Error(ErrorCode::InvalidSpec, "windowing", "unknown paradigm '" + s + "'");
}

Vector WindowRecord::features() const {
    Vector out(input.size() + exogenous.size());
    out << input, exogenous;
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> WindowedDataset::series_ranges() const {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= records.size(); ++i) {
        if (i == records.size() || records[i].series_id != records[begin].series_id) {
            ranges.emplace_back(begin, i);
            begin = i;
        }
    }
    return ranges;
}

Index WindowedDataset::feature_dim() const {
    if (records.empty()) return n;
    return records.front().input.size() + records.front().exogenous.size();
}

int input_window_length(int horizon) {
    if (horizon < 1) throw Error(ErrorCode::InvalidSpec, "windowing", "horizon must be >= 1");
    return (5 * horizon + 3) / 4;
}

std::pair<Vector, Vector> holdout_split(const Eigen::Ref<const Vector>& series, int m) {
    if (m < 0 || series.size() <= m)
        throw Error(ErrorCode::SeriesTooShort, "windowing",
                    "length " + std::to_string(series.size()) + " leaves no training data for m = " +
                        std::to_string(m));
    return {series.head(series.size() - m), series.tail(m)};
}

std::vector<Frame> moving_windows(const Eigen::Ref<const Vector>& train, int n, int m) {
    const Index k = train.size();
    if (n < 1 || m < 1 || k <= static_cast<Index>(n) + m)
        throw Error(ErrorCode::SeriesTooShort, "windowing",
                    "length " + std::to_string(k) + " must exceed n + m = " + std::to_string(n + m));
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(k - n - m));
    for (Index j = 0; j < k - n - m; ++j) frames.push_back({j, train.segment(j, n), train.segment(j + n, m)});
    return frames;
}

std::vector<Frame> input_windows(const Eigen::Ref<const Vector>& series, int n) {
    const Index k = series.size();
    if (n < 1 || k < n)
        throw Error(ErrorCode::SeriesTooShort, "windowing", "series shorter than the input window");
    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(k - n + 1));
    for (Index j = 0; j + n <= k; ++j) frames.push_back({j, series.segment(j, n), Vector{}});
    return frames;
}

WindowRecord local_normalize_ds(const Frame& frame, const Eigen::Ref<const Vector>& trend) {
    const Index last = frame.last_input_index();
    if (last < 0 || last >= trend.size())
        throw Error(ErrorCode::MisalignedTrend, "windowing",
                    "trend of length " + std::to_string(trend.size()) + " has no index " + std::to_string(last));
    const double factor = trend[last];
    return {"", frame.input.array() - factor, Vector{}, frame.target.array() - factor, factor};
}

WindowRecord local_normalize_se(const Frame& frame, const Eigen::Ref<const Vector>& exogenous) {
    const double factor = frame.input.mean();
    return {"", frame.input.array() - factor, exogenous, frame.target.array() - factor, factor};
}

Frame denormalize(const WindowRecord& record, Index start) {
    return {start, record.input.array() + record.local_factor, record.target.array() + record.local_factor};
}

}  // namespace msnet
