#pragma once

#include <string>
#include <utility>
#include <vector>

#include "msnet/core.hpp"

namespace msnet {

enum class Paradigm { DS, SE, Baseline };

const char* to_string(Paradigm p);
Paradigm paradigm_from_string(const std::string& s);

/// One moving-window cut: values[start, start+n) as input, the next m as target.
struct Frame {
    Eigen::Index start = 0;
    Vector input;
    Vector target;

    Eigen::Index last_input_index() const { return start + input.size() - 1; }
};

struct WindowRecord {
    std::string series_id;
    Vector input;
    Vector exogenous;  // empty unless built for SE
    Vector target;
    double local_factor = 0.0;

    /// Network input: the window followed by the exogenous features.
    Vector features() const;
};

struct WindowedDataset {
    std::vector<WindowRecord> records;
    int n = 0;
    int m = 0;
    Paradigm paradigm = Paradigm::Baseline;

    /// [begin, end) index ranges of consecutive records sharing a series id.
    std::vector<std::pair<std::size_t, std::size_t>> series_ranges() const;
    Eigen::Index feature_dim() const;
};

/// ceil(1.25 * M).
int input_window_length(int horizon);

std::pair<Vector, Vector> holdout_split(const Eigen::Ref<const Vector>& series, int m);

/// Exactly K - n - m stride-1 frames.
std::vector<Frame> moving_windows(const Eigen::Ref<const Vector>& train, int n, int m);

/// Every stride-1 input window of length n (K - n + 1 of them), targets left empty.
std::vector<Frame> input_windows(const Eigen::Ref<const Vector>& series, int n);

/// Subtracts the trend at the frame's last input index.
WindowRecord local_normalize_ds(const Frame& frame, const Eigen::Ref<const Vector>& trend);

/// Subtracts the input-window mean and attaches the exogenous vector unchanged.
WindowRecord local_normalize_se(const Frame& frame, const Eigen::Ref<const Vector>& exogenous);

/// Adds the local factor back to input and target.
Frame denormalize(const WindowRecord& record, Eigen::Index start);

}  // namespace msnet
