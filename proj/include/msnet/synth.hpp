#pragma once

#include <cstdint>
#include <vector>

#include "msnet/core.hpp"

namespace msnet {

/// Homogeneous collection of sines plus trend plus Gaussian noise. Every
/// series shares the seasonal phases; level, amplitudes, slope and noise
/// scale with a per-series level so the shapes match after mean scaling.
struct SynthConfig {
    int series = 10;
    int length = 1224;
    std::vector<int> periods{24, 168};
    std::vector<double> amplitudes{0.3, 0.15};  // relative to the level
    double level_min = 5.0;
    double level_max = 15.0;
    double slope = 1e-4;   // relative trend per step
    double noise = 0.03;   // relative noise standard deviation
    std::uint64_t seed = 1;
};

std::vector<TimeSeries> synthesize(const SynthConfig& config);

}  // namespace msnet
