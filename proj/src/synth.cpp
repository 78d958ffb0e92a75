#include "msnet/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace msnet {

std::vector<TimeSeries> synthesize(const SynthConfig& c) {
    if (c.series < 1 || c.length < 1 || c.periods.empty() || c.amplitudes.size() != c.periods.size())
        throw Error(ErrorCode::InvalidConfig, "cli", "synthetic generator needs one amplitude per period");
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> level_dist(c.level_min, c.level_max);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<TimeSeries> out;
    for (int i = 0; i < c.series; ++i) {
        const double level = level_dist(rng);
        TimeSeries ts{"S" + std::to_string(i + 1), Vector(c.length)};
        for (int t = 0; t < c.length; ++t) {
            double v = 1.0 + c.slope * t;
            for (std::size_t j = 0; j < c.periods.size(); ++j)
                v += c.amplitudes[j] * std::sin(2.0 * std::numbers::pi * t / c.periods[j]);
            v += c.noise * gauss(rng);
            ts.values[t] = std::max(0.0, level * v);
        }
        out.push_back(std::move(ts));
    }
    return out;
}

}  // namespace msnet
