#pragma once

#include "tscp/types.hpp"

#include <cstdint>
#include <vector>

// Synthetic two-regime series with heteroscedastic noise.
//
// Regimes alternate, starting with the low regime.  Each regime lasts a
// number of steps drawn from the discrete uniform distribution on
// [len_min, len_max].  Within a regime the single feature is constant:
//   low regime:  x = x_low,  y = base + x + Normal(0, x/2)   (x/2 is the
//                standard deviation)
//   high regime: x = x_high, y = base + x + Uniform(-x, x)
// Generation is fully deterministic given `seed` (see tscp/rng.hpp).

namespace tscp {

struct RegimeSeriesConfig {
    std::int64_t total_steps = 1000;
    double x_low = 3.0;
    double x_high = 21.0;
    std::int64_t regime_len_min = 1;
    std::int64_t regime_len_max = 25;
    double base_level = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RegimeSeries {
    TimeSeriesDataset data;     // features = x (T x 1), predictions empty
    std::vector<int> regime;    // 0 = low regime, 1 = high regime
};

RegimeSeries generate_regime_series(const RegimeSeriesConfig& config);

}  // namespace tscp
