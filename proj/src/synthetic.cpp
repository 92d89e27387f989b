#include "tscp/synthetic.hpp"

#include "tscp/rng.hpp"

#include <stdexcept>

namespace tscp {

void RegimeSeriesConfig::validate() const {
    if (total_steps < 1) {
        throw std::invalid_argument("regime series: total_steps must be >= 1");
    }
    if (!(x_low > 0.0 && x_high > 0.0)) {
        throw std::invalid_argument("regime series: x levels must be positive");
    }
    if (!(regime_len_min >= 1 && regime_len_max >= regime_len_min)) {
        throw std::invalid_argument("regime series: invalid regime length range");
    }
}

RegimeSeries generate_regime_series(const RegimeSeriesConfig& config) {
    config.validate();
    rng::Engine eng(config.seed);

    const std::int64_t t_total = config.total_steps;
    RegimeSeries out;
    out.data.features.resize(t_total, 1);
    out.data.targets.resize(t_total);
    out.data.timestamps.resize(static_cast<std::size_t>(t_total));
    out.regime.resize(static_cast<std::size_t>(t_total));

    const std::uint64_t len_span =
        static_cast<std::uint64_t>(config.regime_len_max - config.regime_len_min + 1);
    std::int64_t t = 0;
    int regime = 0;  // alternates, low regime first
    while (t < t_total) {
        const std::int64_t len =
            config.regime_len_min + static_cast<std::int64_t>(rng::below(eng, len_span));
        const double x = (regime == 0) ? config.x_low : config.x_high;
        for (std::int64_t i = 0; i < len && t < t_total; ++i, ++t) {
            const double noise = (regime == 0)
                                     ? rng::normal(eng, 0.0, x / 2.0)
                                     : rng::uniform(eng, -x, x);
            out.data.features(t, 0) = x;
            out.data.targets[t] = config.base_level + x + noise;
            out.data.timestamps[static_cast<std::size_t>(t)] = t;
            out.regime[static_cast<std::size_t>(t)] = regime;
        }
        regime = 1 - regime;
    }
    out.data.validate();
    return out;
}

}  // namespace tscp
