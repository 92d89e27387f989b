#include "tscp/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace tscp;

TEST_SUITE("synthetic") {

TEST_CASE("generation is deterministic in the seed") {
    RegimeSeriesConfig cfg;
    cfg.total_steps = 500;
    cfg.seed = 42;
    const RegimeSeries a = generate_regime_series(cfg);
    const RegimeSeries b = generate_regime_series(cfg);
    CHECK(a.data.targets == b.data.targets);
    CHECK(a.data.features == b.data.features);
    CHECK(a.regime == b.regime);

    cfg.seed = 43;
    const RegimeSeries c = generate_regime_series(cfg);
    CHECK(a.data.targets != c.data.targets);
}

TEST_CASE("regime runs alternate, start low, and respect the length bounds") {
    RegimeSeriesConfig cfg;
    cfg.total_steps = 5000;
    cfg.seed = 7;
    const RegimeSeries s = generate_regime_series(cfg);
    REQUIRE(s.regime.size() == 5000);
    CHECK(s.regime.front() == 0);

    std::vector<Eigen::Index> run_lengths;
    Eigen::Index run = 1;
    for (std::size_t i = 1; i < s.regime.size(); ++i) {
        REQUIRE((s.regime[i] == 0 || s.regime[i] == 1));
        if (s.regime[i] == s.regime[i - 1]) {
            ++run;
        } else {
            run_lengths.push_back(run);
            run = 1;
        }
    }
    // every completed run respects the configured bounds; the last run may be
    // truncated by the series end so it is not checked
    for (Eigen::Index len : run_lengths) {
        CHECK(len >= cfg.regime_len_min);
        CHECK(len <= cfg.regime_len_max);
    }
    REQUIRE(run_lengths.size() > 100);

    // feature encodes the regime; timestamps are 0-based consecutive steps
    for (std::size_t i = 0; i < s.regime.size(); ++i) {
        const double expected_x = s.regime[i] == 0 ? cfg.x_low : cfg.x_high;
        CHECK(s.data.features(static_cast<Eigen::Index>(i), 0) == expected_x);
        CHECK(s.data.timestamps[i] == static_cast<std::int64_t>(i));
    }
}

TEST_CASE("noise moments match the generating distributions") {
    RegimeSeriesConfig cfg;
    cfg.total_steps = 100000;
    cfg.seed = 11;
    const RegimeSeries s = generate_regime_series(cfg);

    std::vector<double> low_noise, high_noise;
    for (Eigen::Index i = 0; i < s.data.size(); ++i) {
        const double x = s.data.features(i, 0);
        const double noise = s.data.targets[i] - (cfg.base_level + x);
        if (s.regime[static_cast<std::size_t>(i)] == 0) {
            low_noise.push_back(noise);
        } else {
            high_noise.push_back(noise);
        }
    }
    REQUIRE(low_noise.size() > 20000);
    REQUIRE(high_noise.size() > 20000);

    auto mean_sd = [](const std::vector<double>& xs) {
        double m = 0.0;
        for (double x : xs) m += x;
        m /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - m) * (x - m);
        return std::pair<double, double>{
            m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
    };

    // low regime: Normal(0, x_low/2) -> sd = 1.5
    const auto [lm, lsd] = mean_sd(low_noise);
    CHECK(std::abs(lm) <= 0.05);
    CHECK(lsd == doctest::Approx(cfg.x_low / 2.0).epsilon(0.03));

    // high regime: Uniform(-x_high, x_high) -> sd = x_high/sqrt(3), bounded
    const auto [hm, hsd] = mean_sd(high_noise);
    CHECK(std::abs(hm) <= 0.3);
    CHECK(hsd == doctest::Approx(cfg.x_high / std::sqrt(3.0)).epsilon(0.03));
    for (double n : high_noise) {
        CHECK(std::abs(n) <= cfg.x_high);
    }

    // the high regime error scale dwarfs the low one (that contrast is the
    // point of the generator)
    CHECK(hsd / lsd > 5.0);
}

TEST_CASE("config validation") {
    RegimeSeriesConfig cfg;
    cfg.total_steps = 0;
    CHECK_THROWS_AS(generate_regime_series(cfg), std::invalid_argument);

    cfg = RegimeSeriesConfig{};
    cfg.regime_len_min = 10;
    cfg.regime_len_max = 5;
    CHECK_THROWS_AS(generate_regime_series(cfg), std::invalid_argument);

    cfg = RegimeSeriesConfig{};
    cfg.regime_len_min = 0;
    CHECK_THROWS_AS(generate_regime_series(cfg), std::invalid_argument);

    cfg = RegimeSeriesConfig{};
    cfg.x_low = -1.0;
    CHECK_THROWS_AS(generate_regime_series(cfg), std::invalid_argument);
}

}  // TEST_SUITE
