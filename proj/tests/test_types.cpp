#include "tscp/types.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace tscp;

namespace {

TimeSeriesDataset small_series(Eigen::Index n) {
    TimeSeriesDataset d;
    d.features = Eigen::MatrixXd::Zero(n, 1);
    d.targets = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        d.features(i, 0) = 0.5 * static_cast<double>(i);
        d.timestamps.push_back(i);
    }
    return d;
}

}  // namespace

TEST_SUITE("types") {

TEST_CASE("dataset validates and attaches predictions") {
    TimeSeriesDataset d = small_series(5);
    CHECK_NOTHROW(d.validate());
    CHECK_FALSE(d.has_predictions());

    const Eigen::VectorXd preds = Eigen::VectorXd::Constant(5, 1.25);
    const TimeSeriesDataset with = d.with_predictions(preds);
    CHECK(with.has_predictions());
    CHECK_NOTHROW(with.validate());
    for (Eigen::Index i = 0; i < 5; ++i) {
        // bit-for-bit, not approximate: errors must be targets - predictions
        CHECK(with.errors[i] == with.targets[i] - with.predictions[i]);
    }
}

TEST_CASE("dataset rejects broken invariants") {
    TimeSeriesDataset d = small_series(4);

    SUBCASE("length mismatch") {
        d.targets = Eigen::VectorXd::Zero(3);
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("non-increasing timestamps") {
        d.timestamps[2] = d.timestamps[1];
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("predictions without errors") {
        d.predictions = Eigen::VectorXd::Zero(4);
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
    SUBCASE("stale errors") {
        d = d.with_predictions(Eigen::VectorXd::Zero(4));
        d.errors[1] += 1.0;
        CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    }
}

TEST_CASE("split fractions round to nearest index") {
    const SplitSpec s = split_from_fractions(1000, 1.0 / 3, 1.0 / 3, 1.0 / 3);
    CHECK(s.train_end == 333);
    CHECK(s.calib_end == 667);
    CHECK(s.test_end == 1000);
    CHECK(s.n_train() == 333);
    CHECK(s.n_calib() == 334);
    CHECK(s.n_test() == 333);

    CHECK_THROWS_AS(split_from_fractions(100, 0.5, 0.4, 0.2),
                    std::invalid_argument);
    CHECK_THROWS_AS(split_from_fractions(100, 0.5, -0.1, 0.1),
                    std::invalid_argument);
    // degenerate segments must be rejected
    CHECK_THROWS_AS(split_from_fractions(4, 0.01, 0.5, 0.49),
                    std::invalid_argument);
}

TEST_CASE("interval bounds are closed and full line is uninformative") {
    PredictionInterval pi{-1.0, 2.0, 0.1, false};
    CHECK(pi.width() == 3.0);
    CHECK(pi.covers(-1.0));
    CHECK(pi.covers(2.0));
    CHECK(pi.covers(0.0));
    CHECK_FALSE(pi.covers(2.0000001));
    CHECK_FALSE(pi.covers(-1.0000001));

    const PredictionInterval full = full_line_interval(0.05);
    CHECK(full.uninformative);
    CHECK(std::isinf(full.lower));
    CHECK(std::isinf(full.upper));
    CHECK(full.covers(1e300));
    CHECK(full.covers(-1e300));
}

TEST_CASE("weight vectors must be normalized and nonnegative") {
    WeightVector good{{0.25, 0.25, 0.5}};
    CHECK_NOTHROW(good.validate());

    WeightVector off{{0.25, 0.25, 0.25}};
    CHECK_THROWS_AS(off.validate(), std::invalid_argument);

    WeightVector neg{{1.5, -0.5}};
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("normalize_weights scales mass to one") {
    const std::vector<double> raw = {2.0, 6.0, 0.0};
    const WeightVector w = normalize_weights(raw);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(w[2] == 0.0);
    CHECK_NOTHROW(w.validate());

    const std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(normalize_weights(zero), std::invalid_argument);
    const std::vector<double> neg = {1.0, -1e-12};
    CHECK_THROWS_AS(normalize_weights(neg), std::invalid_argument);
    const std::vector<double> inf = {1.0, std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(normalize_weights(inf), std::invalid_argument);
}

TEST_CASE("compute_errors subtracts predictions") {
    Eigen::VectorXd y(3), p(3);
    y << 1.0, 2.0, 3.0;
    p << 0.5, 2.5, 3.0;
    const Eigen::VectorXd e = compute_errors(y, p);
    CHECK(e[0] == 0.5);
    CHECK(e[1] == -0.5);
    CHECK(e[2] == 0.0);
    CHECK_THROWS_AS(compute_errors(y, Eigen::VectorXd::Zero(2)),
                    std::invalid_argument);
}

}  // TEST_SUITE
