#include "tscp/quantile.hpp"

#include "tscp/rng.hpp"
#include "tscp/types.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

using namespace tscp;

namespace {

// Independent oracle: smallest k in [1, n] with k >= tau * n, then the k-th
// smallest element by full sort.  Linear scan, no ceil arithmetic.
double empirical_oracle(std::vector<double> values, double tau) {
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    for (std::size_t k = 1; k <= values.size(); ++k) {
        if (static_cast<double>(k) >= tau * n - 1e-9) return values[k - 1];
    }
    return values.back();
}

// Independent oracle for the weighted ECDF: explicit prefix sums over
// value-sorted pairs.
double weighted_oracle(std::vector<double> values, std::vector<double> weights,
                       double tau) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    double cum = 0.0;
    for (std::size_t i : order) {
        cum += weights[i];
        if (cum >= tau - 1e-12) return values[i];
    }
    return values[order.back()];
}

std::vector<double> random_values(rng::Engine& eng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng::uniform(eng, -10.0, 10.0);
    return v;
}

}  // namespace

TEST_SUITE("quantile") {

TEST_CASE("quantile level must lie strictly inside (0,1)") {
    CHECK_THROWS_AS(QuantileLevel(0.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantileLevel(1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantileLevel(-0.2), std::invalid_argument);
    CHECK_NOTHROW(QuantileLevel(0.5));
}

TEST_CASE("empirical quantile is the ceil(tau*n) order statistic") {
    const std::vector<double> v = {3.0, 1.0, 2.0};
    CHECK(empirical_quantile(v, QuantileLevel(0.5)) == 2.0);   // k = 2
    CHECK(empirical_quantile(v, QuantileLevel(0.99)) == 3.0);  // k = 3
    // tau*n an exact integer must not round up: 1/3 * 3 = 1 -> k = 1
    CHECK(empirical_quantile(v, QuantileLevel(1.0 / 3.0)) == 1.0);
    CHECK(empirical_quantile(v, QuantileLevel(2.0 / 3.0)) == 2.0);

    const std::vector<double> single = {42.0};
    CHECK(empirical_quantile(single, QuantileLevel(0.01)) == 42.0);
    CHECK(empirical_quantile(single, QuantileLevel(0.99)) == 42.0);

    CHECK_THROWS_AS(empirical_quantile({}, QuantileLevel(0.5)),
                    std::invalid_argument);
}

TEST_CASE("empirical quantile matches brute-force oracle on random cases") {
    rng::Engine eng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng::below(eng, 50);
        const std::vector<double> v = random_values(eng, n);
        const double tau = rng::uniform(eng, 0.01, 0.99);
        CHECK(empirical_quantile(v, QuantileLevel(tau)) == empirical_oracle(v, tau));
    }
    // levels that make tau*n integral, the rounding-sensitive spots
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = 2 + rng::below(eng, 30);
        const std::vector<double> v = random_values(eng, n);
        const std::size_t k = 1 + rng::below(eng, n);
        const double tau = static_cast<double>(k) / static_cast<double>(n);
        if (tau >= 1.0) continue;
        CHECK(empirical_quantile(v, QuantileLevel(tau)) == empirical_oracle(v, tau));
    }
}

TEST_CASE("conformal quantile applies the (n+1) correction and the sentinel") {
    std::vector<double> scores(9);
    for (std::size_t i = 0; i < 9; ++i) scores[i] = static_cast<double>(i + 1);

    // n = 9, alpha = 0.1: k = ceil(10 * 0.9) = 9 -> largest score
    ScoreQuantile q = conformal_quantile(scores, 0.1);
    CHECK_FALSE(q.infinite);
    CHECK(q.value == 9.0);

    // alpha = 0.05: k = ceil(10 * 0.95) = 10 > 9 -> +infinity
    q = conformal_quantile(scores, 0.05);
    CHECK(q.infinite);

    // n = 19, alpha = 0.1: k = ceil(20 * 0.9) = 18
    std::vector<double> s19(19);
    for (std::size_t i = 0; i < 19; ++i) s19[i] = static_cast<double>(i + 1);
    q = conformal_quantile(s19, 0.1);
    CHECK_FALSE(q.infinite);
    CHECK(q.value == 18.0);
}

TEST_CASE("conformal quantile converges to the population quantile") {
    rng::Engine eng(123);
    std::vector<double> scores(10000);
    for (double& s : scores) s = rng::uniform01(eng);
    const ScoreQuantile q = conformal_quantile(scores, 0.1);
    REQUIRE_FALSE(q.infinite);
    CHECK(q.value == doctest::Approx(0.9).epsilon(0.02));
}

TEST_CASE("uniform weights reproduce the order-statistic quantile exactly") {
    rng::Engine eng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng::below(eng, 50);
        const std::vector<double> v = random_values(eng, n);
        const WeightVector w =
            normalize_weights(std::vector<double>(n, 1.0));
        const double tau = rng::uniform(eng, 0.01, 0.99);
        CHECK(weighted_quantile_ecdf(v, w, QuantileLevel(tau)) ==
              empirical_quantile(v, QuantileLevel(tau)));
    }
}

TEST_CASE("weighted ECDF matches explicit prefix-sum oracle") {
    rng::Engine eng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng::below(eng, 40);
        const std::vector<double> v = random_values(eng, n);
        std::vector<double> raw(n);
        for (double& x : raw) x = rng::uniform(eng, 0.0, 1.0);
        raw[rng::below(eng, n)] = 1.0;  // ensure positive mass
        const WeightVector w = normalize_weights(raw);
        const double tau = rng::uniform(eng, 0.01, 0.99);
        CHECK(weighted_quantile_ecdf(v, w, QuantileLevel(tau)) ==
              weighted_oracle(v, w.w, tau));
    }
}

TEST_CASE("weighted ECDF rejects mismatched lengths") {
    const std::vector<double> v = {1.0, 2.0};
    const WeightVector w{{0.5, 0.25, 0.25}};
    CHECK_THROWS_AS(weighted_quantile_ecdf(v, w, QuantileLevel(0.5)),
                    std::invalid_argument);
}

TEST_CASE("tail mass produces the sentinel exactly when finite mass runs out") {
    const std::vector<double> v = {1.0, 2.0};
    const WeightVector w{{0.25, 0.25, 0.5}};  // trailing +infinity mass

    ScoreQuantile q = weighted_quantile_with_tail(v, w, QuantileLevel(0.2));
    CHECK_FALSE(q.infinite);
    CHECK(q.value == 1.0);

    // cumulative finite mass reaches 0.5 exactly at the second value
    q = weighted_quantile_with_tail(v, w, QuantileLevel(0.5));
    CHECK_FALSE(q.infinite);
    CHECK(q.value == 2.0);

    q = weighted_quantile_with_tail(v, w, QuantileLevel(0.51));
    CHECK(q.infinite);
}

TEST_CASE("weighted sampling is deterministic and matches its distribution") {
    const std::vector<double> v = {1.0, 2.0, 3.0};
    const WeightVector w{{0.2, 0.3, 0.5}};

    const std::vector<double> a = weighted_sample(v, w, 2000, 555);
    const std::vector<double> b = weighted_sample(v, w, 2000, 555);
    CHECK(a == b);
    const std::vector<double> c = weighted_sample(v, w, 2000, 556);
    CHECK(a != c);

    const std::size_t n = 100000;
    const std::vector<double> big = weighted_sample(v, w, n, 777);
    REQUIRE(big.size() == n);
    std::map<double, double> freq;
    double mean = 0.0;
    for (double x : big) {
        freq[x] += 1.0 / static_cast<double>(n);
        mean += x / static_cast<double>(n);
    }
    CHECK(freq[1.0] == doctest::Approx(0.2).epsilon(0.05));
    CHECK(std::abs(freq[1.0] - 0.2) <= 0.01);
    CHECK(std::abs(freq[2.0] - 0.3) <= 0.01);
    CHECK(std::abs(freq[3.0] - 0.5) <= 0.01);
    CHECK(std::abs(mean - 2.3) <= 0.02);
}

TEST_CASE("sampled quantiles approach the weighted ECDF quantiles") {
    const std::vector<double> v = {-4.0, -1.0, 0.5, 2.0, 6.0};
    const WeightVector w{{0.1, 0.2, 0.4, 0.2, 0.1}};
    const std::vector<double> sample = weighted_sample(v, w, 50000, 2024);
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double direct = weighted_quantile_ecdf(v, w, QuantileLevel(tau));
        const double sampled = empirical_quantile(sample, QuantileLevel(tau));
        // quantiles of a categorical sample sit on support points; with 50k
        // draws they can differ from the exact ECDF answer by at most one
        // support point at CDF jump locations
        const auto it = std::find(v.begin(), v.end(), sampled);
        REQUIRE(it != v.end());
        const auto jt = std::find(v.begin(), v.end(), direct);
        REQUIRE(jt != v.end());
        CHECK(std::abs(it - jt) <= 1);
    }
}

}  // TEST_SUITE
