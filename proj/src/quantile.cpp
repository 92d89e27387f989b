#include "tscp/quantile.hpp"

#include "tscp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tscp {

QuantileLevel::QuantileLevel(double t) : tau(t) {
    if (!(t > 0.0 && t < 1.0)) {
        throw std::invalid_argument("quantile level must lie in (0, 1)");
    }
}

namespace {

// ceil with downward slack so exact-integer products never round up an index
std::size_t ceil_index(double x) {
    return static_cast<std::size_t>(std::ceil(x - kIndexSlack));
}

std::vector<double> sorted_copy(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

double empirical_quantile(std::span<const double> values, QuantileLevel tau) {
    if (values.empty()) {
        throw std::invalid_argument("empirical_quantile: empty sample");
    }
    const std::size_t n = values.size();
    std::size_t k = ceil_index(tau.tau * static_cast<double>(n));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> v = sorted_copy(values);
    return v[k - 1];
}

ScoreQuantile conformal_quantile(std::span<const double> scores, double alpha) {
    if (scores.empty()) {
        throw std::invalid_argument("conformal_quantile: empty score set");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("conformal_quantile: alpha must lie in (0, 1)");
    }
    const std::size_t n = scores.size();
    std::size_t k = ceil_index(static_cast<double>(n + 1) * (1.0 - alpha));
    if (k < 1) k = 1;
    if (k > n) return {0.0, true};
    std::vector<double> v = sorted_copy(scores);
    return {v[k - 1], false};
}

namespace {

// Shared core: values paired with weights, sorted by value; returns the
// first value whose cumulative weight reaches tau, or the sentinel when the
// finite mass falls short (only reachable when tail_mass > 0).
ScoreQuantile weighted_quantile_core(std::span<const double> values,
                                     std::span<const double> weights,
                                     double tail_mass, double tau) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
    });
    double cum = 0.0;
    for (std::size_t i : order) {
        cum += weights[i];
        if (cum >= tau - kCumWeightSlack) return {values[i], false};
    }
    if (tail_mass > 0.0) return {0.0, true};
    // weights sum to 1 within tolerance; tau < 1, so this is pure rounding
    return {values[order.back()], false};
}

}  // namespace

double weighted_quantile_ecdf(std::span<const double> values,
                              const WeightVector& weights, QuantileLevel tau) {
    if (values.empty()) {
        throw std::invalid_argument("weighted_quantile_ecdf: empty support");
    }
    if (weights.size() != values.size()) {
        throw std::invalid_argument(
            "weighted_quantile_ecdf: weights length != values length");
    }
    weights.validate();
    return weighted_quantile_core(values, weights.w, 0.0, tau.tau).value;
}

ScoreQuantile weighted_quantile_with_tail(std::span<const double> values,
                                          const WeightVector& weights,
                                          QuantileLevel tau) {
    if (values.empty()) {
        throw std::invalid_argument("weighted_quantile_with_tail: empty support");
    }
    if (weights.size() != values.size() + 1) {
        throw std::invalid_argument(
            "weighted_quantile_with_tail: weights must have one trailing "
            "+infinity mass entry");
    }
    weights.validate();
    const double tail = weights.w.back();
    return weighted_quantile_core(
        values, std::span<const double>(weights.w.data(), values.size()), tail,
        tau.tau);
}

std::vector<double> weighted_sample(std::span<const double> values,
                                    const WeightVector& weights,
                                    std::size_t n_draws, std::uint64_t seed) {
    if (values.empty()) {
        throw std::invalid_argument("weighted_sample: empty support");
    }
    if (weights.size() != values.size()) {
        throw std::invalid_argument("weighted_sample: weights length != values length");
    }
    weights.validate();
    std::vector<double> cum(weights.size());
    std::partial_sum(weights.w.begin(), weights.w.end(), cum.begin());
    cum.back() = 1.0;  // close the final bucket against rounding
    rng::Engine eng(seed);
    std::vector<double> draws;
    draws.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
        const double u = rng::uniform01(eng);
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t idx =
            std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()),
                                  values.size() - 1);
        draws.push_back(values[idx]);
    }
    return draws;
}

}  // namespace tscp
