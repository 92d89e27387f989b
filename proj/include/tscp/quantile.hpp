#pragma once

#include "tscp/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

// Order-statistic and weighted empirical quantiles.
//
// Conventions, fixed across the library:
//   * empirical_quantile(v, tau) is the k-th smallest element with
//     k = ceil(tau * n); no interpolation, ties resolved by sorted order.
//   * conformal_quantile(s, alpha) is the ceil((n+1)(1-alpha))-th smallest
//     score; when that index exceeds n the result is the +infinity sentinel,
//     reported as an explicit flag rather than a float inf.
//   * weighted_quantile_ecdf(v, w, tau) is the smallest value whose
//     cumulative weight reaches tau.
// Ceil/cumulative comparisons carry a tiny slack (1e-9 / 1e-12) so that
// products and prefix sums that are integers in exact arithmetic do not
// round the index upward; see kIndexSlack / kCumWeightSlack.

namespace tscp {

// Quantile level, strictly inside (0, 1).
struct QuantileLevel {
    double tau;
    explicit QuantileLevel(double t);
};

// Guard for ceil(tau*n) style index computations: a product that is an exact
// integer in real arithmetic may land one ulp above it in floating point.
inline constexpr double kIndexSlack = 1e-9;
// Guard for cumulative-weight >= tau tests, same rationale.
inline constexpr double kCumWeightSlack = 1e-12;

// A score quantile that may sit at +infinity (conformal index past the end,
// or cumulative finite weight short of tau).
struct ScoreQuantile {
    double value = 0.0;
    bool infinite = false;
};

// k = ceil(tau*n) order statistic; k is clamped to [1, n].
double empirical_quantile(std::span<const double> values, QuantileLevel tau);

// ceil((n+1)*(1-alpha)) order statistic with +infinity sentinel.
ScoreQuantile conformal_quantile(std::span<const double> scores, double alpha);

// Smallest value whose cumulative weight reaches tau; weights.size() must
// equal values.size().  Uniform weights reproduce empirical_quantile exactly.
double weighted_quantile_ecdf(std::span<const double> values,
                              const WeightVector& weights, QuantileLevel tau);

// Same, but weights has one extra trailing entry interpreted as a point mass
// at +infinity.  If the finite cumulative weight never reaches tau the
// result is the sentinel.
ScoreQuantile weighted_quantile_with_tail(std::span<const double> values,
                                          const WeightVector& weights,
                                          QuantileLevel tau);

// n_draws categorical samples from the weighted support, by inverse-CDF over
// mt19937_64 uniforms.  Deterministic given seed.
std::vector<double> weighted_sample(std::span<const double> values,
                                    const WeightVector& weights,
                                    std::size_t n_draws, std::uint64_t seed);

}  // namespace tscp
