#pragma once

#include "tscp/hopfield.hpp"
#include "tscp/quantile.hpp"
#include "tscp/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

// Conformal interval constructors and the online evaluation driver.
//
// Split CP uses absolute scores with the finite-sample-corrected conformal
// quantile.  The windowed/weighted methods build asymmetric bounds from
// signed errors at levels alpha/2 and 1 - alpha/2: exponentially weighted
// ECDF with a +infinity test mass (NexCP), sliding-window empirical quantiles
// (EnbPI-style), nearest-neighbor pools (kNN), and learned soft retrieval
// (HopCPT).  An optional online alpha controller (AdaptiveCI-style) adjusts
// the working miscoverage level from observed hits and misses.

namespace tscp {

enum class MethodVariant { HopCPT, SplitCP, NexCP, EnbPI, KnnCP };

enum class HopQuantileMode { SampledMultiset, WeightedECDF };

// HopCPT retrieval memory: calibration plus revealed test errors (default)
// or frozen calibration only.
enum class HopMemory { CalibPlusRevealed, CalibOnly };

struct MethodConfig {
    MethodVariant variant = MethodVariant::SplitCP;
    double alpha = 0.1;
    double nexcp_rho = 0.993;
    std::int64_t enbpi_window = 100;
    double knn_top_share = 0.1;
    HopQuantileMode hopcpt_quantile_mode = HopQuantileMode::WeightedECDF;
    // 0 = automatic: max(1000, history length)
    std::size_t hopcpt_n_draws = 0;
    HopMemory hopcpt_memory = HopMemory::CalibPlusRevealed;

    void validate() const;
};

std::string method_name(MethodVariant v);
MethodVariant method_from_name(const std::string& name);

// Online alpha controller state.  Simple mode nudges alpha by
// gamma * (alpha_target - err_t) with err_t = 1 on a miss and 0 otherwise;
// Momentum mode replaces err_t by an exponentially weighted average with
// decay 0.95 (initialized at alpha_target so a perfectly calibrated method
// drifts nowhere).  alpha_current is clamped to [0.001, 0.999].
enum class AdaptiveMode { Simple, Momentum };

struct AdaptiveState {
    double alpha_target = 0.1;
    double alpha_current = 0.1;
    double gamma = 0.005;
    AdaptiveMode mode = AdaptiveMode::Simple;
    double err_ema = 0.1;  // Momentum only; initialize to alpha_target

    void validate() const;
};

void adaptive_update(AdaptiveState& state, bool covered);

// prediction +- conformal_quantile(|errors|, alpha); the +infinity sentinel
// produces the full-line interval flagged uninformative.
PredictionInterval split_cp_interval(std::span<const double> calib_abs_errors,
                                     double prediction, double alpha);

// Exponential-decay weights rho^(t+1-i) over t errors, normalized together
// with a unit mass assigned to +infinity; entry [t] of the result is that
// +infinity mass.
WeightVector nexcp_weights(std::size_t n_errors, double rho);

// Asymmetric weighted-ECDF bounds over signed errors with the +infinity test
// mass; if either bound hits the sentinel the interval is uninformative.
PredictionInterval nexcp_interval(std::span<const double> errors,
                                  double prediction, double alpha, double rho);

// prediction + empirical quantiles (alpha/2, 1-alpha/2) of the trailing
// window (the window is however much history exists when short).
PredictionInterval enbpi_interval(std::span<const double> window_errors,
                                  double prediction, double alpha);

// Pools the k = max(1, ceil(k_share * n)) nearest history errors under
// z-score-standardized Euclidean feature distance, then takes empirical
// quantiles.  Ties at the k-th distance resolve by history order.
PredictionInterval knn_cp_interval(const Eigen::MatrixXd& history_features,
                                   std::span<const double> history_errors,
                                   const Eigen::RowVectorXd& query_features,
                                   double k_share, double prediction,
                                   double alpha);

// Interval from an explicit weight distribution over signed errors: either
// asymmetric empirical quantiles of an n_draws multiset sampled from the
// weights (SampledMultiset) or the weighted-ECDF quantiles directly
// (WeightedECDF).  Both land on observed error values, so a point-mass
// weight vector collapses the interval to zero width exactly.
PredictionInterval interval_from_weights(std::span<const double> errors,
                                         const WeightVector& weights,
                                         double prediction, double alpha,
                                         HopQuantileMode mode,
                                         std::size_t n_draws, std::uint64_t seed);

// Precomputed encoder/projection state for retrieval over one series.
// Codes and key/query projections for all steps are computed once; per-step
// retrieval then reduces to dot products over the revealed memory.
class HopRetrievalSession {
  public:
    HopRetrievalSession(const HopfieldModel& model, const TimeSeriesDataset& data);

    // Attention weights of step `query` over history steps [begin, end),
    // which must not contain `query`.
    WeightVector weights(Eigen::Index query, Eigen::Index begin,
                         Eigen::Index end) const;

    PredictionInterval interval(Eigen::Index query, Eigen::Index begin,
                                Eigen::Index end, double alpha,
                                const MethodConfig& cfg, std::uint64_t seed) const;

  private:
    const TimeSeriesDataset& data_;
    double beta_;
    Eigen::MatrixXd q_proj_;  // T x assoc_dim
    Eigen::MatrixXd k_proj_;  // T x assoc_dim
};

// Runs one method over the test segment in time order.  History-driven
// methods see calibration errors plus test errors revealed strictly before
// the current step; split CP keeps a fixed calibration set.  An optional
// adaptive controller adjusts the working alpha after each step.  HopCPT
// requires a trained model.  Per-step sampling substreams are derived from
// `seed` and the step index.
std::vector<PredictionInterval> run_method(
    const TimeSeriesDataset& data, const SplitSpec& split,
    const MethodConfig& config, const HopfieldModel* model = nullptr,
    std::optional<AdaptiveState> adaptive = std::nullopt,
    std::uint64_t seed = 0);

}  // namespace tscp
