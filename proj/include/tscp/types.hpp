#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Core domain model: time series with point predictions, train/calib/test
// splits, prediction intervals, and normalized weight vectors.  All numeric
// data is double precision.

namespace tscp {

// One regularly sampled series.  `features` is T x m (m >= 0), `targets` has
// length T, `timestamps` are strictly increasing integer step indices
// (0-based by convention).  `predictions`/`errors` are either both empty (no
// base model applied yet) or both length T with
// errors[i] == targets[i] - predictions[i] bit-for-bit.
struct TimeSeriesDataset {
    Eigen::MatrixXd features;
    Eigen::VectorXd targets;
    Eigen::VectorXd predictions;
    Eigen::VectorXd errors;
    std::vector<std::int64_t> timestamps;

    Eigen::Index size() const { return targets.size(); }
    Eigen::Index n_features() const { return features.cols(); }
    bool has_predictions() const { return predictions.size() > 0; }

    // Throws std::invalid_argument if any invariant is violated.
    void validate() const;

    // Returns a copy with `predictions` attached and `errors` recomputed.
    TimeSeriesDataset with_predictions(const Eigen::VectorXd& preds) const;
};

// Half-open index boundaries: train = [0, train_end), calibration =
// [train_end, calib_end), test = [calib_end, test_end).
struct SplitSpec {
    Eigen::Index train_end = 0;
    Eigen::Index calib_end = 0;
    Eigen::Index test_end = 0;

    // Requires 0 < train_end < calib_end < test_end <= total.
    void validate(Eigen::Index total) const;

    Eigen::Index n_train() const { return train_end; }
    Eigen::Index n_calib() const { return calib_end - train_end; }
    Eigen::Index n_test() const { return test_end - calib_end; }
};

// Builds a SplitSpec from fractions of the series length (rounded to the
// nearest index).  Fractions must be positive and sum to at most 1 + 1e-9.
SplitSpec split_from_fractions(Eigen::Index total, double train_frac,
                               double calib_frac, double test_frac);

// One two-sided interval at miscoverage level alpha.  `uninformative` marks
// the degenerate full-line result produced when a conformal quantile runs off
// the end of the calibration scores; its bounds are -inf/+inf.
struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.0;
    bool uninformative = false;

    double width() const { return upper - lower; }
    bool covers(double y) const { return lower <= y && y <= upper; }

    void validate() const;
};

PredictionInterval full_line_interval(double alpha);

// Nonnegative weights summing to 1 within 1e-9.  Houses both exponential
// decay weights and learned soft-attention rows.
struct WeightVector {
    std::vector<double> w;

    std::size_t size() const { return w.size(); }
    double operator[](std::size_t i) const { return w[i]; }

    void validate() const;
};

// errors[i] = targets[i] - predictions[i]; throws on length mismatch.
Eigen::VectorXd compute_errors(const Eigen::VectorXd& targets,
                               const Eigen::VectorXd& predictions);

// Scales raw nonnegative weights to sum to 1.  Throws if any entry is
// negative or non-finite, or if the total mass is zero.
WeightVector normalize_weights(std::span<const double> raw);

}  // namespace tscp
