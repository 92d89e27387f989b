#include "tscp/types.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tscp {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void TimeSeriesDataset::validate() const {
    const Eigen::Index t = targets.size();
    require(t >= 1, "dataset: length must be >= 1");
    require(features.rows() == t, "dataset: features rows != targets length");
    require(static_cast<Eigen::Index>(timestamps.size()) == t,
            "dataset: timestamps length != targets length");
    require(all_finite(features), "dataset: non-finite feature value");
    require(all_finite(targets), "dataset: non-finite target value");
    for (Eigen::Index i = 1; i < t; ++i) {
        require(timestamps[i - 1] < timestamps[i],
                "dataset: timestamps must be strictly increasing");
    }
    if (predictions.size() == 0 && errors.size() == 0) return;
    require(predictions.size() == t, "dataset: predictions length != targets length");
    require(errors.size() == t, "dataset: errors length != targets length");
    require(all_finite(predictions), "dataset: non-finite prediction value");
    for (Eigen::Index i = 0; i < t; ++i) {
        // bit-for-bit, not approximately: errors are derived data
        require(errors[i] == targets[i] - predictions[i],
                "dataset: errors[i] != targets[i] - predictions[i]");
    }
}

TimeSeriesDataset TimeSeriesDataset::with_predictions(
    const Eigen::VectorXd& preds) const {
    TimeSeriesDataset out = *this;
    out.predictions = preds;
    out.errors = compute_errors(targets, preds);
    out.validate();
    return out;
}

void SplitSpec::validate(Eigen::Index total) const {
    if (!(0 < train_end && train_end < calib_end && calib_end < test_end &&
          test_end <= total)) {
        throw std::invalid_argument(
            "split: need 0 < train_end < calib_end < test_end <= series length");
    }
}

SplitSpec split_from_fractions(Eigen::Index total, double train_frac,
                               double calib_frac, double test_frac) {
    if (!(train_frac > 0 && calib_frac > 0 && test_frac > 0)) {
        throw std::invalid_argument("split: fractions must be positive");
    }
    if (train_frac + calib_frac + test_frac > 1.0 + 1e-9) {
        throw std::invalid_argument("split: fractions sum to more than 1");
    }
    SplitSpec s;
    s.train_end = static_cast<Eigen::Index>(std::llround(train_frac * total));
    s.calib_end =
        static_cast<Eigen::Index>(std::llround((train_frac + calib_frac) * total));
    s.test_end = static_cast<Eigen::Index>(
        std::llround((train_frac + calib_frac + test_frac) * total));
    s.validate(total);
    return s;
}

void PredictionInterval::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("interval: alpha must lie in (0, 1)");
    }
    if (!(lower <= upper)) {  // also rejects NaN bounds
        throw std::invalid_argument("interval: lower > upper");
    }
}

PredictionInterval full_line_interval(double alpha) {
    PredictionInterval p;
    p.lower = -std::numeric_limits<double>::infinity();
    p.upper = std::numeric_limits<double>::infinity();
    p.alpha = alpha;
    p.uninformative = true;
    return p;
}

void WeightVector::validate() const {
    if (w.empty()) throw std::invalid_argument("weights: empty vector");
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument("weights: entries must be finite and >= 0");
        }
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("weights: sum differs from 1 by more than 1e-9");
    }
}

Eigen::VectorXd compute_errors(const Eigen::VectorXd& targets,
                               const Eigen::VectorXd& predictions) {
    if (targets.size() != predictions.size()) {
        throw std::invalid_argument("compute_errors: length mismatch");
    }
    return targets - predictions;
}

WeightVector normalize_weights(std::span<const double> raw) {
    if (raw.empty()) throw std::invalid_argument("normalize_weights: empty input");
    double total = 0.0;
    for (double x : raw) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw std::invalid_argument(
                "normalize_weights: entries must be finite and >= 0");
        }
        total += x;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("normalize_weights: total mass is zero");
    }
    WeightVector out;
    out.w.reserve(raw.size());
    for (double x : raw) out.w.push_back(x / total);
    return out;
}

}  // namespace tscp
