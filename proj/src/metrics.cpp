#include "tscp/metrics.hpp"

#include "tscp/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tscp {

namespace {

void check_lengths(std::span<const PredictionInterval> intervals,
                   std::span<const double> targets) {
    if (intervals.empty() || intervals.size() != targets.size()) {
        throw std::invalid_argument("metrics: intervals/targets length mismatch");
    }
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("metrics: alpha must lie in (0, 1)");
    }
}

}  // namespace

double delta_cov(std::span<const PredictionInterval> intervals,
                 std::span<const double> targets, double alpha) {
    check_lengths(intervals, targets);
    check_alpha(alpha);
    std::size_t missed = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (!intervals[i].covers(targets[i])) ++missed;
    }
    const double realized =
        static_cast<double>(missed) / static_cast<double>(intervals.size());
    return alpha - realized;
}

double winkler_score(const PredictionInterval& interval, double target,
                     double alpha) {
    check_alpha(alpha);
    interval.validate();
    const double width = interval.width();
    if (target < interval.lower) {
        return width + (2.0 / alpha) * (interval.lower - target);
    }
    if (target > interval.upper) {
        return width + (2.0 / alpha) * (target - interval.upper);
    }
    return width;
}

double local_coverage_deficiency(std::span<const PredictionInterval> intervals,
                                 std::span<const double> targets, double alpha,
                                 std::size_t window, bool rolling) {
    check_lengths(intervals, targets);
    check_alpha(alpha);
    if (window < 1) throw std::invalid_argument("metrics: window must be >= 1");
    const std::size_t n = intervals.size();
    if (window > n) {
        throw std::invalid_argument("metrics: window longer than the series");
    }
    double deficiency_sum = 0.0;
    std::size_t n_windows = 0;
    const std::size_t stride = rolling ? 1 : window;
    for (std::size_t start = 0; start + window <= n; start += stride) {
        std::size_t missed = 0;
        for (std::size_t i = start; i < start + window; ++i) {
            if (!intervals[i].covers(targets[i])) ++missed;
        }
        const double dc =
            alpha - static_cast<double>(missed) / static_cast<double>(window);
        deficiency_sum += -std::min(dc, 0.0);
        ++n_windows;
    }
    return deficiency_sum / static_cast<double>(n_windows);
}

EvalReport evaluate(std::span<const PredictionInterval> intervals,
                    std::span<const double> targets, double alpha,
                    const std::vector<std::size_t>& windows, bool rolling) {
    check_lengths(intervals, targets);
    check_alpha(alpha);
    EvalReport report;
    report.alpha = alpha;
    report.n_test = intervals.size();
    report.delta_cov = delta_cov(intervals, targets, alpha);

    double width_sum = 0.0;
    double winkler_sum = 0.0;
    double abs_target_sum = 0.0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        width_sum += intervals[i].width();
        winkler_sum += winkler_score(intervals[i], targets[i], alpha);
        abs_target_sum += std::abs(targets[i]);
    }
    const double n = static_cast<double>(intervals.size());
    report.mean_pi_width = width_sum / n;
    report.mean_winkler = winkler_sum / n;
    const double mean_abs_target = abs_target_sum / n;
    report.mean_winkler_normalized =
        mean_abs_target > 0.0 ? report.mean_winkler / mean_abs_target
                              : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t w : windows) {
        if (w <= intervals.size()) {
            report.local_cov[w] =
                local_coverage_deficiency(intervals, targets, alpha, w, rolling);
        }
    }
    return report;
}

std::string eval_report_header(const std::vector<std::size_t>& windows) {
    std::string h =
        "method,alpha,n_test,delta_cov,mean_pi_width,mean_winkler,"
        "mean_winkler_normalized";
    for (std::size_t w : windows) {
        h += ",local_cov_k" + std::to_string(w);
    }
    return h;
}

std::string eval_report_row(const EvalReport& r) {
    std::string row = r.method;
    row += ',' + format_double(r.alpha);
    row += ',' + std::to_string(r.n_test);
    row += ',' + format_double(r.delta_cov);
    row += ',' + format_double(r.mean_pi_width);
    row += ',' + format_double(r.mean_winkler);
    row += ',' + format_double(r.mean_winkler_normalized);
    for (const auto& [w, v] : r.local_cov) {
        row += ',' + format_double(v);
    }
    return row;
}

}  // namespace tscp
