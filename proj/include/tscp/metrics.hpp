#pragma once

#include "tscp/types.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

// Evaluation metrics for interval forecasts.
//
//   delta_cov      alpha - alpha*, where alpha* is the realized miscoverage
//                  rate (boundary hits count as covered); positive means the
//                  method over-covers.
//   winkler_score  interval width, plus 2/alpha times the distance to the
//                  nearer bound when the target falls outside.
//   local_coverage mean over windows of the coverage deficiency
//                  -min(delta_cov_w, 0); 0 iff no window under-covers.
//                  Windows are disjoint complete blocks of k steps by
//                  default, or every stride-1 window when rolling is set.

namespace tscp {

double delta_cov(std::span<const PredictionInterval> intervals,
                 std::span<const double> targets, double alpha);

double winkler_score(const PredictionInterval& interval, double target,
                     double alpha);

double local_coverage_deficiency(std::span<const PredictionInterval> intervals,
                                 std::span<const double> targets, double alpha,
                                 std::size_t window, bool rolling = false);

// One evaluated (method, series, alpha) cell.
struct EvalReport {
    std::string method;
    double alpha = 0.0;
    std::size_t n_test = 0;
    double delta_cov = 0.0;
    double mean_pi_width = 0.0;
    double mean_winkler = 0.0;
    // mean Winkler divided by the mean absolute target
    double mean_winkler_normalized = 0.0;
    // window size -> deficiency
    std::map<std::size_t, double> local_cov;
};

inline const std::vector<std::size_t> kDefaultWindows = {10, 20, 50};

EvalReport evaluate(std::span<const PredictionInterval> intervals,
                    std::span<const double> targets, double alpha,
                    const std::vector<std::size_t>& windows = kDefaultWindows,
                    bool rolling = false);

// Stable CSV column order for reports with the given window sizes.
std::string eval_report_header(const std::vector<std::size_t>& windows);
std::string eval_report_row(const EvalReport& report);

}  // namespace tscp
