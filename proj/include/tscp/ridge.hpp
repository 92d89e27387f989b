#pragma once

#include <Eigen/Dense>

// Ridge regression base model, fit by the centered normal equations
// (Xc' Xc + lambda I) w = Xc' y with an unpenalized intercept recovered as
// mean(y) - mean(X) . w.  The SPD system is solved with an LLT factorization.

namespace tscp {

struct RidgeModel {
    Eigen::VectorXd coefficients;
    double intercept = 0.0;
    double lambda = 0.0;
};

// Throws std::invalid_argument on shape errors and std::runtime_error when
// the regularized system is not positive definite (e.g. lambda = 0 with
// collinear features).
RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     double lambda = 1.0);

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& X);

}  // namespace tscp
