#include "tscp/ridge.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace tscp {

RidgeModel ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     double lambda) {
    if (X.rows() != y.size()) {
        throw std::invalid_argument("ridge_fit: X rows != y length");
    }
    if (X.rows() < 1 || X.cols() < 1) {
        throw std::invalid_argument("ridge_fit: need at least one row and column");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("ridge_fit: lambda must be >= 0");
    }

    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += lambda;

    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error(
            "ridge_fit: normal equations not positive definite "
            "(collinear features with lambda = 0?)");
    }
    const Eigen::VectorXd rhs = Xc.transpose() * yc;
    const Eigen::VectorXd w = llt.solve(rhs);
    // guard against a silently inaccurate solve on an ill-conditioned system
    const double residual = (gram * w - rhs).cwiseAbs().maxCoeff();
    const double scale = rhs.cwiseAbs().maxCoeff() + 1.0;
    if (!(residual <= 1e-8 * scale)) {
        throw std::runtime_error("ridge_fit: normal-equation solve inaccurate");
    }

    RidgeModel model;
    model.coefficients = w;
    model.intercept = y_mean - x_mean.dot(w);
    model.lambda = lambda;
    return model;
}

Eigen::VectorXd ridge_predict(const RidgeModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.coefficients.size()) {
        throw std::invalid_argument("ridge_predict: feature count mismatch");
    }
    return (X * model.coefficients).array() + model.intercept;
}

}  // namespace tscp
