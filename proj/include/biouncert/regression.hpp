#pragma once

#include <vector>

#include <Eigen/Dense>

#include "biouncert/design.hpp"
#include "biouncert/model_fit.hpp"

namespace biouncert::stats {

struct LinearFitOptions {
    // Drop linearly dependent columns (coefficient NaN, listed in ModelFit::aliased)
    // instead of throwing SingularDesign.
    bool drop_aliased = false;
    double rank_tolerance = 1e-10;
    double condition_warning = 1e8;
};

/// Ordinary least squares; all weights must be 1.
ModelFit fit_ols(const DesignMatrix& design, const LinearFitOptions& options = {});

/// Minimizes sum w_i (y_i - x_i' beta)^2 with the design weights used raw.
/// Throws AllWeightsZero, SingularDesign.
ModelFit fit_wls(const DesignMatrix& design, const LinearFitOptions& options = {});

struct LogisticOptions {
    int max_iter = 100;
    double tol = 1e-8; // converged when max |delta beta| < tol
    bool drop_aliased = false;
    double rank_tolerance = 1e-10;
};

/// Weighted maximum likelihood by iteratively reweighted least squares.
/// Non-convergence (e.g. perfect separation) returns the last iterate with
/// converged == false and a warning.
ModelFit fit_logistic(const DesignMatrix& design, const LogisticOptions& options = {});

/// sigmoid(x_i' beta); aliased (NaN) coefficients contribute nothing.
/// Throws ColumnMismatch when the fit's names differ from the design columns.
std::vector<double> predict_proba(const ModelFit& fit, const DesignMatrix& design);

/// Fraction of rows whose thresholded probability (>= 0.5 predicts 1) matches y.
double accuracy(const std::vector<double>& proba, const Eigen::VectorXd& y, double threshold = 0.5);

double sigmoid(double t) noexcept;

/// sum w_i [y_i log p_i + (1 - y_i) log(1 - p_i)], evaluated stably.
double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& beta);

/// Gradient of logistic_log_likelihood: X' (w .* (y - p)).
Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& beta);

/// Coefficient vector of `fit` in design column order (aliased entries 0).
Eigen::VectorXd coefficient_vector(const ModelFit& fit, const DesignMatrix& design);

} // namespace biouncert::stats
