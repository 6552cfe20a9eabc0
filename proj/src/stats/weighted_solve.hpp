#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace biouncert::stats::detail {

struct WeightedSolve {
    Eigen::VectorXd beta;              // one entry per design column; NaN where aliased
    std::vector<Eigen::Index> kept;    // non-aliased columns, ascending
    Eigen::MatrixXd cov_unscaled;      // (X_k' W X_k)^-1 over the kept columns
    double condition = 1.0;            // |R_00 / R_rr| of the pivoted QR
    double weighted_rss = 0.0;
    Eigen::Index positive_rows = 0;
};

/// Column-pivoted Householder QR of sqrt(W) X restricted to rows with w > 0.
/// Throws SingularDesign on rank deficiency unless drop_aliased.
WeightedSolve weighted_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             bool drop_aliased, double rank_tolerance,
                             const std::vector<std::string>* names = nullptr);

} // namespace biouncert::stats::detail
