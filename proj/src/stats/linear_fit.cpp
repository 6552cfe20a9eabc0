#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "biouncert/error.hpp"
#include "biouncert/regression.hpp"
#include "weighted_solve.hpp"

namespace biouncert::stats {

namespace detail {

namespace {

std::string describe_columns(const std::vector<Eigen::Index>& idx, const std::vector<std::string>* names)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        os << (i ? ", " : "");
        if (names != nullptr && static_cast<std::size_t>(idx[i]) < names->size())
            os << (*names)[static_cast<std::size_t>(idx[i])];
        else
            os << "column " << idx[i];
    }
    return os.str();
}

} // namespace

WeightedSolve weighted_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                             bool drop_aliased, double rank_tolerance, const std::vector<std::string>* names)
{
    const Eigen::Index p = x.cols();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (w(i) > 0.0)
            rows.push_back(i);
    }
    if (rows.empty())
        throw Error(Errc::AllWeightsZero, "every row has weight zero");
    const auto n = static_cast<Eigen::Index>(rows.size());

    Eigen::MatrixXd xs(n, p);
    Eigen::VectorXd ys(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double sw = std::sqrt(w(rows[static_cast<std::size_t>(r)]));
        xs.row(r) = sw * x.row(rows[static_cast<std::size_t>(r)]);
        ys(r) = sw * y(rows[static_cast<std::size_t>(r)]);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(rank_tolerance);
    const Eigen::Index rank = qr.rank();

    WeightedSolve out;
    out.positive_rows = n;
    if (rank < p) {
        std::vector<Eigen::Index> dropped;
        for (Eigen::Index k = rank; k < p; ++k)
            dropped.push_back(qr.colsPermutation().indices()(k));
        std::sort(dropped.begin(), dropped.end());
        if (!drop_aliased || rank == 0)
            throw Error(Errc::SingularDesign, "rank " + std::to_string(rank) + " < " + std::to_string(p)
                                                  + "; linearly dependent: " + describe_columns(dropped, names));
        for (Eigen::Index j = 0; j < p; ++j) {
            if (std::find(dropped.begin(), dropped.end(), j) == dropped.end())
                out.kept.push_back(j);
        }
        Eigen::MatrixXd xk(n, static_cast<Eigen::Index>(out.kept.size()));
        for (std::size_t k = 0; k < out.kept.size(); ++k)
            xk.col(static_cast<Eigen::Index>(k)) = xs.col(out.kept[k]);
        Eigen::VectorXd wk = Eigen::VectorXd::Ones(n);
        auto reduced = weighted_solve(xk, ys, wk, false, rank_tolerance);
        out.beta = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < out.kept.size(); ++k)
            out.beta(out.kept[k]) = reduced.beta(static_cast<Eigen::Index>(k));
        out.cov_unscaled = std::move(reduced.cov_unscaled);
        out.condition = reduced.condition;
        out.weighted_rss = reduced.weighted_rss;
        return out;
    }

    for (Eigen::Index j = 0; j < p; ++j)
        out.kept.push_back(j);
    out.beta = qr.solve(ys);
    out.weighted_rss = (ys - xs * out.beta).squaredNorm();

    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    out.condition = std::abs(r(0, 0)) / std::abs(r(p - 1, p - 1));
    const Eigen::MatrixXd r_inv = r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov_pivoted = r_inv * r_inv.transpose();
    const auto& perm = qr.colsPermutation();
    out.cov_unscaled = perm * cov_pivoted * perm.transpose();
    return out;
}

} // namespace detail

namespace {

ModelFit linear_fit(const DesignMatrix& d, const LinearFitOptions& opt)
{
    d.validate();
    const auto solve = detail::weighted_solve(d.x, d.y, d.weights, opt.drop_aliased, opt.rank_tolerance, &d.columns);

    ModelFit fit;
    fit.model_kind = d.kind;
    fit.converged = true;
    fit.iterations = 1;
    fit.log_likelihood_or_rss = solve.weighted_rss;
    fit.weights.assign(d.weights.data(), d.weights.data() + d.weights.size());

    const auto rank = static_cast<Eigen::Index>(solve.kept.size());
    const double dof = static_cast<double>(solve.positive_rows - rank);
    const double sigma2 = dof > 0 ? solve.weighted_rss / dof : std::numeric_limits<double>::quiet_NaN();
    fit.std_errors.assign(static_cast<std::size_t>(d.cols()), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index k = 0; k < rank; ++k)
        fit.std_errors[static_cast<std::size_t>(solve.kept[static_cast<std::size_t>(k)])]
            = std::sqrt(sigma2 * solve.cov_unscaled(k, k));
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
        fit.coefficients.emplace_back(d.columns[static_cast<std::size_t>(j)], solve.beta(j));
        if (std::isnan(solve.beta(j)))
            fit.aliased.push_back(d.columns[static_cast<std::size_t>(j)]);
    }
    if (solve.condition > opt.condition_warning) {
        std::ostringstream os;
        os << "ill-conditioned design (condition estimate " << solve.condition << ")";
        fit.warnings.push_back(os.str());
    }
    return fit;
}

} // namespace

ModelFit fit_ols(const DesignMatrix& design, const LinearFitOptions& options)
{
    if (!(design.weights.array() == 1.0).all())
        throw Error(Errc::InvalidConfig, "fit_ols requires unit weights; use fit_wls");
    return linear_fit(design, options);
}

ModelFit fit_wls(const DesignMatrix& design, const LinearFitOptions& options)
{
    return linear_fit(design, options);
}

} // namespace biouncert::stats
