#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "biouncert/error.hpp"
#include "biouncert/regression.hpp"
#include "weighted_solve.hpp"

namespace biouncert::stats {

namespace {

// Floor on p(1-p) in the IRLS working weights; keeps the working response
// finite when fitted probabilities saturate under separation.
constexpr double kMinVariance = 1e-12;
constexpr int kMaxHalvings = 30;

// log(sigmoid(t)) without overflow.
double log_sigmoid(double t) noexcept
{
    return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

} // namespace

double sigmoid(double t) noexcept
{
    if (t >= 0.0)
        return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double logistic_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& beta)
{
    const Eigen::VectorXd eta = x * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (w(i) == 0.0)
            continue;
        ll += w(i) * (y(i) * log_sigmoid(eta(i)) + (1.0 - y(i)) * log_sigmoid(-eta(i)));
    }
    return ll;
}

Eigen::VectorXd logistic_score(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const Eigen::VectorXd& beta)
{
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        r(i) = w(i) * (y(i) - sigmoid(eta(i)));
    return x.transpose() * r;
}

ModelFit fit_logistic(const DesignMatrix& d, const LogisticOptions& opt)
{
    d.validate();
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        if (d.y(i) != 0.0 && d.y(i) != 1.0)
            throw Error(Errc::InvalidValue, "logistic response must be 0 or 1");
    }
    if (opt.max_iter < 1 || !(opt.tol > 0.0))
        throw Error(Errc::InvalidConfig, "max_iter must be >= 1 and tol > 0");

    // Aliasing is a property of the weighted design alone; settle it once.
    const auto structure = detail::weighted_solve(d.x, Eigen::VectorXd::Zero(d.rows()), d.weights, opt.drop_aliased,
                                                  opt.rank_tolerance, &d.columns);
    const auto& kept = structure.kept;
    const auto pk = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd xk(d.rows(), pk);
    for (Eigen::Index k = 0; k < pk; ++k)
        xk.col(k) = d.x.col(kept[static_cast<std::size_t>(k)]);

    ModelFit fit;
    fit.model_kind = d.kind;
    fit.weights.assign(d.weights.data(), d.weights.data() + d.weights.size());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(pk);
    double ll = logistic_log_likelihood(xk, d.y, d.weights, beta);
    Eigen::VectorXd working_w(d.rows());
    Eigen::VectorXd z(d.rows());
    int it = 0;
    bool converged = false;
    std::string stop_reason;
    for (it = 1; it <= opt.max_iter; ++it) {
        const Eigen::VectorXd eta = xk * beta;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double p = sigmoid(eta(i));
            const double v = std::max(p * (1.0 - p), kMinVariance);
            working_w(i) = d.weights(i) * v;
            z(i) = eta(i) + (d.y(i) - p) / v;
        }
        Eigen::VectorXd next;
        try {
            next = detail::weighted_solve(xk, z, working_w, false, opt.rank_tolerance).beta;
        } catch (const Error& e) {
            stop_reason = std::string("IRLS step failed: ") + e.what();
            break;
        }
        if (!next.allFinite()) {
            stop_reason = "IRLS step produced non-finite coefficients";
            break;
        }
        double ll_next = logistic_log_likelihood(xk, d.y, d.weights, next);
        for (int h = 0; h < kMaxHalvings && !(ll_next >= ll - 1e-12 * (1.0 + std::abs(ll))); ++h) {
            next = 0.5 * (beta + next);
            ll_next = logistic_log_likelihood(xk, d.y, d.weights, next);
        }
        const double delta = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        ll = ll_next;
        if (delta < opt.tol) {
            converged = true;
            break;
        }
    }
    fit.iterations = std::min(it, opt.max_iter);
    fit.converged = converged;
    fit.log_likelihood_or_rss = ll;
    if (!converged) {
        std::ostringstream os;
        os << "logistic regression did not converge after " << fit.iterations
           << " iterations (possible perfect separation)";
        if (!stop_reason.empty())
            os << "; " << stop_reason;
        fit.warnings.push_back(os.str());
    }

    fit.std_errors.assign(static_cast<std::size_t>(d.cols()), std::numeric_limits<double>::quiet_NaN());
    if (converged) {
        const Eigen::VectorXd eta = xk * beta;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double p = sigmoid(eta(i));
            working_w(i) = d.weights(i) * p * (1.0 - p);
        }
        try {
            const auto info = detail::weighted_solve(xk, Eigen::VectorXd::Zero(d.rows()), working_w, false,
                                                     opt.rank_tolerance);
            for (Eigen::Index k = 0; k < pk; ++k)
                fit.std_errors[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])]
                    = std::sqrt(info.cov_unscaled(k, k));
        } catch (const Error&) {
            // Leave NaN standard errors; the coefficients are still valid.
        }
    }

    Eigen::VectorXd full = Eigen::VectorXd::Constant(d.cols(), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index k = 0; k < pk; ++k)
        full(kept[static_cast<std::size_t>(k)]) = beta(k);
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
        fit.coefficients.emplace_back(d.columns[static_cast<std::size_t>(j)], full(j));
        if (std::isnan(full(j)))
            fit.aliased.push_back(d.columns[static_cast<std::size_t>(j)]);
    }
    return fit;
}

Eigen::VectorXd coefficient_vector(const ModelFit& fit, const DesignMatrix& design)
{
    if (fit.coefficients.size() != design.columns.size())
        throw Error(Errc::ColumnMismatch, "fit has " + std::to_string(fit.coefficients.size())
                                              + " coefficients, design has " + std::to_string(design.columns.size())
                                              + " columns");
    Eigen::VectorXd beta(design.cols());
    for (std::size_t j = 0; j < design.columns.size(); ++j) {
        if (fit.coefficients[j].first != design.columns[j])
            throw Error(Errc::ColumnMismatch, "coefficient '" + fit.coefficients[j].first + "' vs design column '"
                                                  + design.columns[j] + "'");
        const double v = fit.coefficients[j].second;
        beta(static_cast<Eigen::Index>(j)) = std::isnan(v) ? 0.0 : v;
    }
    return beta;
}

std::vector<double> predict_proba(const ModelFit& fit, const DesignMatrix& design)
{
    if (!is_classification(fit.model_kind))
        throw Error(Errc::InvalidConfig, "predict_proba needs a classification fit");
    const Eigen::VectorXd eta = design.x * coefficient_vector(fit, design);
    std::vector<double> p(static_cast<std::size_t>(eta.size()));
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        p[static_cast<std::size_t>(i)] = sigmoid(eta(i));
    return p;
}

double accuracy(const std::vector<double>& proba, const Eigen::VectorXd& y, double threshold)
{
    if (static_cast<Eigen::Index>(proba.size()) != y.size())
        throw Error(Errc::ColumnMismatch, "prediction and label counts differ");
    if (proba.empty())
        return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < proba.size(); ++i) {
        const double predicted = proba[i] >= threshold ? 1.0 : 0.0;
        correct += predicted == y(static_cast<Eigen::Index>(i)) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(proba.size());
}

} // namespace biouncert::stats
