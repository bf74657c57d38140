#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "error.hpp"
#include "path_solver.hpp"

namespace ctlasso {

enum class Method { lasso, ct_lasso, ust, adaptive_lasso, elastic_net };

/// One fully specified estimator: method plus its covariance rule and weights.
struct EstimatorSpec {
    Method method = Method::lasso;
    ThresholdRule rule;          // ct_lasso and elastic_net
    double gamma_weights = 0.0;  // adaptive lasso exponent

    static EstimatorSpec lasso() { return {}; }
    static EstimatorSpec ct_lasso(ThresholdRule r) { return {Method::ct_lasso, r, 0.0}; }
    static EstimatorSpec ust() { return {Method::ust, {}, 0.0}; }
    static EstimatorSpec adaptive_lasso(double gamma) { return {Method::adaptive_lasso, {}, gamma}; }
    static EstimatorSpec elastic_net(double lambda2)
    {
        return {Method::elastic_net, ThresholdRule::elastic_net(lambda2), 0.0};
    }

    /// Covariance rule actually handed to the solver. Lasso is the identity rule.
    ThresholdRule effective_rule() const
    {
        switch (method) {
            case Method::ct_lasso:
            case Method::elastic_net: return rule;
            default: return ThresholdRule::identity();
        }
    }

    bool operator==(const EstimatorSpec&) const = default;
};

inline VectorXd soft_threshold(const VectorXd& r, double lambda)
{
    return r.unaryExpr([lambda](double v) {
        const double m = std::abs(v) - lambda;
        return m > 0.0 ? std::copysign(m, v) : 0.0;
    });
}

/// Univariate soft thresholding of r = X^T y / n.
inline VectorXd ust_fit(const StandardizedDesign& design, double lambda)
{
    detail::require(lambda >= 0.0, ErrorKind::invalid_argument, "ust_fit: lambda must be >= 0");
    return soft_threshold(design.xty(), lambda);
}

/**
 * Closed-form UST path: breakpoints at the distinct |r_j| in decreasing order
 * plus a final breakpoint at the lambda floor, mirroring ct_lars' layout.
 */
inline SolutionPath ust_path(const VectorXd& xty, double lambda_floor = -1.0)
{
    SolutionPath path;
    path.p = xty.size();
    std::vector<Index> order(static_cast<std::size_t>(xty.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(xty(a)) > std::abs(xty(b)); });
    const double lmax = xty.size() ? std::abs(xty(order.front())) : 0.0;
    if (lmax == 0.0) {
        path.breakpoints.push_back({0.0, VectorXd::Zero(path.p), {}, true});
        return path;
    }
    const double floor = lambda_floor >= 0.0 ? lambda_floor : 1e-8 * lmax;

    IndexSet active;
    std::size_t next = 0;
    auto absorb_ties = [&](double level) {
        while (next < order.size() && std::abs(xty(order[next])) >= level) {
            active.push_back(order[next++]);
        }
        std::sort(active.begin(), active.end());
    };
    double level = lmax;
    while (level > floor) {
        absorb_ties(level);
        path.breakpoints.push_back({level, soft_threshold(xty, level), active, true});
        level = next < order.size() ? std::abs(xty(order[next])) : 0.0;
    }
    path.breakpoints.push_back({floor, soft_threshold(xty, floor), active, true});
    path.termination = Termination::lambda_floor;
    return path;
}

/**
 * Adaptive lasso with univariate initial estimates r_j: columns are scaled
 * by |r_j|^gamma, the identity-rule path is fitted on the reweighted
 * problem and coefficients are mapped back by the same weights.
 */
inline SolutionPath adaptive_lasso_path(const CovMatrix& sample_cov, const VectorXd& xty, double gamma,
                                        Index n, LarsOptions opts = {})
{
    detail::require(gamma >= 0.0, ErrorKind::invalid_argument, "adaptive lasso gamma must be >= 0");
    const Index p = xty.size();
    VectorXd w(p);
    for (Index j = 0; j < p; ++j) {
        if (std::abs(xty(j)) < 1e-14)
            throw Error(ErrorKind::zero_initial_estimate,
                        "initial estimate for column " + std::to_string(j) + " is zero");
        w(j) = std::pow(std::abs(xty(j)), gamma);
    }
    if (opts.max_steps <= 0) opts.max_steps = default_max_steps(n, p);
    const MatrixXd cov_w = w.asDiagonal() * sample_cov.matrix() * w.asDiagonal();
    SolutionPath path = ct_lars(cov_w, w.cwiseProduct(xty), opts);
    for (auto& bp : path.breakpoints) bp.beta = bp.beta.cwiseProduct(w);
    path.rule = ThresholdRule::identity();
    return path;
}

inline SolutionPath adaptive_lasso_path(const StandardizedDesign& design, double gamma,
                                        const LarsOptions& opts = {})
{
    return adaptive_lasso_path(sample_covariance(design), design.xty(), gamma, design.n(), opts);
}

inline SolutionPath elastic_net_path(const StandardizedDesign& design, double lambda2,
                                     const LarsOptions& opts = {})
{
    return ct_lars(design, ThresholdRule::elastic_net(lambda2), opts);
}

/// lambda_max of the problem `spec` solves on this data.
inline double spec_lambda_max(const EstimatorSpec& spec, const VectorXd& xty)
{
    if (xty.size() == 0) return 0.0;
    if (spec.method == Method::adaptive_lasso)
        return xty.unaryExpr([&](double v) { return std::pow(std::abs(v), 1.0 + spec.gamma_weights); })
            .maxCoeff();
    return xty.cwiseAbs().maxCoeff();
}

/// Fits the solution path of any estimator from precomputed moments.
inline SolutionPath fit_path(const EstimatorSpec& spec, const CovMatrix& sample_cov, const VectorXd& xty,
                             Index n, const LarsOptions& opts = {})
{
    switch (spec.method) {
        case Method::ust: {
            SolutionPath path = ust_path(xty, opts.lambda_floor);
            return path;
        }
        case Method::adaptive_lasso:
            return adaptive_lasso_path(sample_cov, xty, spec.gamma_weights, n, opts);
        default:
            return ct_lars(sample_cov, xty, spec.effective_rule(), n, opts);
    }
}

inline SolutionPath fit_path(const EstimatorSpec& spec, const StandardizedDesign& design,
                             const LarsOptions& opts = {})
{
    return fit_path(spec, sample_covariance(design), design.xty(), design.n(), opts);
}

/// A named estimator family and the grid of specs it is tuned over.
struct MethodFamily {
    std::string name;
    std::vector<EstimatorSpec> grid;
};

struct TuningGrids {
    std::vector<double> nu{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0 - 1e-6};
    std::vector<double> gamma{0.0, 0.5, 1.0, 2.0};
    std::vector<double> lambda2{0.0, 0.25, 0.5, 1.0, 1.5, 4.0, 10.0};
};

inline const std::vector<std::string>& method_family_names()
{
    static const std::vector<std::string> names{"lasso",    "ct-hard", "ct-soft",       "ct-adapt",
                                                "ust",      "adaptive-lasso", "elastic-net"};
    return names;
}

inline MethodFamily make_family(const std::string& name, const TuningGrids& grids = {})
{
    MethodFamily fam{name, {}};
    if (name == "lasso") {
        fam.grid.push_back(EstimatorSpec::lasso());
    } else if (name == "ust") {
        fam.grid.push_back(EstimatorSpec::ust());
    } else if (name == "ct-hard" || name == "ct-soft") {
        for (double nu : grids.nu)
            fam.grid.push_back(EstimatorSpec::ct_lasso(name == "ct-hard" ? ThresholdRule::hard(nu)
                                                                         : ThresholdRule::soft(nu)));
    } else if (name == "ct-adapt") {
        for (double nu : grids.nu)
            for (double g : grids.gamma)
                fam.grid.push_back(EstimatorSpec::ct_lasso(ThresholdRule::adaptive(nu, g)));
    } else if (name == "adaptive-lasso") {
        for (double g : grids.gamma) fam.grid.push_back(EstimatorSpec::adaptive_lasso(g));
    } else if (name == "elastic-net") {
        for (double l2 : grids.lambda2) fam.grid.push_back(EstimatorSpec::elastic_net(l2));
    } else {
        throw Error(ErrorKind::parse_error, "unknown method '" + name + "'");
    }
    return fam;
}

} // namespace ctlasso
