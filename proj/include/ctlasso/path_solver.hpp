#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "covariance.hpp"
#include "error.hpp"

namespace ctlasso {

enum class Termination {
    correlation_exhausted,
    eigenvalue_stop,
    max_steps,
    lambda_floor,
    singular_active_submatrix,
};

inline std::string to_string(Termination t)
{
    switch (t) {
        case Termination::correlation_exhausted: return "CorrelationExhausted";
        case Termination::eigenvalue_stop: return "EigenvalueStop";
        case Termination::max_steps: return "MaxSteps";
        case Termination::lambda_floor: return "LambdaFloor";
        case Termination::singular_active_submatrix: return "SingularActiveSubmatrix";
    }
    return "CorrelationExhausted";
}

inline Termination termination_from_string(const std::string& s)
{
    for (auto t : {Termination::correlation_exhausted, Termination::eigenvalue_stop,
                   Termination::max_steps, Termination::lambda_floor,
                   Termination::singular_active_submatrix}) {
        if (to_string(t) == s) return t;
    }
    throw Error(ErrorKind::parse_error, "unknown termination '" + s + "'");
}

struct Breakpoint {
    double lambda = 0.0;
    VectorXd beta;
    IndexSet active; // active set of the segment that starts here
    // |x_j^T y / n| < lambda off the support and the support block is PD
    bool global = false;
};

/// Piecewise-linear coefficient path; breakpoint lambdas strictly decrease.
struct SolutionPath {
    std::vector<Breakpoint> breakpoints;
    Termination termination = Termination::correlation_exhausted;
    ThresholdRule rule;
    Index p = 0;

    double lambda_max() const { return breakpoints.empty() ? 0.0 : breakpoints.front().lambda; }
    double lambda_min() const { return breakpoints.empty() ? 0.0 : breakpoints.back().lambda; }
};

struct LarsOptions {
    /// <= 0 selects 8 * min(n, p) + p.
    int max_steps = 0;
    /// < 0 selects 1e-8 * lambda_max.
    double lambda_floor = -1.0;
    /// Correlations at or below this magnitude count as exhausted.
    double tol = 1e-12;
    /// Active blocks with smallest eigenvalue at or below this stop the path.
    double eig_tol = 1e-12;
};

/// (c_nu)_j = x_j^T y / n - (Sigma_nu)_j^T beta.
inline VectorXd residual_correlations(const VectorXd& beta, const MatrixXd& cov_nu, const VectorXd& xty)
{
    detail::require(beta.size() == cov_nu.rows() && xty.size() == cov_nu.rows() &&
                        cov_nu.rows() == cov_nu.cols(),
                    ErrorKind::dimension_mismatch, "residual_correlations dimension mismatch");
    return xty - cov_nu.transpose() * beta;
}

inline VectorXd residual_correlations(const VectorXd& beta, const CovMatrix& cov_nu, const VectorXd& xty)
{
    return residual_correlations(beta, cov_nu.matrix(), xty);
}

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline IndexSet support(const VectorXd& beta)
{
    IndexSet s;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) s.push_back(j);
    return s;
}

/// Positive definiteness of a principal block, judged by Cholesky with a
/// symmetric-eigensolver fallback when the factor is near-singular.
inline bool block_is_pd(const MatrixXd& cov, const IndexSet& idx, double eig_tol)
{
    if (idx.empty()) return true;
    const MatrixXd sub = cov(idx, idx);
    Eigen::LLT<MatrixXd> llt(sub);
    if (llt.info() == Eigen::Success) {
        const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
        if (min_pivot * min_pivot > 1e-8) return true;
    }
    return smallest_eigenvalue(sub) > eig_tol;
}

inline bool is_global(const MatrixXd& cov, const VectorXd& xty, const VectorXd& beta,
                      double lambda, double eig_tol)
{
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) == 0.0 && !(std::abs(xty(j)) < lambda)) return false;
    return block_is_pd(cov, support(beta), eig_tol);
}

} // namespace detail

/**
 * Covariance-thresholded LARS on a prepared (possibly indefinite) matrix.
 *
 * Starts from beta = 0 with the most correlated variable active and follows
 * the equiangular direction gamma_A = (Sigma_nu)_A^{-1} s_A, where s_A holds
 * sgn(beta_j), or sgn(c_j) for a coefficient that has just entered at zero.
 * Each step moves by the smaller of the first zero crossing of an active
 * coefficient (drop) and the first inactive variable whose |c_j| catches up
 * with the active level (add). Ties are added one per zero-length step in
 * index order. The path ends when the correlations are exhausted, the active
 * block loses positive definiteness, lambda reaches the floor, or the step
 * budget runs out.
 */
inline SolutionPath ct_lars(const MatrixXd& cov_nu, const VectorXd& xty, const LarsOptions& opts = {})
{
    const Index p = xty.size();
    detail::require(cov_nu.rows() == p && cov_nu.cols() == p, ErrorKind::dimension_mismatch,
                    "ct_lars: covariance is " + std::to_string(cov_nu.rows()) + "x" +
                        std::to_string(cov_nu.cols()) + ", correlations have length " +
                        std::to_string(p));
    detail::require(opts.tol > 0.0, ErrorKind::invalid_argument, "ct_lars: tol must be positive");

    SolutionPath path;
    path.p = p;

    VectorXd beta = VectorXd::Zero(p);
    VectorXd c = xty;
    Index first = 0;
    const double lambda_max = p > 0 ? c.cwiseAbs().maxCoeff(&first) : 0.0;
    if (lambda_max <= opts.tol) {
        path.breakpoints.push_back({lambda_max, beta, {}, true});
        path.termination = Termination::correlation_exhausted;
        return path;
    }

    const double floor = opts.lambda_floor >= 0.0 ? opts.lambda_floor : 1e-8 * lambda_max;
    const int max_steps = opts.max_steps > 0 ? opts.max_steps : static_cast<int>(9 * p);
    // equality slack when deciding that an inactive |c_j| has reached the active level
    const double tie_tol = 1e-12 * lambda_max;

    std::vector<char> in_active(static_cast<std::size_t>(p), 0);
    IndexSet active{first};
    in_active[static_cast<std::size_t>(first)] = 1;
    double c_hat = lambda_max;
    std::optional<Index> just_dropped;

    path.breakpoints.push_back(
        {lambda_max, beta, active, detail::is_global(cov_nu, xty, beta, lambda_max, opts.eig_tol)});

    VectorXd direction = VectorXd::Zero(p);
    int steps = 0;
    for (;;) {
        if (c_hat <= opts.tol) {
            path.termination = Termination::correlation_exhausted;
            break;
        }
        if (steps >= max_steps) {
            path.termination = Termination::max_steps;
            break;
        }
        ++steps;

        const auto k = static_cast<Index>(active.size());
        VectorXd signs(k);
        for (Index i = 0; i < k; ++i) {
            const Index j = active[static_cast<std::size_t>(i)];
            signs(i) = beta(j) != 0.0 ? detail::sign(beta(j)) : detail::sign(c(j));
        }

        const MatrixXd block = cov_nu(active, active);
        Eigen::LLT<MatrixXd> llt(block);
        bool pd = llt.info() == Eigen::Success;
        if (pd) {
            const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
            if (min_pivot * min_pivot <= 1e-8) pd = min_eigenvalue(cov_nu, active) > opts.eig_tol;
        } else if (min_eigenvalue(cov_nu, active) > opts.eig_tol) {
            // Cholesky rejected a block the eigensolver calls PD; only reachable
            // through rounding at the boundary.
            path.termination = Termination::singular_active_submatrix;
            break;
        }
        if (!pd) {
            path.termination = Termination::eigenvalue_stop;
            break;
        }

        const VectorXd g = llt.solve(signs);
        direction.setZero();
        direction(active) = g;
        const VectorXd a = cov_nu(Eigen::all, active) * g;

        // zero crossing of an active coefficient
        double delta1 = std::numeric_limits<double>::infinity();
        Index drop = -1;
        for (Index i = 0; i < k; ++i) {
            const Index j = active[static_cast<std::size_t>(i)];
            if (beta(j) == 0.0 || g(i) == 0.0) continue;
            const double t = -beta(j) / g(i);
            if (t > 0.0 && t < delta1) {
                delta1 = t;
                drop = j;
            }
        }

        // an inactive variable reaching the active correlation level; a_i = s_i
        // on the active set because (Sigma_nu)_A gamma_A = s_A
        double delta2 = std::numeric_limits<double>::infinity();
        Index add = -1;
        for (Index j = 0; j < p; ++j) {
            if (in_active[static_cast<std::size_t>(j)]) continue;
            // a variable that just left sits at the active level on its old side;
            // it may only come back through the opposite sign
            const bool dropped = just_dropped && *just_dropped == j;
            if (!dropped && std::abs(c(j)) >= c_hat - tie_tol) {
                if (delta2 > 0.0) {
                    delta2 = 0.0;
                    add = j;
                }
                continue;
            }
            for (const double s : {1.0, -1.0}) {
                if (dropped && s == detail::sign(c(j))) continue;
                const double denom = 1.0 - s * a(j);
                if (denom <= 0.0) continue;
                const double t = (c_hat - s * c(j)) / denom;
                if (t > 0.0 && t < delta2) {
                    delta2 = t;
                    add = j;
                }
            }
        }

        const double delta_floor = c_hat - floor;
        double delta = std::min({delta1, delta2, delta_floor});
        const bool hit_floor = delta == delta_floor && delta < delta1 && delta < delta2;
        if (hit_floor) delta = std::max(delta, 0.0);

        if (delta > 0.0) {
            beta += delta * direction;
            c_hat -= delta;
        }

        if (hit_floor) {
            c_hat = floor;
        } else if (delta1 <= delta2) {
            beta(drop) = 0.0;
            in_active[static_cast<std::size_t>(drop)] = 0;
            active.erase(std::find(active.begin(), active.end(), drop));
            just_dropped = drop;
        } else {
            active.push_back(add);
            std::sort(active.begin(), active.end());
            in_active[static_cast<std::size_t>(add)] = 1;
            just_dropped.reset();
        }

        c = residual_correlations(beta, cov_nu, xty);
        if (active.empty()) {
            // every coefficient returned to zero; restart from the largest correlation
            Index j = 0;
            c.cwiseAbs().maxCoeff(&j);
            active.push_back(j);
            in_active[static_cast<std::size_t>(j)] = 1;
        }

        if (delta > 0.0 || hit_floor) {
            path.breakpoints.push_back(
                {c_hat, beta, active, detail::is_global(cov_nu, xty, beta, c_hat, opts.eig_tol)});
        } else {
            path.breakpoints.back().active = active;
        }

        if (hit_floor) {
            path.termination = Termination::lambda_floor;
            break;
        }
    }
    return path;
}

/// Default step budget 8 * min(n, p) + p for a design of the given shape.
inline int default_max_steps(Index n, Index p)
{
    return static_cast<int>(8 * std::min(n, p) + p);
}

/// Fits the path on a precomputed sample covariance.
inline SolutionPath ct_lars(const CovMatrix& sample_cov, const VectorXd& xty, const ThresholdRule& rule,
                            Index n, LarsOptions opts = {})
{
    if (opts.max_steps <= 0) opts.max_steps = default_max_steps(n, sample_cov.p());
    SolutionPath path = ct_lars(apply_threshold(sample_cov, rule).matrix(), xty, opts);
    path.rule = rule;
    return path;
}

inline SolutionPath ct_lars(const StandardizedDesign& design, const ThresholdRule& rule,
                            const LarsOptions& opts = {})
{
    return ct_lars(sample_covariance(design), design.xty(), rule, design.n(), opts);
}

/**
 * Coefficients at `lambda` by linear interpolation between breakpoints.
 *
 * lambda >= lambda_max gives zero; a stored breakpoint lambda returns the
 * stored beta unchanged. Below the final breakpoint this throws
 * LambdaBelowPath unless `clamp` is set, in which case the final beta is
 * returned.
 */
inline VectorXd coefficients_at(const SolutionPath& path, double lambda, bool clamp = false)
{
    const auto& bps = path.breakpoints;
    if (bps.empty() || lambda >= bps.front().lambda) return VectorXd::Zero(path.p);
    if (lambda < bps.back().lambda) {
        if (clamp) return bps.back().beta;
        throw Error(ErrorKind::lambda_below_path,
                    "lambda " + std::to_string(lambda) + " is below the last breakpoint " +
                        std::to_string(bps.back().lambda));
    }
    // first breakpoint with lambda_k <= lambda; lambdas are strictly decreasing
    auto it = std::lower_bound(bps.begin(), bps.end(), lambda,
                               [](const Breakpoint& b, double l) { return b.lambda > l; });
    if (it->lambda == lambda) return it->beta;
    const Breakpoint& hi = *(it - 1);
    const Breakpoint& lo = *it;
    const double t = (hi.lambda - lambda) / (hi.lambda - lo.lambda);
    VectorXd out(path.p);
    for (Index j = 0; j < path.p; ++j) {
        const double b0 = hi.beta(j);
        const double b1 = lo.beta(j);
        out(j) = b0 == b1 ? b0 : b0 + t * (b1 - b0);
    }
    return out;
}

struct KktReport {
    bool pass = false;
    double worst_violation = 0.0;
};

/**
 * Stationarity check of Sigma_nu beta - x^T y / n + lambda z = 0 with
 * z in the subdifferential of |beta|_1.
 */
inline KktReport kkt_check(const VectorXd& beta, double lambda, const MatrixXd& cov_nu,
                           const VectorXd& xty, double tol)
{
    detail::require(tol > 0.0, ErrorKind::invalid_argument, "kkt_check: tol must be positive");
    const VectorXd c = residual_correlations(beta, cov_nu, xty);
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double v = beta(j) != 0.0 ? std::abs(c(j) - lambda * detail::sign(beta(j)))
                                        : std::max(0.0, std::abs(c(j)) - lambda);
        worst = std::max(worst, v);
    }
    return {worst <= tol, worst};
}

inline KktReport kkt_check(const VectorXd& beta, double lambda, const CovMatrix& cov_nu,
                           const VectorXd& xty, double tol)
{
    return kkt_check(beta, lambda, cov_nu.matrix(), xty, tol);
}

} // namespace ctlasso
