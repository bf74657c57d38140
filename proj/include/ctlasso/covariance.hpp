#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "error.hpp"

namespace ctlasso {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/**
 * Centered response and column-standardized predictors.
 *
 * Columns of `x` have mean zero and mean square one (divisor n), so the
 * sample covariance X^T X / n has a unit diagonal. The original-scale
 * metadata maps standardized coefficients back to raw units.
 */
struct StandardizedDesign {
    MatrixXd x;
    VectorXd y;
    VectorXd column_means;
    VectorXd column_scales;
    double y_mean = 0.0;

    Index n() const { return x.rows(); }
    Index p() const { return x.cols(); }

    /// X^T y / n, the marginal correlations r_j.
    VectorXd xty() const { return x.transpose() * y / static_cast<double>(n()); }

    /// Standardized coefficients to raw-unit slopes.
    VectorXd raw_coefficients(const VectorXd& beta) const
    {
        return beta.cwiseQuotient(column_scales);
    }

    double raw_intercept(const VectorXd& beta) const
    {
        return y_mean - raw_coefficients(beta).dot(column_means);
    }

    /// Applies this design's centering and scaling to new raw rows.
    MatrixXd transform(const MatrixXd& raw_x) const
    {
        MatrixXd out = raw_x.rowwise() - column_means.transpose();
        out.array().rowwise() /= column_scales.transpose().array();
        return out;
    }
};

/// Symmetric p x p covariance (or correlation) matrix.
class CovMatrix {
public:
    CovMatrix() = default;

    /// Takes ownership of `m`; the lower triangle is mirrored from the upper
    /// so the stored matrix is exactly symmetric.
    explicit CovMatrix(MatrixXd m) : m_(std::move(m))
    {
        detail::require(m_.rows() == m_.cols(), ErrorKind::dimension_mismatch,
                        "covariance matrix must be square");
        m_.triangularView<Eigen::StrictlyLower>() = m_.transpose();
    }

    static CovMatrix identity(Index p) { return CovMatrix(MatrixXd::Identity(p, p)); }

    Index p() const { return m_.rows(); }
    double operator()(Index i, Index j) const { return m_(i, j); }
    const MatrixXd& matrix() const { return m_; }

    MatrixXd submatrix(const IndexSet& rows, const IndexSet& cols) const
    {
        return m_(rows, cols);
    }

private:
    MatrixXd m_;
};

enum class RuleKind { identity, hard, soft, adaptive, elastic_net };

inline std::string to_string(RuleKind k)
{
    switch (k) {
        case RuleKind::identity: return "identity";
        case RuleKind::hard: return "hard";
        case RuleKind::soft: return "soft";
        case RuleKind::adaptive: return "adaptive";
        case RuleKind::elastic_net: return "elastic_net";
    }
    return "identity";
}

inline RuleKind rule_kind_from_string(const std::string& s)
{
    if (s == "identity") return RuleKind::identity;
    if (s == "hard") return RuleKind::hard;
    if (s == "soft") return RuleKind::soft;
    if (s == "adaptive") return RuleKind::adaptive;
    if (s == "elastic_net") return RuleKind::elastic_net;
    throw Error(ErrorKind::parse_error, "unknown threshold rule '" + s + "'");
}

/// Covariance-regularizing operator and its parameters.
struct ThresholdRule {
    RuleKind kind = RuleKind::identity;
    double nu = 0.0;      // threshold level, hard/soft/adaptive
    double gamma = 0.0;   // adaptive exponent
    double lambda2 = 0.0; // elastic-net ridge level

    static ThresholdRule identity() { return {}; }
    static ThresholdRule hard(double nu) { return checked({RuleKind::hard, nu, 0.0, 0.0}); }
    static ThresholdRule soft(double nu) { return checked({RuleKind::soft, nu, 0.0, 0.0}); }
    static ThresholdRule adaptive(double nu, double gamma)
    {
        return checked({RuleKind::adaptive, nu, gamma, 0.0});
    }
    static ThresholdRule elastic_net(double lambda2)
    {
        return checked({RuleKind::elastic_net, 0.0, 0.0, lambda2});
    }

    static ThresholdRule checked(ThresholdRule r)
    {
        detail::require(r.nu >= 0.0 && r.nu < 1.0, ErrorKind::invalid_argument,
                        "threshold nu must lie in [0, 1)");
        detail::require(r.gamma >= 0.0, ErrorKind::invalid_argument, "gamma must be >= 0");
        detail::require(r.lambda2 >= 0.0, ErrorKind::invalid_argument, "lambda2 must be >= 0");
        return r;
    }

    bool operator==(const ThresholdRule&) const = default;
};

/**
 * Scalar covariance operator applied to one off-diagonal entry.
 *
 * Hard, soft and adaptive satisfy s(v) = 0 for |v| <= nu, |s(v)| <= |v| and
 * |s(v) - v| <= nu. The elastic-net operator is (v + lambda2) / (1 + lambda2).
 */
namespace detail {

/// Shrunk magnitude m of |v| = a, nudged toward a until the computed
/// shrinkage a - m is at most nu; rounding in a - nu can exceed it by an ulp.
inline double limit_shrinkage(double a, double m, double nu)
{
    while (m > 0.0 && a - m > nu) m = std::nextafter(m, a);
    return m;
}

} // namespace detail

inline double threshold_value(double v, const ThresholdRule& rule)
{
    switch (rule.kind) {
        case RuleKind::identity:
            return v;
        case RuleKind::hard:
            return std::abs(v) > rule.nu ? v : 0.0;
        case RuleKind::soft: {
            const double a = std::abs(v);
            const double m = a - rule.nu;
            return m > 0.0 ? std::copysign(detail::limit_shrinkage(a, m, rule.nu), v) : 0.0;
        }
        case RuleKind::adaptive: {
            const double a = std::abs(v);
            if (a == 0.0) return 0.0;
            // nu^{gamma+1} |v|^{-gamma} == nu * (nu/|v|)^gamma
            const double m = a - rule.nu * std::pow(rule.nu / a, rule.gamma);
            return m > 0.0 ? std::copysign(detail::limit_shrinkage(a, m, rule.nu), v) : 0.0;
        }
        case RuleKind::elastic_net:
            return (v + rule.lambda2) / (1.0 + rule.lambda2);
    }
    return v;
}

/// Standardizes columns (divisor-n variance) and centers the response.
inline StandardizedDesign standardize(const MatrixXd& raw_x, const VectorXd& raw_y)
{
    const Index n = raw_x.rows();
    detail::require(raw_y.size() == n, ErrorKind::dimension_mismatch,
                    "response length " + std::to_string(raw_y.size()) + " != rows " +
                        std::to_string(n));
    detail::require(n >= 2, ErrorKind::too_few_samples, "need at least 2 samples");

    StandardizedDesign d;
    d.column_means = raw_x.colwise().mean().transpose();
    d.x = raw_x.rowwise() - d.column_means.transpose();
    d.column_scales.resize(raw_x.cols());
    for (Index j = 0; j < raw_x.cols(); ++j) {
        const double ms = d.x.col(j).squaredNorm() / static_cast<double>(n);
        const double scale = std::sqrt(ms);
        // relative to the column magnitude so that tiny units are still accepted
        const double mag = raw_x.col(j).cwiseAbs().maxCoeff();
        detail::require(scale > 1e-12 * mag,
                        ErrorKind::constant_column, "column " + std::to_string(j) + " is constant");
        d.column_scales(j) = scale;
        d.x.col(j) /= scale;
    }
    d.y_mean = raw_y.mean();
    d.y = raw_y.array() - d.y_mean;
    return d;
}

/// (1/n) X^T X. The diagonal is exactly 1 up to rounding.
inline CovMatrix sample_covariance(const StandardizedDesign& design)
{
    MatrixXd s = MatrixXd::Zero(design.p(), design.p());
    s.selfadjointView<Eigen::Upper>().rankUpdate(design.x.transpose(),
                                                 1.0 / static_cast<double>(design.n()));
    return CovMatrix(std::move(s));
}

/// Applies `rule` to every off-diagonal entry; the diagonal is copied through.
inline CovMatrix apply_threshold(const CovMatrix& cov, const ThresholdRule& rule)
{
    if (rule.kind == RuleKind::identity) return cov;
    const Index p = cov.p();
    MatrixXd out(p, p);
    for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < j; ++i) {
            out(i, j) = threshold_value(cov(i, j), rule);
        }
        out(j, j) = cov(j, j);
    }
    return CovMatrix(std::move(out));
}

/// Smallest eigenvalue of a symmetric matrix.
inline double smallest_eigenvalue(const MatrixXd& sym)
{
    if (sym.rows() == 0) throw Error(ErrorKind::empty_subset, "eigenvalue of an empty matrix");
    if (sym.rows() == 1) return sym(0, 0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// Smallest eigenvalue of the principal submatrix on `subset`.
inline double min_eigenvalue(const MatrixXd& m, const IndexSet& subset)
{
    if (subset.empty()) throw Error(ErrorKind::empty_subset, "min_eigenvalue of an empty subset");
    for (Index i : subset) {
        detail::require(i >= 0 && i < m.rows(), ErrorKind::invalid_argument,
                        "subset index out of range");
    }
    return smallest_eigenvalue(m(subset, subset));
}

inline double min_eigenvalue(const CovMatrix& cov, const IndexSet& subset)
{
    return min_eigenvalue(cov.matrix(), subset);
}

inline double min_eigenvalue(const CovMatrix& cov)
{
    IndexSet all(static_cast<std::size_t>(cov.p()));
    for (Index i = 0; i < cov.p(); ++i) all[static_cast<std::size_t>(i)] = i;
    return min_eigenvalue(cov, all);
}

/// Largest |sigma_ij| over i != j.
inline double max_abs_off_diagonal(const CovMatrix& cov)
{
    double best = 0.0;
    for (Index j = 0; j < cov.p(); ++j)
        for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(cov(i, j)));
    return best;
}

} // namespace ctlasso
