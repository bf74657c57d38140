#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "covariance.hpp"
#include "error.hpp"

namespace ctlasso {

struct IrrepresentableIndex {
    IndexSet irrelevant;  // complement of the true support, ascending
    VectorXd entries;     // |Sigma_CS Sigma_SS^{-1} sgn(beta_S)|, one per irrelevant variable
    double max_entry = 0.0;
    double inf_norm = 0.0; // ||Sigma_CS Sigma_SS^{-1}||_inf, the sign-free bound
};

namespace detail {

inline IndexSet complement(const IndexSet& s, Index p)
{
    std::vector<char> in(static_cast<std::size_t>(p), 0);
    for (Index j : s) {
        require(j >= 0 && j < p, ErrorKind::invalid_argument, "support index out of range");
        require(!in[static_cast<std::size_t>(j)], ErrorKind::invalid_argument, "duplicate support index");
        in[static_cast<std::size_t>(j)] = 1;
    }
    IndexSet c;
    for (Index j = 0; j < p; ++j)
        if (!in[static_cast<std::size_t>(j)]) c.push_back(j);
    return c;
}

inline double inf_norm(const MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Inverse of the S block; throws SingularSS when it is numerically singular.
inline MatrixXd ss_inverse(const MatrixXd& ss)
{
    Eigen::FullPivLU<MatrixXd> lu(ss);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw Error(ErrorKind::singular_ss, "true-variable covariance block is singular");
    return lu.inverse();
}

} // namespace detail

/// |Sigma_CS Sigma_SS^{-1} signs| over the irrelevant variables.
inline IrrepresentableIndex irrepresentable_index(const CovMatrix& cov, const IndexSet& s_set, const VectorXd& signs)
{
    detail::require(!s_set.empty(), ErrorKind::invalid_argument, "true support must be non-empty");
    detail::require(signs.size() == static_cast<Index>(s_set.size()), ErrorKind::dimension_mismatch,
                    "one sign per true variable");
    IrrepresentableIndex out;
    out.irrelevant = detail::complement(s_set, cov.p());
    const MatrixXd inv = detail::ss_inverse(cov.submatrix(s_set, s_set));
    const MatrixXd m = cov.submatrix(out.irrelevant, s_set) * inv;
    out.entries = (m * signs).cwiseAbs();
    out.max_entry = out.entries.size() ? out.entries.maxCoeff() : 0.0;
    out.inf_norm = detail::inf_norm(m);
    return out;
}

struct SparsityDegrees {
    Index d_ss = 0;
    Index d_cs = 0;
};

/// Row-wise counts of nonzero covariances within S and from C into S.
inline SparsityDegrees sparsity_degrees(const CovMatrix& cov, const IndexSet& s_set, double zero_tol = 1e-14)
{
    detail::require(!s_set.empty() && static_cast<Index>(s_set.size()) < cov.p(), ErrorKind::invalid_argument,
                    "true support must be a non-empty proper subset");
    const IndexSet c_set = detail::complement(s_set, cov.p());
    auto row_max = [&](const IndexSet& rows) {
        Index best = 0;
        for (Index i : rows) {
            Index count = 0;
            for (Index j : s_set) count += std::abs(cov(i, j)) > zero_tol;
            best = std::max(best, count);
        }
        return best;
    };
    return {row_max(s_set), row_max(c_set)};
}

/// C * sqrt(log(s (p - s))) / sqrt(n).
inline double recommended_nu(Index n, Index p, Index s, double c = 1.0)
{
    detail::require(s >= 1 && s < p && n >= 1, ErrorKind::invalid_argument,
                    "recommended_nu needs 1 <= s < p and n >= 1");
    const double arg = std::log(static_cast<double>(s) * static_cast<double>(p - s));
    return c * std::sqrt(std::max(arg, 0.0)) / std::sqrt(static_cast<double>(n));
}

struct Lemma1Certificate {
    bool holds = false;
    bool nonsingular = false;
    bool irrep_bound = false;
    bool beta_min = false;
    // left-hand sides of the two displayed inequalities, for reporting
    double irrep_lhs = 0.0;
    double beta_min_lhs = 0.0;

    std::vector<std::string> which_failed() const
    {
        std::vector<std::string> out;
        if (!nonsingular) out.emplace_back("nonsingularity");
        if (nonsingular && !irrep_bound) out.emplace_back("irrep_bound");
        if (nonsingular && !beta_min) out.emplace_back("beta_min");
        return out;
    }
};

/// Largest |s(sigma_ij) - sigma_ij| the rule can produce: nu for the
/// thresholding operators, the realized deviation otherwise.
inline double threshold_deviation(const CovMatrix& raw, const CovMatrix& thresholded, const ThresholdRule& rule)
{
    switch (rule.kind) {
        case RuleKind::identity: return 0.0;
        case RuleKind::hard:
        case RuleKind::soft:
        case RuleKind::adaptive: return rule.nu;
        case RuleKind::elastic_net: return (raw.matrix() - thresholded.matrix()).cwiseAbs().maxCoeff();
    }
    return rule.nu;
}

/**
 * Finite-sample sign-recovery conditions for a fixed design and realized
 * noise: the thresholded S block is nonsingular,
 *   ||S_CS S_SS^{-1}||_inf (||X_S^T e/n||_inf + s nu rho_max + lambda)
 *       + s nu rho_max + ||X_C^T e/n||_inf <= lambda,
 * and
 *   ||S_SS^{-1}||_inf (||X_S^T e/n||_inf + s nu rho_max + lambda) < rho_min.
 * `beta_star` is on the design's standardized scale and y = X beta* + e.
 */
inline Lemma1Certificate lemma1_certificate(const StandardizedDesign& design, const VectorXd& eps,
                                            const VectorXd& beta_star, const ThresholdRule& rule, double lambda,
                                            double eig_tol = 1e-12)
{
    detail::require(eps.size() == design.n() && beta_star.size() == design.p(), ErrorKind::dimension_mismatch,
                    "lemma1_certificate: dimension mismatch");
    IndexSet s_set;
    for (Index j = 0; j < beta_star.size(); ++j)
        if (beta_star(j) != 0.0) s_set.push_back(j);
    detail::require(!s_set.empty(), ErrorKind::degenerate_truth, "lemma1_certificate: beta* has empty support");
    const IndexSet c_set = detail::complement(s_set, design.p());

    const CovMatrix raw = sample_covariance(design);
    const CovMatrix thr = apply_threshold(raw, rule);
    const double nu = threshold_deviation(raw, thr, rule);
    const VectorXd xte = design.x.transpose() * eps / static_cast<double>(design.n());
    const VectorXd abs_beta_s = beta_star(s_set).cwiseAbs();
    const double rho_max = abs_beta_s.maxCoeff();
    const double rho_min = abs_beta_s.minCoeff();
    const double s = static_cast<double>(s_set.size());

    Lemma1Certificate cert;
    const MatrixXd ss = thr.submatrix(s_set, s_set);
    cert.nonsingular = smallest_eigenvalue(ss) > eig_tol;
    if (!cert.nonsingular) return cert;

    const MatrixXd inv = ss.inverse();
    const double noise_s = xte(s_set).cwiseAbs().maxCoeff();
    const double noise_c = c_set.empty() ? 0.0 : xte(c_set).cwiseAbs().maxCoeff();
    const double bias = s * nu * rho_max;
    const double inner = noise_s + bias + lambda;
    const double irrep = c_set.empty() ? 0.0 : detail::inf_norm(thr.submatrix(c_set, s_set) * inv);

    cert.irrep_lhs = irrep * inner + bias + noise_c;
    cert.beta_min_lhs = detail::inf_norm(inv) * inner;
    cert.irrep_bound = cert.irrep_lhs <= lambda;
    cert.beta_min = cert.beta_min_lhs < rho_min;
    cert.holds = cert.nonsingular && cert.irrep_bound && cert.beta_min;
    return cert;
}

struct DiagnosticsReport {
    IrrepresentableIndex irrep;
    Index d_ss = 0;
    Index d_cs = 0;
    double lambda_min_ss = 0.0;
    double d_bar = 0.0; // ||Sigma_SS^{-1}||_inf
    std::optional<double> nu_recommended;
    std::optional<double> max_abs_beta;
    std::optional<double> min_abs_beta;
    std::optional<Lemma1Certificate> lemma1;
};

/// Irrepresentable index, sparsity degrees and eigenvalue summary for one covariance.
inline DiagnosticsReport diagnose(const CovMatrix& cov, const IndexSet& s_set, const VectorXd& signs,
                                  std::optional<Index> n = std::nullopt)
{
    DiagnosticsReport rep;
    rep.irrep = irrepresentable_index(cov, s_set, signs);
    const auto deg = sparsity_degrees(cov, s_set);
    rep.d_ss = deg.d_ss;
    rep.d_cs = deg.d_cs;
    rep.lambda_min_ss = min_eigenvalue(cov, s_set);
    rep.d_bar = detail::inf_norm(detail::ss_inverse(cov.submatrix(s_set, s_set)));
    if (n) rep.nu_recommended = recommended_nu(*n, cov.p(), static_cast<Index>(s_set.size()));
    return rep;
}

} // namespace ctlasso
