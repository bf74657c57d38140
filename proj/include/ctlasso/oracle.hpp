#pragma once

#include <cmath>
#include <string>

#include "covariance.hpp"
#include "error.hpp"

namespace ctlasso {

struct OracleOptions {
    int max_iters = 100000;
    double tol = 1e-10; // max coefficient change per sweep
};

/**
 * Cyclic coordinate descent for
 *   beta^T S beta - 2 beta^T r + 2 lambda |beta|_1
 * with S = cov_nu, r = x^T y / n. Shares no code with the LARS solver and is
 * meant for cross-checking it; only valid when S is positive semi-definite.
 */
inline VectorXd oracle_solve(const MatrixXd& cov_nu, const VectorXd& xty, double lambda,
                             const OracleOptions& opts = {})
{
    const Index p = xty.size();
    detail::require(cov_nu.rows() == p && cov_nu.cols() == p, ErrorKind::dimension_mismatch,
                    "oracle_solve dimension mismatch");
    for (Index j = 0; j < p; ++j) {
        if (!(cov_nu(j, j) > 0.0))
            throw Error(ErrorKind::indefinite_matrix,
                        "non-positive diagonal entry at " + std::to_string(j));
    }

    VectorXd beta = VectorXd::Zero(p);
    VectorXd c = xty; // r - S beta, kept in sync with beta
    for (int it = 0; it < opts.max_iters; ++it) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double s_jj = cov_nu(j, j);
            const double z = c(j) + s_jj * beta(j);
            double updated = 0.0;
            if (z > lambda) updated = (z - lambda) / s_jj;
            else if (z < -lambda) updated = (z + lambda) / s_jj;
            const double diff = updated - beta(j);
            if (diff != 0.0) {
                c -= diff * cov_nu.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(diff));
            }
        }
        if (!std::isfinite(max_change) || beta.cwiseAbs().maxCoeff() > 1e150)
            throw Error(ErrorKind::indefinite_matrix, "coordinate descent diverged");
        if (max_change < opts.tol) return beta;
        if (it % 64 == 63) c = xty - cov_nu * beta; // shed accumulated drift
    }
    throw Error(ErrorKind::not_converged,
                "coordinate descent did not converge in " + std::to_string(opts.max_iters) + " sweeps");
}

inline VectorXd oracle_solve(const StandardizedDesign& design, const ThresholdRule& rule, double lambda,
                             const OracleOptions& opts = {})
{
    return oracle_solve(apply_threshold(sample_covariance(design), rule).matrix(), design.xty(), lambda,
                        opts);
}

} // namespace ctlasso
