#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "metrics.hpp"
#include "path_solver.hpp"

namespace ctlasso {

/// Validation-error curve over a decreasing lambda grid.
struct CvCurve {
    std::vector<double> lambdas;
    std::vector<double> mean_error;
    std::vector<double> sd_error; // standard error of the fold mean
    int folds = 0;
};

enum class CvVariant { minus, zero, plus, automatic };

inline std::string to_string(CvVariant v)
{
    switch (v) {
        case CvVariant::minus: return "CvMinus";
        case CvVariant::zero: return "CvZero";
        case CvVariant::plus: return "CvPlus";
        case CvVariant::automatic: return "Auto";
    }
    return "Auto";
}

inline CvVariant cv_variant_from_string(const std::string& s)
{
    if (s == "minus" || s == "CvMinus") return CvVariant::minus;
    if (s == "zero" || s == "CvZero") return CvVariant::zero;
    if (s == "plus" || s == "CvPlus") return CvVariant::plus;
    if (s == "auto" || s == "Auto") return CvVariant::automatic;
    throw Error(ErrorKind::parse_error, "unknown cv variant '" + s + "'");
}

struct CvSelection {
    double lambda_hat = 0.0;
    std::size_t lambda_index = 0;
    CvVariant variant_used = CvVariant::zero;
    EstimatorSpec spec;
    ThresholdRule rule_hat;
    double min_error = 0.0;
    std::size_t min_index = 0;
    double threshold_used = 0.0;
    double selected_error = 0.0;
};

/// `count` log-spaced points from lambda_max down to ratio * lambda_max.
inline std::vector<double> lambda_grid(double lambda_max, int count = 100, double ratio = 1e-3)
{
    detail::require(count >= 1 && lambda_max > 0.0 && ratio > 0.0 && ratio < 1.0,
                    ErrorKind::invalid_argument, "lambda_grid: bad arguments");
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double step = std::log(ratio) / (count - 1);
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(step * i);
    return grid;
}

/// Shuffled round-robin fold labels in [0, k).
inline std::vector<int> fold_assignment(Index n, int k, std::uint64_t seed)
{
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i)
        folds[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    return folds;
}

namespace detail {

inline IndexSet rows_where(const std::vector<int>& folds, int fold, bool equal)
{
    IndexSet rows;
    for (std::size_t i = 0; i < folds.size(); ++i)
        if ((folds[i] == fold) == equal) rows.push_back(static_cast<Index>(i));
    return rows;
}

} // namespace detail

/**
 * K-fold validation curves for several estimators sharing the same folds.
 *
 * Each training portion is re-standardized and the held-out rows are mapped
 * with the training means and scales. Errors are mean squared prediction
 * errors in response units. A grid lambda below where a fold's path ended
 * has no solution; its mean error is +inf so selection never lands there.
 */
inline std::vector<CvCurve> kfold_cv(const StandardizedDesign& design, const std::vector<EstimatorSpec>& specs,
                                     const std::vector<std::vector<double>>& lambdas,
                                     const std::vector<int>& folds, int k, const LarsOptions& opts = {})
{
    detail::require(k >= 2, ErrorKind::invalid_argument, "kfold_cv: k must be >= 2");
    detail::require(design.n() >= 2 * k, ErrorKind::too_few_samples,
                    "kfold_cv: need n >= 2k (n=" + std::to_string(design.n()) + ", k=" + std::to_string(k) + ")");
    detail::require(specs.size() == lambdas.size(), ErrorKind::dimension_mismatch,
                    "kfold_cv: one lambda grid per estimator");
    detail::require(static_cast<Index>(folds.size()) == design.n(), ErrorKind::dimension_mismatch,
                    "kfold_cv: fold map length");
    for (const auto& grid : lambdas) {
        detail::require(!grid.empty(), ErrorKind::invalid_argument, "kfold_cv: empty lambda grid");
        for (std::size_t i = 1; i < grid.size(); ++i)
            detail::require(grid[i] < grid[i - 1], ErrorKind::invalid_argument,
                            "kfold_cv: lambda grid must be strictly decreasing");
    }

    // errors[spec][fold][lambda]
    std::vector<std::vector<std::vector<double>>> errors(specs.size(),
                                                         std::vector<std::vector<double>>(static_cast<std::size_t>(k)));
    for (int f = 0; f < k; ++f) {
        const IndexSet train = detail::rows_where(folds, f, false);
        const IndexSet valid = detail::rows_where(folds, f, true);
        const StandardizedDesign tr = standardize(design.x(train, Eigen::all), design.y(train));
        const MatrixXd x_valid = tr.transform(design.x(valid, Eigen::all));
        const VectorXd y_valid = design.y(valid);
        const CovMatrix s_train = sample_covariance(tr);
        const VectorXd r_train = tr.xty();

        for (std::size_t m = 0; m < specs.size(); ++m) {
            const SolutionPath path = fit_path(specs[m], s_train, r_train, tr.n(), opts);
            auto& out = errors[m][static_cast<std::size_t>(f)];
            out.reserve(lambdas[m].size());
            for (double lam : lambdas[m]) {
                if (lam < path.lambda_min()) {
                    out.push_back(std::numeric_limits<double>::infinity());
                    continue;
                }
                const VectorXd beta = coefficients_at(path, lam);
                const VectorXd resid = y_valid.array() - tr.y_mean - (x_valid * beta).array();
                out.push_back(resid.squaredNorm() / static_cast<double>(resid.size()));
            }
        }
    }

    std::vector<CvCurve> curves(specs.size());
    for (std::size_t m = 0; m < specs.size(); ++m) {
        CvCurve& cv = curves[m];
        cv.lambdas = lambdas[m];
        cv.folds = k;
        for (std::size_t l = 0; l < lambdas[m].size(); ++l) {
            double sum = 0.0;
            bool finite = true;
            for (int f = 0; f < k; ++f) {
                const double e = errors[m][static_cast<std::size_t>(f)][l];
                finite = finite && std::isfinite(e);
                sum += e;
            }
            if (!finite) {
                cv.mean_error.push_back(std::numeric_limits<double>::infinity());
                cv.sd_error.push_back(std::numeric_limits<double>::infinity());
                continue;
            }
            const double mean = sum / k;
            double ss = 0.0;
            for (int f = 0; f < k; ++f) {
                const double d = errors[m][static_cast<std::size_t>(f)][l] - mean;
                ss += d * d;
            }
            cv.mean_error.push_back(mean);
            cv.sd_error.push_back(std::sqrt(ss / (k - 1)) / std::sqrt(static_cast<double>(k)));
        }
    }
    return curves;
}

inline CvCurve kfold_cv(const StandardizedDesign& design, const EstimatorSpec& spec,
                        const std::vector<double>& lambdas, int k, std::uint64_t seed,
                        const LarsOptions& opts = {})
{
    detail::require(k >= 2, ErrorKind::invalid_argument, "kfold_cv: k must be >= 2");
    return kfold_cv(design, {spec}, {lambdas}, fold_assignment(design.n(), k, seed), k, opts).front();
}

/**
 * Picks lambda from a validation curve.
 *
 * CvZero takes the minimizer. CvMinus moves to the smallest lambda at or
 * below it whose error stays within one standard error of the minimum;
 * CvPlus moves to the largest such lambda at or above it. Auto is CvMinus
 * when n / sqrt(p) < 5 and CvZero otherwise.
 */
inline CvSelection select_lambda(const CvCurve& curve, CvVariant variant, Index n, Index p)
{
    detail::require(!curve.lambdas.empty() && curve.mean_error.size() == curve.lambdas.size() &&
                        curve.sd_error.size() == curve.lambdas.size(),
                    ErrorKind::invalid_argument, "select_lambda: malformed curve");
    if (variant == CvVariant::automatic) {
        variant = static_cast<double>(n) / std::sqrt(static_cast<double>(p)) < 5.0 ? CvVariant::minus
                                                                                 : CvVariant::zero;
    }

    std::size_t best = curve.lambdas.size();
    for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
        if (!std::isfinite(curve.mean_error[i])) continue;
        if (best == curve.lambdas.size() || curve.mean_error[i] < curve.mean_error[best]) best = i;
    }
    detail::require(best < curve.lambdas.size(), ErrorKind::invalid_argument,
                    "select_lambda: no finite validation error on the grid");

    CvSelection sel;
    sel.variant_used = variant;
    sel.min_error = curve.mean_error[best];
    sel.min_index = best;
    sel.threshold_used = curve.mean_error[best] + curve.sd_error[best];

    std::size_t chosen = best;
    if (variant == CvVariant::minus) {
        for (std::size_t i = best; i < curve.lambdas.size(); ++i)
            if (curve.mean_error[i] <= sel.threshold_used) chosen = i;
    } else if (variant == CvVariant::plus) {
        for (std::size_t i = best + 1; i-- > 0;)
            if (curve.mean_error[i] <= sel.threshold_used) chosen = i;
    }
    sel.lambda_index = chosen;
    sel.lambda_hat = curve.lambdas[chosen];
    sel.selected_error = curve.mean_error[chosen];
    return sel;
}

struct GridSearchResult {
    CvSelection selection;
    std::vector<CvCurve> curves; // one per grid spec, grid order
};

/**
 * Cross-validates every spec in the grid on common folds and keeps the
 * (spec, lambda) with the smallest validation error at its selected point.
 * Ties go to larger nu, then larger lambda.
 */
inline GridSearchResult grid_search_cv(const StandardizedDesign& design, const std::vector<EstimatorSpec>& grid,
                                       int k, CvVariant variant, std::uint64_t seed, int n_lambdas = 100,
                                       double lambda_ratio = 1e-3, const LarsOptions& opts = {})
{
    detail::require(!grid.empty(), ErrorKind::invalid_argument, "grid_search_cv: empty grid");
    const VectorXd r = design.xty();
    std::vector<std::vector<double>> lambdas;
    lambdas.reserve(grid.size());
    for (const auto& spec : grid) lambdas.push_back(lambda_grid(spec_lambda_max(spec, r), n_lambdas, lambda_ratio));

    GridSearchResult out;
    out.curves = kfold_cv(design, grid, lambdas, fold_assignment(design.n(), k, seed), k, opts);

    std::optional<CvSelection> best;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        CvSelection sel;
        try {
            sel = select_lambda(out.curves[m], variant, design.n(), design.p());
        } catch (const Error&) {
            continue; // no usable lambda for this spec
        }
        sel.spec = grid[m];
        sel.rule_hat = grid[m].effective_rule();
        if (!best) {
            best = sel;
            continue;
        }
        const bool better =
            sel.selected_error < best->selected_error ||
            (sel.selected_error == best->selected_error &&
             (sel.rule_hat.nu > best->rule_hat.nu ||
              (sel.rule_hat.nu == best->rule_hat.nu && sel.lambda_hat > best->lambda_hat)));
        if (better) best = sel;
    }
    detail::require(best.has_value(), ErrorKind::invalid_argument,
                    "grid_search_cv: no grid point produced a finite validation error");
    out.selection = *best;
    return out;
}

struct BestPossible {
    std::size_t path_index = 0;
    ThresholdRule rule;
    double lambda = 0.0;
    double g = 0.0;
    Index selected = 0;
    VectorXd beta;
};

/**
 * Ex-post-facto tuning: scans the support at every breakpoint and inside
 * every segment of every path and keeps the one with the largest G against
 * the true support, preferring fewer selected variables on ties.
 */
inline BestPossible best_possible_selection(const std::vector<SolutionPath>& paths, const VectorXd& truth)
{
    detail::require(!paths.empty(), ErrorKind::invalid_argument, "best_possible_selection: no paths");
    std::optional<BestPossible> best;
    auto consider = [&](std::size_t pi, double lambda, const VectorXd& beta) {
        const SelectionMetrics m = selection_metrics(beta, truth);
        const Index count = m.tp + m.fp;
        if (!best || m.g > best->g || (m.g == best->g && count < best->selected)) {
            best = BestPossible{pi, paths[pi].rule, lambda, m.g, count, beta};
        }
    };
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        const auto& bps = paths[pi].breakpoints;
        for (std::size_t b = 0; b < bps.size(); ++b) {
            consider(pi, bps[b].lambda, bps[b].beta);
            if (b + 1 < bps.size()) {
                const double mid = 0.5 * (bps[b].lambda + bps[b + 1].lambda);
                consider(pi, mid, coefficients_at(paths[pi], mid));
            }
        }
    }
    return *best;
}

/// Indices of the `keep` largest |x_j^T y / n|, ties to the smaller index.
inline IndexSet sis_screen(const StandardizedDesign& design, Index keep)
{
    detail::require(keep >= 1 && keep <= design.p(), ErrorKind::invalid_argument,
                    "sis_screen: keep must be in [1, p]");
    const VectorXd r = design.xty();
    IndexSet order(static_cast<std::size_t>(design.p()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(r(a)) > std::abs(r(b)); });
    order.resize(static_cast<std::size_t>(keep));
    return order;
}

} // namespace ctlasso
