#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "covariance.hpp"
#include "error.hpp"

namespace ctlasso {

struct SelectionMetrics {
    Index tp = 0;
    Index fp = 0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double g = 0.0;
};

/// Support comparison by exact nonzero test; G = sqrt(sensitivity * specificity).
inline SelectionMetrics selection_metrics(const VectorXd& beta_hat, const VectorXd& beta_star)
{
    detail::require(beta_hat.size() == beta_star.size(), ErrorKind::dimension_mismatch,
                    "selection_metrics: length mismatch");
    Index s = 0;
    SelectionMetrics m;
    for (Index j = 0; j < beta_star.size(); ++j) {
        const bool truth = beta_star(j) != 0.0;
        const bool picked = beta_hat(j) != 0.0;
        s += truth;
        if (picked && truth) ++m.tp;
        if (picked && !truth) ++m.fp;
    }
    const Index p = beta_star.size();
    if (s == 0 || s == p)
        throw Error(ErrorKind::degenerate_truth, "true support must be a non-empty proper subset");
    m.sensitivity = static_cast<double>(m.tp) / static_cast<double>(s);
    m.specificity = 1.0 - static_cast<double>(m.fp) / static_cast<double>(p - s);
    m.g = std::sqrt(m.sensitivity * m.specificity);
    return m;
}

/// Relative prediction error (b - b*)^T Sigma (b - b*) / sigma^2.
inline double rpe(const VectorXd& beta_hat, const VectorXd& beta_star, const CovMatrix& sigma_pop,
                  double sigma_noise)
{
    detail::require(sigma_noise > 0.0, ErrorKind::invalid_argument, "rpe: sigma_noise must be positive");
    detail::require(beta_hat.size() == sigma_pop.p() && beta_star.size() == sigma_pop.p(),
                    ErrorKind::dimension_mismatch, "rpe: dimension mismatch");
    const VectorXd d = beta_hat - beta_star;
    return d.dot(sigma_pop.matrix() * d) / (sigma_noise * sigma_noise);
}

inline bool sign_agreement(const VectorXd& beta_hat, const VectorXd& beta_star)
{
    if (beta_hat.size() != beta_star.size()) return false;
    auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
    for (Index j = 0; j < beta_hat.size(); ++j)
        if (sgn(beta_hat(j)) != sgn(beta_star(j))) return false;
    return true;
}

/// Median; even lengths average the two middle order statistics.
inline double median(std::vector<double> values)
{
    detail::require(!values.empty(), ErrorKind::invalid_argument, "median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Standard deviation of the median over `b` bootstrap resamples.
inline double bootstrap_se_of_median(const std::vector<double>& values, int b, std::uint64_t seed)
{
    detail::require(!values.empty(), ErrorKind::invalid_argument, "bootstrap of an empty sample");
    detail::require(b >= 2, ErrorKind::invalid_argument, "bootstrap needs b >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> medians(static_cast<std::size_t>(b));
    std::vector<double> resample(values.size());
    for (auto& m : medians) {
        for (auto& v : resample) v = values[pick(rng)];
        m = median(resample);
    }
    double mean = 0.0;
    for (double m : medians) mean += m;
    mean /= static_cast<double>(b);
    double ss = 0.0;
    for (double m : medians) ss += (m - mean) * (m - mean);
    return std::sqrt(ss / static_cast<double>(b - 1));
}

} // namespace ctlasso
