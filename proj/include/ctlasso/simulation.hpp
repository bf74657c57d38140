#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "covariance.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "metrics.hpp"
#include "model_selection.hpp"
#include "parallel.hpp"
#include "path_solver.hpp"

namespace ctlasso {

enum class SigmaKind { identity, ar, constant, grouped };

/// Population covariance recipe.
struct SigmaSpec {
    SigmaKind kind = SigmaKind::identity;
    double rho = 0.0;

    static SigmaSpec identity() { return {}; }
    static SigmaSpec ar(double rho) { return {SigmaKind::ar, rho}; }
    static SigmaSpec constant(double rho) { return {SigmaKind::constant, rho}; }
    static SigmaSpec grouped() { return {SigmaKind::grouped, 0.0}; }
};

inline std::string to_string(const SigmaSpec& s)
{
    switch (s.kind) {
        case SigmaKind::identity: return "identity";
        case SigmaKind::ar: return "ar:" + std::to_string(s.rho);
        case SigmaKind::constant: return "constant:" + std::to_string(s.rho);
        case SigmaKind::grouped: return "grouped";
    }
    return "identity";
}

/// Parses "identity", "ar:<rho>", "constant:<rho>" or "grouped".
inline SigmaSpec sigma_spec_from_string(const std::string& text)
{
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    auto rho = [&]() -> double {
        if (colon == std::string::npos)
            throw Error(ErrorKind::parse_error, "sigma spec '" + text + "' needs a correlation, e.g. ar:0.5");
        try {
            std::size_t used = 0;
            const double v = std::stod(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorKind::parse_error, "bad correlation in sigma spec '" + text + "'");
        }
    };
    if (head == "identity") return SigmaSpec::identity();
    if (head == "ar") return SigmaSpec::ar(rho());
    if (head == "constant") return SigmaSpec::constant(rho());
    if (head == "grouped") return SigmaSpec::grouped();
    throw Error(ErrorKind::parse_error, "unknown sigma spec '" + text + "'");
}

// Grouped design: indices [0, 10) share correlation 0.15, [10, 15) share 0.95.
inline constexpr Index kGroupOneEnd = 10;
inline constexpr Index kGroupTwoEnd = 15;
inline constexpr double kGroupOneRho = 0.15;
inline constexpr double kGroupTwoRho = 0.95;

inline CovMatrix make_sigma(const SigmaSpec& spec, Index p)
{
    detail::require(p >= 2, ErrorKind::invalid_argument, "make_sigma: p must be >= 2");
    MatrixXd s = MatrixXd::Identity(p, p);
    switch (spec.kind) {
        case SigmaKind::identity:
            break;
        case SigmaKind::ar:
            if (std::abs(spec.rho) >= 1.0) throw Error(ErrorKind::invalid_rho, "AR correlation must satisfy |rho| < 1");
            for (Index i = 0; i < p; ++i)
                for (Index j = 0; j < p; ++j)
                    s(i, j) = std::pow(spec.rho, static_cast<double>(std::abs(i - j)));
            break;
        case SigmaKind::constant:
            if (std::abs(spec.rho) >= 1.0)
                throw Error(ErrorKind::invalid_rho, "constant correlation must satisfy |rho| < 1");
            if (spec.rho < -1.0 / static_cast<double>(p - 1))
                throw Error(ErrorKind::not_psd, "constant correlation below -1/(p-1) is not PSD");
            s.setConstant(spec.rho);
            s.diagonal().setOnes();
            break;
        case SigmaKind::grouped:
            detail::require(p >= kGroupTwoEnd, ErrorKind::invalid_argument,
                            "grouped covariance needs p >= 15");
            s.topLeftCorner(kGroupOneEnd, kGroupOneEnd).setConstant(kGroupOneRho);
            s.block(kGroupOneEnd, kGroupOneEnd, kGroupTwoEnd - kGroupOneEnd, kGroupTwoEnd - kGroupOneEnd)
                .setConstant(kGroupTwoRho);
            s.diagonal().setOnes();
            break;
    }
    return CovMatrix(std::move(s));
}

/// beta^T Sigma beta / sigma^2.
inline double snr(const VectorXd& beta_star, const CovMatrix& sigma_pop, double sigma_noise)
{
    detail::require(sigma_noise > 0.0, ErrorKind::invalid_argument, "snr: sigma_noise must be positive");
    return beta_star.dot(sigma_pop.matrix() * beta_star) / (sigma_noise * sigma_noise);
}

/// Full recipe for one simulated experiment.
struct SimulationDesign {
    std::string name = "custom";
    Index p = 0;
    Index n = 0;
    VectorXd beta_star;
    SigmaSpec sigma_spec;
    double sigma_noise = 1.0;
    int replications = 200;
    std::uint64_t seed = 0;
    // draw the grouped design from its latent-factor form instead of Cholesky
    bool latent_grouped = false;

    void validate() const
    {
        detail::require(p >= 2 && n >= 2, ErrorKind::invalid_argument, "simulation needs p >= 2 and n >= 2");
        detail::require(beta_star.size() == p, ErrorKind::dimension_mismatch, "beta_star length != p");
        detail::require(sigma_noise > 0.0, ErrorKind::invalid_argument, "sigma_noise must be positive");
        detail::require(replications >= 1, ErrorKind::invalid_argument, "replications must be >= 1");
    }
};

namespace presets {

/// p = 40, identity covariance, beta_j = 2 for j < 10, sigma = sqrt(40) (SNR 1).
inline SimulationDesign intro(Index n)
{
    SimulationDesign d;
    d.name = "intro";
    d.p = 40;
    d.n = n;
    d.beta_star = VectorXd::Zero(40);
    d.beta_star.head(10).setConstant(2.0);
    d.sigma_spec = SigmaSpec::identity();
    d.sigma_noise = std::sqrt(40.0);
    return d;
}

/// Autocorrelated: AR(0.5), beta = 3 on 1..5 and 1.5 on 11..15, sigma = 9.
inline SimulationDesign ex1(Index n)
{
    SimulationDesign d;
    d.name = "ex1";
    d.p = 100;
    d.n = n;
    d.beta_star = VectorXd::Zero(100);
    d.beta_star.segment(0, 5).setConstant(3.0);
    d.beta_star.segment(10, 5).setConstant(1.5);
    d.sigma_spec = SigmaSpec::ar(0.5);
    d.sigma_noise = 9.0;
    return d;
}

/// Constant covariance 0.95, beta = 3 on 11..20 and 1.5 on 31..40, sigma = 15.
inline SimulationDesign ex2(Index n)
{
    SimulationDesign d;
    d.name = "ex2";
    d.p = 100;
    d.n = n;
    d.beta_star = VectorXd::Zero(100);
    d.beta_star.segment(10, 10).setConstant(3.0);
    d.beta_star.segment(30, 10).setConstant(1.5);
    d.sigma_spec = SigmaSpec::constant(0.95);
    d.sigma_noise = 15.0;
    return d;
}

/// Grouped variables, beta = (3,3,2.5,2.5,2,2,1.5,1.5,1,1,0,...), sigma = 15.
inline SimulationDesign ex3(Index n)
{
    SimulationDesign d;
    d.name = "ex3";
    d.p = 100;
    d.n = n;
    d.beta_star = VectorXd::Zero(100);
    d.beta_star.head(10) << 3, 3, 2.5, 2.5, 2, 2, 1.5, 1.5, 1, 1;
    d.sigma_spec = SigmaSpec::grouped();
    d.sigma_noise = 15.0;
    return d;
}

inline SimulationDesign by_name(const std::string& name, Index n)
{
    if (name == "intro") return intro(n);
    if (name == "ex1") return ex1(n);
    if (name == "ex2") return ex2(n);
    if (name == "ex3") return ex3(n);
    throw Error(ErrorKind::parse_error, "unknown preset '" + name + "' (expected intro, ex1, ex2, ex3)");
}

} // namespace presets

struct SimulatedData {
    MatrixXd x;
    VectorXd y;
};

/// Lower Cholesky factor of the population covariance.
inline MatrixXd sigma_factor(const CovMatrix& sigma)
{
    Eigen::LLT<MatrixXd> llt(sigma.matrix());
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::cholesky_failure, "population covariance is not positive definite");
    return llt.matrixL();
}

/**
 * One replication: rows of X i.i.d. N(0, Sigma) and y = X beta* + sigma eps.
 * The random stream depends only on (seed, rep_index). `factor` may be passed
 * to reuse the Cholesky factor across replications.
 */
inline SimulatedData gen_data(const SimulationDesign& design, int rep_index,
                              const std::optional<MatrixXd>& factor = std::nullopt)
{
    design.validate();
    std::mt19937_64 rng(derive_seed(design.seed, static_cast<std::uint64_t>(rep_index)));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Index rows, Index cols) {
        MatrixXd z(rows, cols);
        // row-major fill keeps the stream layout independent of Eigen storage
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) z(i, j) = normal(rng);
        return z;
    };

    SimulatedData out;
    if (design.latent_grouped && design.sigma_spec.kind == SigmaKind::grouped) {
        // X_j = Z_1 + sqrt(17/3) e_j on group one, Z_2 + sqrt(1/19) e_j on group
        // two, e_j elsewhere; each column rescaled to unit variance so the law
        // matches the Cholesky route.
        const MatrixXd latent = draw(design.n, 2);
        out.x = draw(design.n, design.p);
        const double w1 = std::sqrt(17.0 / 3.0), w2 = std::sqrt(1.0 / 19.0);
        for (Index j = 0; j < design.p; ++j) {
            if (j < kGroupOneEnd)
                out.x.col(j) = (latent.col(0) + w1 * out.x.col(j)) / std::sqrt(1.0 + w1 * w1);
            else if (j < kGroupTwoEnd)
                out.x.col(j) = (latent.col(1) + w2 * out.x.col(j)) / std::sqrt(1.0 + w2 * w2);
        }
    } else {
        const MatrixXd l = factor ? *factor : sigma_factor(make_sigma(design.sigma_spec, design.p));
        out.x = draw(design.n, design.p) * l.transpose();
    }
    const MatrixXd eps = draw(design.n, 1);
    out.y = out.x * design.beta_star + design.sigma_noise * eps.col(0);
    return out;
}

enum class Tuning { best_possible, cross_validation };

inline std::string to_string(Tuning t)
{
    return t == Tuning::best_possible ? "best-possible" : "cross-validation";
}

struct CvOptions {
    int folds = 5;
    CvVariant variant = CvVariant::automatic;
    int n_lambdas = 100;
    double lambda_ratio = 1e-3;
};

struct ReplicationResult {
    std::string method;
    int replication = 0;
    SelectionMetrics metrics;
    double rpe = 0.0;
    Index selected_count = 0;
    EstimatorSpec spec;
    double lambda = 0.0;
    bool failed = false; // no usable tuning point (counted as the empty model)
};

struct MethodAggregate {
    std::string method;
    double median_g = 0.0;
    double median_rpe = 0.0;
    double median_tp = 0.0;
    double median_fp = 0.0;
    double median_sensitivity = 0.0;
    double median_specificity = 0.0;
    double se_median_g = 0.0;
    double se_median_rpe = 0.0;
    int replications = 0;
};

struct ExperimentResult {
    SimulationDesign design;
    Tuning tuning = Tuning::best_possible;
    std::vector<MethodAggregate> aggregates;          // one per method, input order
    std::vector<std::vector<ReplicationResult>> reps; // [method][replication]
};

struct ExperimentOptions {
    Tuning tuning = Tuning::best_possible;
    CvOptions cv;
    TuningGrids grids;
    int bootstrap_b = 500;
    LarsOptions lars;
};

namespace detail {

inline ReplicationResult score(const std::string& method, int rep, const VectorXd& beta_std,
                               const StandardizedDesign& sd, const SimulationDesign& design,
                               const CovMatrix& sigma_pop)
{
    ReplicationResult r;
    r.method = method;
    r.replication = rep;
    r.metrics = selection_metrics(beta_std, design.beta_star);
    r.selected_count = r.metrics.tp + r.metrics.fp;
    r.rpe = rpe(sd.raw_coefficients(beta_std), design.beta_star, sigma_pop, design.sigma_noise);
    return r;
}

} // namespace detail

/**
 * Runs every method on every replication and aggregates medians with
 * bootstrap standard errors. Replications run in parallel; each one draws
 * from its own derived stream, so results do not depend on scheduling.
 */
inline ExperimentResult run_experiment(const SimulationDesign& design, const std::vector<std::string>& methods,
                                       const ExperimentOptions& opts = {})
{
    design.validate();
    detail::require(!methods.empty(), ErrorKind::invalid_argument, "run_experiment: no methods");
    std::vector<MethodFamily> families;
    for (const auto& m : methods) families.push_back(make_family(m, opts.grids));

    const CovMatrix sigma_pop = make_sigma(design.sigma_spec, design.p);
    const MatrixXd factor = sigma_factor(sigma_pop);

    ExperimentResult result;
    result.design = design;
    result.tuning = opts.tuning;
    result.reps.assign(families.size(), std::vector<ReplicationResult>(static_cast<std::size_t>(design.replications)));

    parallel_for(static_cast<std::size_t>(design.replications), [&](std::size_t rep_idx) {
        const int rep = static_cast<int>(rep_idx);
        const SimulatedData data = gen_data(design, rep, factor);
        const StandardizedDesign sd = standardize(data.x, data.y);
        const CovMatrix s = sample_covariance(sd);
        const VectorXd r = sd.xty();

        for (std::size_t m = 0; m < families.size(); ++m) {
            const MethodFamily& fam = families[m];
            ReplicationResult out;
            if (opts.tuning == Tuning::best_possible) {
                std::vector<SolutionPath> paths;
                paths.reserve(fam.grid.size());
                for (const auto& spec : fam.grid) paths.push_back(fit_path(spec, s, r, sd.n(), opts.lars));
                const BestPossible best = best_possible_selection(paths, design.beta_star);
                out = detail::score(fam.name, rep, best.beta, sd, design, sigma_pop);
                out.spec = fam.grid[best.path_index];
                out.lambda = best.lambda;
            } else {
                const std::uint64_t cv_seed = derive_seed(design.seed, rep_idx, 1 + m);
                try {
                    const GridSearchResult gs = grid_search_cv(sd, fam.grid, opts.cv.folds, opts.cv.variant, cv_seed,
                                                               opts.cv.n_lambdas, opts.cv.lambda_ratio, opts.lars);
                    const SolutionPath path = fit_path(gs.selection.spec, s, r, sd.n(), opts.lars);
                    const VectorXd beta = coefficients_at(path, gs.selection.lambda_hat, true);
                    out = detail::score(fam.name, rep, beta, sd, design, sigma_pop);
                    out.spec = gs.selection.spec;
                    out.lambda = gs.selection.lambda_hat;
                } catch (const Error&) {
                    out = detail::score(fam.name, rep, VectorXd::Zero(design.p), sd, design, sigma_pop);
                    out.failed = true;
                }
            }
            result.reps[m][rep_idx] = std::move(out);
        }
    });

    for (std::size_t m = 0; m < families.size(); ++m) {
        const auto& reps = result.reps[m];
        auto collect = [&](auto field) {
            std::vector<double> v;
            v.reserve(reps.size());
            for (const auto& r : reps) v.push_back(field(r));
            return v;
        };
        const auto g = collect([](const ReplicationResult& r) { return r.metrics.g; });
        const auto rp = collect([](const ReplicationResult& r) { return r.rpe; });
        MethodAggregate agg;
        agg.method = families[m].name;
        agg.replications = design.replications;
        agg.median_g = median(g);
        agg.median_rpe = median(rp);
        agg.median_tp = median(collect([](const ReplicationResult& r) { return double(r.metrics.tp); }));
        agg.median_fp = median(collect([](const ReplicationResult& r) { return double(r.metrics.fp); }));
        agg.median_sensitivity = median(collect([](const ReplicationResult& r) { return r.metrics.sensitivity; }));
        agg.median_specificity = median(collect([](const ReplicationResult& r) { return r.metrics.specificity; }));
        agg.se_median_g = bootstrap_se_of_median(g, opts.bootstrap_b, derive_seed(design.seed, m, 1001));
        agg.se_median_rpe = bootstrap_se_of_median(rp, opts.bootstrap_b, derive_seed(design.seed, m, 1002));
        result.aggregates.push_back(agg);
    }
    return result;
}

} // namespace ctlasso
