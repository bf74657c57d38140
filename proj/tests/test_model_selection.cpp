#include <gtest/gtest.h>

#include <random>

#include <ctlasso/ctlasso.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ctlasso;

namespace {

CvCurve toy_curve()
{
    CvCurve c;
    c.lambdas = {1.0, 0.5, 0.1};
    c.mean_error = {8.9, 8.0, 9.5};
    c.sd_error = {1.0, 1.0, 1.0};
    c.folds = 5;
    return c;
}

} // namespace

TEST(SelectLambda, VariantsOnToyCurve)
{
    const auto c = toy_curve();
    EXPECT_DOUBLE_EQ(select_lambda(c, CvVariant::zero, 100, 4).lambda_hat, 0.5);
    EXPECT_DOUBLE_EQ(select_lambda(c, CvVariant::plus, 100, 4).lambda_hat, 1.0);
    EXPECT_DOUBLE_EQ(select_lambda(c, CvVariant::minus, 100, 4).lambda_hat, 0.5);
}

TEST(SelectLambda, MonotoneCurvePicksSmallestLambda)
{
    CvCurve c;
    c.lambdas = {1.0, 0.5, 0.25, 0.1};
    c.mean_error = {4, 3, 2, 1};
    c.sd_error = {0.1, 0.1, 0.1, 0.1};
    EXPECT_DOUBLE_EQ(select_lambda(c, CvVariant::zero, 10, 4).lambda_hat, 0.1);
    EXPECT_DOUBLE_EQ(select_lambda(c, CvVariant::minus, 10, 4).lambda_hat, 0.1);
}

TEST(SelectLambda, AutoThreshold)
{
    const auto c = toy_curve();
    EXPECT_EQ(select_lambda(c, CvVariant::automatic, 20, 100).variant_used, CvVariant::minus);
    EXPECT_EQ(select_lambda(c, CvVariant::automatic, 80, 100).variant_used, CvVariant::zero);
    EXPECT_EQ(select_lambda(c, CvVariant::automatic, 50, 100).variant_used, CvVariant::zero);
}

TEST(LambdaGrid, LogSpaced)
{
    const auto g = lambda_grid(2.0, 100, 1e-3);
    ASSERT_EQ(g.size(), 100u);
    EXPECT_DOUBLE_EQ(g.front(), 2.0);
    EXPECT_NEAR(g.back(), 2e-3, 1e-15);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
}

TEST(FoldAssignment, BalancedAndSeeded)
{
    const auto f = fold_assignment(23, 5, 9);
    std::vector<int> counts(5, 0);
    for (int v : f) ++counts[static_cast<std::size_t>(v)];
    for (int c : counts) EXPECT_GE(c, 4);
    EXPECT_EQ(f, fold_assignment(23, 5, 9));
}

TEST(KfoldCv, NoiselessDataPrefersSmallestLambda)
{
    std::mt19937_64 rng(12);
    const MatrixXd x = oracle::gaussian(40, 2, rng);
    const VectorXd y = x * Eigen::Vector2d(1.5, -2.0);
    const auto d = standardize(x, y);
    const auto grid = lambda_grid(d.xty().cwiseAbs().maxCoeff(), 30, 1e-3);
    const auto curve = kfold_cv(d, EstimatorSpec::lasso(), grid, 5, 3);
    const auto best = std::min_element(curve.mean_error.begin(), curve.mean_error.end()) - curve.mean_error.begin();
    EXPECT_EQ(static_cast<std::size_t>(best), grid.size() - 1);
}

TEST(KfoldCv, DuplicatedHalvesGiveZeroSpread)
{
    std::mt19937_64 rng(13);
    const MatrixXd half = oracle::gaussian(10, 3, rng);
    const VectorXd yh = half * Eigen::Vector3d(1, 0, -1) + 0.3 * oracle::gaussian(10, 1, rng).col(0);
    MatrixXd x(20, 3);
    VectorXd y(20);
    x << half, half;
    y << yh, yh;
    const auto d = standardize(x, y);
    // fold k holds rows {copy one, copy two} of the same half-sample points
    std::vector<int> folds(20);
    for (int i = 0; i < 10; ++i) folds[static_cast<std::size_t>(i)] = i < 5 ? 0 : 1;
    for (int i = 10; i < 20; ++i) folds[static_cast<std::size_t>(i)] = i < 15 ? 1 : 0;
    const auto grid = lambda_grid(d.xty().cwiseAbs().maxCoeff(), 10, 1e-2);
    const auto curve = kfold_cv(d, {EstimatorSpec::lasso()}, {grid}, folds, 2).front();
    for (double sd : curve.sd_error) EXPECT_LT(sd, 1e-9);
}

TEST(KfoldCv, RowPermutationWithMatchingFoldsIsInvariant)
{
    const auto d = fixtures::random_design(30, 5, 14);
    const auto grid = lambda_grid(d.xty().cwiseAbs().maxCoeff(), 20, 1e-2);
    const auto folds = fold_assignment(30, 5, 77);
    const auto a = kfold_cv(d, {EstimatorSpec::lasso()}, {grid}, folds, 5).front();

    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(2);
    std::shuffle(perm.begin(), perm.end(), rng);
    StandardizedDesign pd = d;
    std::vector<int> pf(30);
    for (int i = 0; i < 30; ++i) {
        pd.x.row(i) = d.x.row(perm[static_cast<std::size_t>(i)]);
        pd.y(i) = d.y(perm[static_cast<std::size_t>(i)]);
        pf[static_cast<std::size_t>(i)] = folds[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    const auto b = kfold_cv(pd, {EstimatorSpec::lasso()}, {grid}, pf, 5).front();
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(a.mean_error[i], b.mean_error[i], 1e-10);
}

TEST(GridSearch, SinglePointGridEqualsComposition)
{
    const auto d = fixtures::random_design(40, 6, 15);
    const auto gs = grid_search_cv(d, {EstimatorSpec::lasso()}, 5, CvVariant::zero, 4, 50, 1e-3);
    const auto grid = lambda_grid(d.xty().cwiseAbs().maxCoeff(), 50, 1e-3);
    const auto curve = kfold_cv(d, EstimatorSpec::lasso(), grid, 5, 4);
    const auto sel = select_lambda(curve, CvVariant::zero, d.n(), d.p());
    EXPECT_EQ(gs.selection.lambda_hat, sel.lambda_hat);
    EXPECT_EQ(gs.selection.min_error, sel.min_error);
}

TEST(GridSearch, SupersetGridNeverWorse)
{
    const auto d = fixtures::random_design(40, 8, 16);
    const auto lasso = grid_search_cv(d, {EstimatorSpec::lasso()}, 5, CvVariant::zero, 5);
    const auto soft = grid_search_cv(d, make_family("ct-soft").grid, 5, CvVariant::zero, 5);
    EXPECT_LE(soft.selection.selected_error, lasso.selection.selected_error + 1e-12);
    const auto again = grid_search_cv(d, make_family("ct-soft").grid, 5, CvVariant::zero, 5);
    EXPECT_EQ(again.selection.lambda_hat, soft.selection.lambda_hat);
    EXPECT_EQ(again.selection.spec, soft.selection.spec);
}

TEST(BestPossible, FindsExactSupport)
{
    // orthogonal-ish easy instance: the true support appears on the path
    std::mt19937_64 rng(17);
    const MatrixXd x = oracle::gaussian(200, 5, rng);
    const VectorXd beta = (VectorXd(5) << 2, -2, 0, 0, 0).finished();
    const auto d = standardize(x, x * beta);
    const auto bp = best_possible_selection({ct_lars(d, ThresholdRule::identity())}, beta);
    EXPECT_DOUBLE_EQ(bp.g, 1.0);
    EXPECT_EQ(bp.selected, 2);
}

TEST(BestPossible, DegenerateTruthRejected)
{
    const auto d = fixtures::random_design(20, 4, 18);
    EXPECT_THROW(best_possible_selection({ct_lars(d, ThresholdRule::identity())}, VectorXd::Zero(4)), Error);
}

TEST(Sis, RanksByMarginalCorrelation)
{
    std::mt19937_64 rng(19);
    MatrixXd x = oracle::gaussian(50, 5, rng);
    const auto d = standardize(x, x.col(3));
    EXPECT_EQ(sis_screen(d, 1).front(), 3);
    IndexSet all = sis_screen(d, 5);
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, (IndexSet{0, 1, 2, 3, 4}));
}

namespace {

/// Validation MSE for one fold and lambda, built from loops and the sign-enumeration solver.
double refit_error(const StandardizedDesign& d, const std::vector<int>& folds, int f, double lam)
{
    std::vector<int> tr, va;
    for (int i = 0; i < static_cast<int>(folds.size()); ++i) (folds[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    const int p = static_cast<int>(d.p());
    MatrixXd xt(tr.size(), p);
    VectorXd yt(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        xt.row(static_cast<Index>(i)) = d.x.row(tr[i]);
        yt(static_cast<Index>(i)) = d.y(tr[i]);
    }
    std::vector<double> mean(static_cast<std::size_t>(p), 0.0), sd(static_cast<std::size_t>(p), 0.0);
    for (int j = 0; j < p; ++j) {
        for (Index i = 0; i < xt.rows(); ++i) mean[static_cast<std::size_t>(j)] += xt(i, j) / xt.rows();
        for (Index i = 0; i < xt.rows(); ++i)
            sd[static_cast<std::size_t>(j)] += std::pow(xt(i, j) - mean[static_cast<std::size_t>(j)], 2) / xt.rows();
        sd[static_cast<std::size_t>(j)] = std::sqrt(sd[static_cast<std::size_t>(j)]);
    }
    MatrixXd xs;
    VectorXd ys;
    oracle::naive_standardize(xt, yt, xs, ys);
    const double ybar = yt.mean();
    const auto beta = oracle::brute_force_lasso(oracle::naive_cov(xs), xs.transpose() * ys / xs.rows(), lam);
    double err = 0.0;
    for (int i : va) {
        double pred = ybar;
        for (int j = 0; j < p; ++j)
            pred += (*beta)(j) * (d.x(i, j) - mean[static_cast<std::size_t>(j)]) / sd[static_cast<std::size_t>(j)];
        err += std::pow(d.y(i) - pred, 2) / static_cast<double>(va.size());
    }
    return err;
}

} // namespace

TEST(KfoldCv, MatchesBruteForceRefitWithoutLeakage)
{
    std::mt19937_64 rng(21);
    MatrixXd x = oracle::gaussian(30, 3, rng);
    const VectorXd y = x * Eigen::Vector3d(1.0, -0.5, 0.0) + 0.4 * oracle::gaussian(30, 1, rng).col(0);
    std::vector<int> folds(30);
    for (int i = 0; i < 30; ++i) folds[static_cast<std::size_t>(i)] = i % 3;
    // fold 0 sees a shifted, stretched first column, so full-data scaling would differ from training scaling
    for (int i = 0; i < 30; i += 3) x(i, 0) = 3.0 * x(i, 0) + 4.0;
    const auto d = standardize(x, y);
    const auto grid = lambda_grid(d.xty().cwiseAbs().maxCoeff(), 8, 1e-2);
    const auto curve = kfold_cv(d, {EstimatorSpec::lasso()}, {grid}, folds, 3).front();
    for (std::size_t l = 0; l < grid.size(); ++l) {
        double mean = 0.0;
        for (int f = 0; f < 3; ++f) mean += refit_error(d, folds, f, grid[l]) / 3.0;
        EXPECT_NEAR(curve.mean_error[l], mean, 1e-8) << "lambda index " << l;
    }
}

TEST(SelectLambda, VariantOrderingOnRandomCurves)
{
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 2000; ++t) {
        CvCurve c;
        for (int i = 0; i < 12; ++i) {
            c.lambdas.push_back(std::pow(0.7, i));
            c.mean_error.push_back(u(rng));
            c.sd_error.push_back(0.2 * u(rng));
        }
        const double zero = select_lambda(c, CvVariant::zero, 10, 100).lambda_hat;
        EXPECT_LE(select_lambda(c, CvVariant::minus, 10, 100).lambda_hat, zero);
        EXPECT_GE(select_lambda(c, CvVariant::plus, 10, 100).lambda_hat, zero);
    }
}

TEST(BestPossible, UpperBoundsCrossValidatedChoice)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto design = presets::ex1(25);
        design.seed = seed;
        const auto data = gen_data(design, 0);
        const auto d = standardize(data.x, data.y);
        const auto fam = make_family("ct-soft");
        std::vector<SolutionPath> paths;
        for (const auto& spec : fam.grid) paths.push_back(fit_path(spec, d));
        const auto best = best_possible_selection(paths, design.beta_star);
        const auto cv = grid_search_cv(d, fam.grid, 5, CvVariant::automatic, seed);
        const VectorXd b = coefficients_at(fit_path(cv.selection.spec, d), cv.selection.lambda_hat, true);
        EXPECT_GE(best.g, selection_metrics(b, design.beta_star).g);
    }
}

TEST(Sis, AgreesWithFullSortOracle)
{
    const auto d = fixtures::random_design(40, 30, 23);
    const VectorXd r = d.xty();
    std::vector<std::pair<double, Index>> order;
    for (Index j = 0; j < r.size(); ++j) order.emplace_back(-std::abs(r(j)), j);
    std::sort(order.begin(), order.end());
    const auto got = sis_screen(d, 7);
    IndexSet expect;
    for (int i = 0; i < 7; ++i) expect.push_back(order[static_cast<std::size_t>(i)].second);
    EXPECT_EQ(got, expect);
}
