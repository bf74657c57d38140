#include <gtest/gtest.h>

#include <random>

#include <ctlasso/ctlasso.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ctlasso;

TEST(ResidualCorrelations, Basics)
{
    const VectorXd r = VectorXd::LinSpaced(4, -1.0, 2.0);
    EXPECT_EQ(residual_correlations(VectorXd::Zero(4), MatrixXd::Identity(4, 4), r), r);
    EXPECT_LT(residual_correlations(r, MatrixXd::Identity(4, 4), r).cwiseAbs().maxCoeff(), 1e-15);

    std::mt19937_64 rng(1);
    const MatrixXd a = oracle::gaussian(5, 5, rng);
    const MatrixXd s = a + a.transpose();
    const VectorXd b = oracle::gaussian(5, 1, rng).col(0);
    const VectorXd x = oracle::gaussian(5, 1, rng).col(0);
    const VectorXd expect = x - oracle::naive_matvec(s.transpose(), b);
    EXPECT_LT((residual_correlations(b, s, x) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CtLars, PathInvariants)
{
    for (int seed = 0; seed < 10; ++seed) {
        const auto d = fixtures::random_design(30, 8, static_cast<std::uint64_t>(seed));
        const auto path = ct_lars(d, ThresholdRule::soft(0.1));
        ASSERT_FALSE(path.breakpoints.empty());
        EXPECT_DOUBLE_EQ(path.lambda_max(), d.xty().cwiseAbs().maxCoeff());
        EXPECT_EQ(path.breakpoints.front().beta, VectorXd::Zero(8));
        for (std::size_t k = 1; k < path.breakpoints.size(); ++k)
            EXPECT_LT(path.breakpoints[k].lambda, path.breakpoints[k - 1].lambda);
        for (const auto& bp : path.breakpoints) {
            for (Index j : detail::support(bp.beta))
                EXPECT_NE(std::find(bp.active.begin(), bp.active.end(), j), bp.active.end());
        }
    }
}

TEST(CtLars, MatchesSignEnumerationOracle)
{
    for (int seed = 0; seed < 12; ++seed) {
        const auto d = fixtures::random_design(20, 4, 100 + static_cast<std::uint64_t>(seed));
        const auto rule = seed % 2 ? ThresholdRule::soft(0.15) : ThresholdRule::identity();
        const MatrixXd s = apply_threshold(sample_covariance(d), rule).matrix();
        if (smallest_eigenvalue(s) <= 1e-6) continue;
        const auto path = ct_lars(d, rule);
        for (double frac : {0.9, 0.6, 0.35, 0.1, 0.02}) {
            const double lam = frac * path.lambda_max();
            if (lam < path.lambda_min()) continue;
            const auto exact = oracle::brute_force_lasso(s, d.xty(), lam);
            ASSERT_TRUE(exact.has_value());
            EXPECT_LT((coefficients_at(path, lam) - *exact).cwiseAbs().maxCoeff(), 1e-9)
                << "seed " << seed << " frac " << frac;
        }
    }
}

TEST(CtLars, CompleteThresholdingIsUst)
{
    const auto d = fixtures::random_design(15, 12, 8);
    const double nu = std::nextafter(max_abs_off_diagonal(sample_covariance(d)), 1.0);
    const auto path = ct_lars(d, ThresholdRule::soft(nu));
    const VectorXd r = d.xty();
    for (double frac : {0.95, 0.5, 0.2, 0.01}) {
        const double lam = frac * path.lambda_max();
        EXPECT_LT((coefficients_at(path, lam) - soft_threshold(r, lam)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(CtLars, EigenvalueStopWhenBlockLosesDefiniteness)
{
    // duplicated predictor: the active block becomes singular once both enter
    std::mt19937_64 rng(3);
    MatrixXd x = oracle::gaussian(20, 3, rng);
    x.col(2) = x.col(0);
    const VectorXd y = x.col(0) + 0.5 * x.col(1);
    const auto path = ct_lars(standardize(x, y), ThresholdRule::identity());
    for (const auto& bp : path.breakpoints) EXPECT_FALSE(bp.beta(0) != 0.0 && bp.beta(2) != 0.0);
    EXPECT_TRUE(path.termination == Termination::eigenvalue_stop ||
                path.termination == Termination::lambda_floor ||
                path.termination == Termination::correlation_exhausted);
}

TEST(CtLars, MaxStepsRespected)
{
    const auto d = fixtures::random_design(30, 10, 21);
    LarsOptions o;
    o.max_steps = 2;
    const auto path = ct_lars(d, ThresholdRule::identity(), o);
    EXPECT_EQ(path.termination, Termination::max_steps);
    EXPECT_LE(path.breakpoints.size(), 3u);
}

TEST(CtLars, ZeroResponseGivesSingleBreakpoint)
{
    StandardizedDesign d = fixtures::random_design(10, 3, 1);
    d.y.setZero();
    const auto path = ct_lars(d, ThresholdRule::identity());
    ASSERT_EQ(path.breakpoints.size(), 1u);
    EXPECT_EQ(path.breakpoints[0].beta, VectorXd::Zero(3));
}

TEST(CoefficientsAt, EndpointsAndInterpolation)
{
    const auto d = fixtures::random_design(40, 6, 12);
    const auto path = ct_lars(d, ThresholdRule::identity());
    EXPECT_EQ(coefficients_at(path, path.lambda_max() + 1.0), VectorXd::Zero(6));
    for (const auto& bp : path.breakpoints) EXPECT_EQ(coefficients_at(path, bp.lambda), bp.beta);

    const MatrixXd s = sample_covariance(d).matrix();
    for (std::size_t k = 0; k + 1 < path.breakpoints.size(); ++k) {
        const double mid = 0.5 * (path.breakpoints[k].lambda + path.breakpoints[k + 1].lambda);
        const VectorXd exact = oracle_solve(s, d.xty(), mid);
        EXPECT_LT((coefficients_at(path, mid) - exact).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(CoefficientsAt, BelowPathThrowsUnlessClamped)
{
    const auto d = fixtures::random_design(30, 5, 13);
    LarsOptions o;
    o.lambda_floor = 0.05 * d.xty().cwiseAbs().maxCoeff();
    const auto path = ct_lars(d, ThresholdRule::identity(), o);
    try {
        coefficients_at(path, 0.5 * path.lambda_min());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::lambda_below_path);
    }
    EXPECT_EQ(coefficients_at(path, 0.5 * path.lambda_min(), true), path.breakpoints.back().beta);
}

TEST(Kkt, ZeroVectorCases)
{
    const VectorXd r = (VectorXd(3) << 0.4, -0.2, 0.1).finished();
    const MatrixXd i3 = MatrixXd::Identity(3, 3);
    EXPECT_TRUE(kkt_check(VectorXd::Zero(3), 0.4, i3, r, 1e-12).pass);
    EXPECT_FALSE(kkt_check(VectorXd::Zero(3), 0.2, i3, r, 1e-8).pass);
}

TEST(Kkt, EveryBreakpointPasses)
{
    for (int seed = 0; seed < 20; ++seed) {
        const auto d = fixtures::random_design(25, 10, 500 + static_cast<std::uint64_t>(seed));
        for (const auto& rule : {ThresholdRule::identity(), ThresholdRule::soft(0.2), ThresholdRule::hard(0.1)}) {
            const MatrixXd s = apply_threshold(sample_covariance(d), rule).matrix();
            if (smallest_eigenvalue(s) <= 0.0) continue;
            const auto path = ct_lars(d, rule);
            for (const auto& bp : path.breakpoints)
                EXPECT_TRUE(kkt_check(bp.beta, bp.lambda, s, d.xty(), 1e-8).pass);
        }
    }
}

TEST(Oracle, SolvesOrthogonalCase)
{
    const VectorXd r = (VectorXd(2) << 0.9, 0.1).finished();
    const VectorXd b = oracle_solve(MatrixXd::Identity(2, 2), r, 0.5);
    EXPECT_NEAR(b(0), 0.4, 1e-12);
    EXPECT_EQ(b(1), 0.0);
}

TEST(Oracle, RejectsNonPositiveDiagonal)
{
    MatrixXd s = MatrixXd::Identity(2, 2);
    s(1, 1) = 0.0;
    try {
        oracle_solve(s, VectorXd::Ones(2), 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::indefinite_matrix);
    }
}

TEST(CtLars, IndefiniteMatrixEndsWithEigenvalueStop)
{
    // tridiagonal with 0.95 off-diagonals: every 2x2 block is PD, the full matrix is not
    MatrixXd s = MatrixXd::Identity(3, 3);
    s(0, 1) = s(1, 0) = s(1, 2) = s(2, 1) = 0.95;
    ASSERT_LT(smallest_eigenvalue(s), 0.0);
    const VectorXd r = (VectorXd(3) << 1.0, 0.99, 0.98).finished();
    const auto path = ct_lars(s, r);
    EXPECT_EQ(path.termination, Termination::eigenvalue_stop);
    for (const auto& bp : path.breakpoints) EXPECT_TRUE(kkt_check(bp.beta, bp.lambda, s, r, 1e-8).pass);
}
