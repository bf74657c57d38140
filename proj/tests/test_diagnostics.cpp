#include <gtest/gtest.h>

#include <ctlasso/ctlasso.hpp>

#include "oracles.hpp"

using namespace ctlasso;

namespace {

IndexSet first(Index s)
{
    IndexSet out(static_cast<std::size_t>(s));
    std::iota(out.begin(), out.end(), Index{0});
    return out;
}

} // namespace

TEST(Irrepresentable, IdentityIsZero)
{
    const auto r = irrepresentable_index(CovMatrix::identity(6), first(2), VectorXd::Ones(2));
    EXPECT_EQ(r.entries, VectorXd::Zero(4));
    EXPECT_EQ(r.max_entry, 0.0);
}

TEST(Irrepresentable, EquicorrelationClosedForm)
{
    const double rho = 0.95;
    const Index s = 20;
    const auto cov = make_sigma(SigmaSpec::constant(rho), 100);
    const auto r = irrepresentable_index(cov, first(s), VectorXd::Ones(s));
    const double closed = rho * s / (1.0 - rho + s * rho);
    EXPECT_NEAR(r.max_entry, closed, 1e-10);
    EXPECT_NEAR(closed, 19.0 / 19.05, 1e-15);

    // cross-check by an independent linear solve of Sigma_SS w = 1
    const MatrixXd ss = cov.submatrix(first(s), first(s));
    const VectorXd w = ss.fullPivHouseholderQr().solve(VectorXd::Ones(s));
    EXPECT_NEAR(r.max_entry, rho * w.sum(), 1e-10);
}

TEST(Irrepresentable, SingularBlockRejected)
{
    MatrixXd m = MatrixXd::Identity(3, 3);
    m(0, 1) = m(1, 0) = 1.0;
    try {
        irrepresentable_index(CovMatrix(m), {0, 1}, VectorXd::Ones(2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::singular_ss);
    }
}

TEST(SparsityDegrees, Structures)
{
    const auto id = sparsity_degrees(CovMatrix::identity(5), first(2));
    EXPECT_EQ(id.d_ss, 1);
    EXPECT_EQ(id.d_cs, 0);
    const auto c = sparsity_degrees(make_sigma(SigmaSpec::constant(0.95), 30), first(20));
    EXPECT_EQ(c.d_ss, 20);
    EXPECT_EQ(c.d_cs, 20);
    EXPECT_EQ(sparsity_degrees(make_sigma(SigmaSpec::ar(0.5), 20), first(10)).d_ss, 10);
}

TEST(RecommendedNu, UnitLogArgument)
{
    // s (p - s) = e is not reachable with integers; check the formula directly
    EXPECT_NEAR(recommended_nu(100, 100, 10, 1.0), std::sqrt(std::log(900.0)) / 10.0, 1e-15);
    EXPECT_NEAR(recommended_nu(4, 2, 1, 2.0), 0.0, 1e-15);
    EXPECT_THROW(recommended_nu(10, 5, 5), Error);
}

TEST(Lemma1, NoiselessOrthogonalHolds)
{
    // columns (1,1,-1,-1), (1,-1,1,-1), (1,-1,-1,1): orthonormal under divisor n
    MatrixXd x(4, 3);
    x << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
    StandardizedDesign d = standardize(x, VectorXd::Zero(4));
    const VectorXd beta = (VectorXd(3) << 2.0, 0.0, 0.0).finished();
    d.y = d.x * beta;
    const auto cert = lemma1_certificate(d, VectorXd::Zero(4), beta, ThresholdRule::identity(), 0.5);
    EXPECT_TRUE(cert.holds);
    EXPECT_NEAR(cert.irrep_lhs, 0.0, 1e-14);
    EXPECT_NEAR(cert.beta_min_lhs, 0.5, 1e-14);
}

TEST(Lemma1, DuplicatedTrueColumnsAreSingular)
{
    std::mt19937_64 rng(4);
    MatrixXd x = oracle::gaussian(20, 4, rng);
    x.col(1) = x.col(0);
    StandardizedDesign d = standardize(x, VectorXd::Zero(20));
    const VectorXd beta = (VectorXd(4) << 1.0, 1.0, 0.0, 0.0).finished();
    d.y = d.x * beta;
    const auto cert = lemma1_certificate(d, VectorXd::Zero(20), beta, ThresholdRule::identity(), 0.1);
    EXPECT_FALSE(cert.nonsingular);
    EXPECT_FALSE(cert.holds);
    EXPECT_EQ(cert.which_failed(), std::vector<std::string>{"nonsingularity"});
}

TEST(Diagnose, Report)
{
    const auto rep = diagnose(CovMatrix::identity(10), first(3), VectorXd::Ones(3), Index{50});
    EXPECT_EQ(rep.irrep.max_entry, 0.0);
    EXPECT_EQ(rep.d_ss, 1);
    EXPECT_EQ(rep.d_cs, 0);
    EXPECT_DOUBLE_EQ(rep.lambda_min_ss, 1.0);
    EXPECT_DOUBLE_EQ(rep.d_bar, 1.0);
    ASSERT_TRUE(rep.nu_recommended.has_value());
}

TEST(Irrepresentable, PermutingIrrelevantVariablesPermutesEntries)
{
    const auto cov = make_sigma(SigmaSpec::ar(0.6), 8);
    const VectorXd signs = (VectorXd(3) << 1, -1, 1).finished();
    const auto base = irrepresentable_index(cov, first(3), signs);
    // swap variables 4 and 7 (both irrelevant)
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
    perm.setIdentity();
    perm.applyTranspositionOnTheRight(4, 7);
    const CovMatrix swapped(perm.transpose() * cov.matrix() * perm);
    const auto moved = irrepresentable_index(swapped, first(3), signs);
    EXPECT_NEAR(moved.entries(1), base.entries(4), 1e-14);
    EXPECT_NEAR(moved.entries(4), base.entries(1), 1e-14);
    EXPECT_NEAR(moved.max_entry, base.max_entry, 1e-14);
}

TEST(RecommendedNu, Monotone)
{
    EXPECT_GT(recommended_nu(50, 100, 10), recommended_nu(100, 100, 10));
    EXPECT_LT(recommended_nu(50, 100, 5), recommended_nu(50, 100, 20));
}
