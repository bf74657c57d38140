#pragma once

#include <random>

#include <ctlasso/ctlasso.hpp>

#include "oracles.hpp"

namespace fixtures {

/// Gaussian design with a sparse signal; seeded, small, well conditioned when n > p.
inline ctlasso::StandardizedDesign random_design(int n, int p, std::uint64_t seed, double noise = 0.5)
{
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd x = oracle::gaussian(n, p, rng);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < std::min(p, 3); ++j) beta(j) = (j % 2 ? -1.0 : 1.0) * (1.0 + j);
    const Eigen::VectorXd e = oracle::gaussian(n, 1, rng).col(0);
    return ctlasso::standardize(x, x * beta + noise * e);
}

} // namespace fixtures
