// Shared helpers for the test suites.
#pragma once

#include <cstdint>
#include <random>

#include <koopman/numkit.hpp>

namespace testing_support
{

using koopman::Index;
using koopman::RealMatrix;

inline RealMatrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    RealMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = g(rng);
    return m;
}

/// Random matrix rescaled so its spectral radius equals `radius`.
inline RealMatrix random_stable(Index n, std::uint64_t seed, double radius = 0.9)
{
    RealMatrix a = random_matrix(n, n, seed);
    Eigen::EigenSolver<RealMatrix> es(a, false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    return a * (radius / rho);
}

} // namespace testing_support
