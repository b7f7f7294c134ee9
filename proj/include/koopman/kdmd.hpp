///
/// \file kdmd.hpp
///
/// Kernel DMD. With K_XX = V Sigma^2 V^T and [K_YX]_ij = k(y_i, x_j) the
/// reduced Koopman matrix is K_hat = Sigma^+ V^T K_YX V Sigma^+.
///
#ifndef KOOPMAN_KDMD_HPP
#define KOOPMAN_KDMD_HPP

#include <string>

#include <koopman/dict.hpp>
#include <koopman/spectrum.hpp>

namespace koopman
{

struct KdmdModel
{
    KernelSpec kernel;
    RealMatrix X_train; // n x M
    RealMatrix V;       // M x r
    RealVector Sigma;   // r, positive and non-increasing
    RealMatrix K_hat;   // r x r
    EigPair spectrum;
    Index rank = 0;
    std::string warning; // set when the requested rank was reduced

    Index snapshots() const { return X_train.cols(); }

    /// Sigma^+ V^T, mapping kernel columns to feature coordinates.
    RealMatrix feature_projector() const { return Sigma.cwiseInverse().asDiagonal() * V.transpose(); }
};

inline KdmdModel fit_kdmd(const RealMatrix& x, const RealMatrix& y, const KernelSpec& k, Index rank)
{
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw InvalidArgument("fit_kdmd: X and Y must have the same shape");
    if (x.cols() < 1)
        throw InvalidArgument("fit_kdmd: need at least one snapshot pair");
    if (rank < 1 || rank > x.cols())
        throw InvalidArgument("fit_kdmd: rank must lie in [1, M]");
    require_finite(x, "fit_kdmd X");
    require_finite(y, "fit_kdmd Y");

    const RealMatrix kxx = kernel_gram(k, x);
    const HermEig eig    = herm_eig(kxx);

    // Eigenvalues below 1e-12 of the largest are always dropped.
    const double cut = 1e-12 * eig.values(0);
    Index usable     = 0;
    while (usable < eig.values.size() && eig.values(usable) > cut && eig.values(usable) > 0.0)
        ++usable;
    if (usable == 0)
        throw NumericalError("fit_kdmd: kernel matrix has no positive eigenvalues");

    KdmdModel m;
    m.kernel  = k;
    m.X_train = x;
    m.rank    = std::min(rank, usable);
    if (m.rank < rank)
        m.warning = "requested rank " + std::to_string(rank) + " reduced to " + std::to_string(m.rank)
                    + " positive kernel eigenvalues";
    m.V     = eig.vectors.leftCols(m.rank);
    m.Sigma = eig.values.head(m.rank).cwiseSqrt();

    const RealMatrix kyx  = kernel_matrix(k, y, x);
    const RealMatrix proj = m.feature_projector();
    m.K_hat               = proj * kyx * proj.transpose();
    m.spectrum            = general_eig_binormalized(m.K_hat);
    return m;
}

/// Row k, column j: phi_k(x_j) = k(x_j, X_train) V Sigma^+ w_k.
inline ComplexMatrix kdmd_eigenfunctions(const KdmdModel& m, const RealMatrix& x_query)
{
    if (x_query.rows() != m.X_train.rows())
        throw InvalidArgument("kdmd_eigenfunctions: state dimension mismatch");
    const RealMatrix kq = kernel_matrix(m.kernel, m.X_train, x_query);
    return m.spectrum.right.transpose() * (m.feature_projector() * kq).cast<Complex>();
}

/// Eigenfunction values at the training states, W_R^T Sigma V^T.
inline ComplexMatrix kdmd_training_eigenfunctions(const KdmdModel& m)
{
    return m.spectrum.right.transpose() * (m.Sigma.asDiagonal() * m.V.transpose()).cast<Complex>();
}

/// Xi = X conj(V Sigma^+ W_L) for the training states X.
inline KoopmanModes kdmd_modes(const KdmdModel& m, const RealMatrix& x)
{
    detail::require(x.cols() == m.snapshots(), "kdmd_modes: X must hold the training snapshots");
    const RealMatrix weights = m.feature_projector().transpose();
    return regression_modes(x, weights, m.spectrum.left, kdmd_training_eigenfunctions(m));
}

inline KoopmanSpectrum kdmd_spectrum(const KdmdModel& m, const RealMatrix& x, double dt)
{
    KoopmanSpectrum s;
    s.values = m.spectrum.values;
    s.right  = m.spectrum.right;
    s.left   = m.spectrum.left;
    s.modes  = kdmd_modes(m, x);
    s.dt     = dt;
    s.eigenfunctions = [m](const RealMatrix& q) { return kdmd_eigenfunctions(m, q); };
    return s;
}

} // namespace koopman

#endif
