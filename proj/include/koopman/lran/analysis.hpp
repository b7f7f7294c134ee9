///
/// \file lran/analysis.hpp
///
/// Spectral post-analysis of a trained LRAN and the invariant-manifold
/// parameterization of a conjugate eigenvalue pair.
///
#ifndef KOOPMAN_LRAN_ANALYSIS_HPP
#define KOOPMAN_LRAN_ANALYSIS_HPP

#include <koopman/lran/loss.hpp>
#include <koopman/spectrum.hpp>

namespace koopman::lran
{

///
/// Eigendecomposition of K. Eigenfunctions are w_R^T encode(x); Koopman modes
/// are regressed on `x_train` with the encoder as dictionary (may be empty, in
/// which case no modes are computed).
///
inline KoopmanSpectrum lran_spectrum(const LranModel& m, const RealMatrix& x_train, double dt)
{
    const EigPair eig = general_eig_binormalized(m.transition.K);
    KoopmanSpectrum s;
    s.values = eig.values;
    s.right  = eig.right;
    s.left   = eig.left;
    s.dt     = dt;
    if (x_train.cols() > 0)
    {
        const RealMatrix z = encode(m, x_train);
        s.modes = regression_modes(x_train, pinv(z, 1e-12), eig.left, eig.right.transpose() * z.cast<Complex>());
    }
    s.eigenfunctions = [m, right = eig.right](const RealMatrix& q) -> ComplexMatrix {
        return right.transpose() * encode(m, q).cast<Complex>();
    };
    return s;
}

namespace detail
{

inline void require_pair(const EigPair& eig, Index j)
{
    koopman::detail::require(j >= 0 && j < eig.values.size(), "manifold: eigenvalue index out of range");
    const Complex mu = eig.values(j);
    if (std::abs(mu.imag()) <= 1e-12 * std::max(1.0, std::abs(mu)))
        throw InvalidArgument("manifold: eigenvalue " + std::to_string(j) + " is real, not part of a conjugate pair");
}

} // namespace detail

///
/// Latent point of the pair subspace with coordinate alpha:
/// alpha conj(w_L) + conj(alpha) w_L = 2 Re(alpha) Re(w_L) + 2 Im(alpha) Im(w_L).
/// Its projection w_R^T z returns alpha.
///
inline RealVector manifold_latent(const EigPair& eig, Index j, Complex alpha)
{
    detail::require_pair(eig, j);
    const ComplexVector wl = eig.left.col(j);
    return 2.0 * alpha.real() * wl.real() + 2.0 * alpha.imag() * wl.imag();
}

/// States on the manifold: column k decodes alphas(k).
inline RealMatrix manifold_param(const LranModel& m, const EigPair& eig, Index j, const ComplexVector& alphas)
{
    RealMatrix z(m.latent_dim(), alphas.size());
    for (Index k = 0; k < alphas.size(); ++k)
        z.col(k) = manifold_latent(eig, j, alphas(k));
    return decode(m, z);
}

/// alpha = w_{R,j}^T encode(x) for each column x.
inline ComplexVector manifold_project(const LranModel& m, const EigPair& eig, Index j, const RealMatrix& x)
{
    detail::require_pair(eig, j);
    return (eig.right.col(j).transpose() * encode(m, x).cast<Complex>()).transpose();
}

/// Latent rollout of a single initial state: column t is decode((K^t)^T encode(x0)).
inline RealMatrix lran_predict(const LranModel& m, const RealVector& x0, Index steps)
{
    koopman::detail::require(steps >= 0, "lran_predict: steps must be non-negative");
    RealMatrix z(m.latent_dim(), steps + 1);
    z.col(0) = encode(m, x0);
    for (Index t = 1; t <= steps; ++t)
        z.col(t) = m.transition.K.transpose() * z.col(t - 1);
    return decode(m, z);
}

/// Batched rollout: entry t holds predictions for every column of x0 after t steps.
inline std::vector<RealMatrix> lran_rollout(const LranModel& m, const RealMatrix& x0, Index steps)
{
    koopman::detail::require(steps >= 0, "lran_rollout: steps must be non-negative");
    std::vector<RealMatrix> out;
    out.reserve(static_cast<std::size_t>(steps + 1));
    RealMatrix z = encode(m, x0);
    for (Index t = 0; t <= steps; ++t)
    {
        out.push_back(decode(m, z));
        z = m.transition.K.transpose() * z;
    }
    return out;
}

} // namespace koopman::lran

#endif
