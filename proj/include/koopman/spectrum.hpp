#ifndef KOOPMAN_SPECTRUM_HPP
#define KOOPMAN_SPECTRUM_HPP

#include <functional>

#include <koopman/numkit.hpp>

namespace koopman
{

/// Koopman modes for the full-state observable.
struct KoopmanModes
{
    ComplexMatrix modes;       // n x r
    bool pinv_fallback = false; // eigenfunction values at the data were rank deficient
};

///
/// Analysis output shared by every model: eigenvalues, bi-orthonormal
/// eigenvectors of the Koopman matrix, Koopman modes and an evaluator for the
/// eigenfunctions at arbitrary states (columns of the argument).
///
struct KoopmanSpectrum
{
    ComplexVector values;
    ComplexMatrix right;
    ComplexMatrix left;
    KoopmanModes modes;
    double dt = 1.0;
    std::function<ComplexMatrix(const RealMatrix&)> eigenfunctions;

    /// lambda = log(mu) / dt
    ComplexVector continuous() const
    {
        ComplexVector out(values.size());
        for (Index k = 0; k < values.size(); ++k)
            out(k) = std::log(values(k)) / dt;
        return out;
    }
};

///
/// Least-squares Koopman modes Xi minimizing |X - Xi Phi_X|_F, computed as
/// X conj(P W_L) where P maps eigenvector coordinates back to data weights
/// (P = Psi_X^+ for explicit dictionaries, V Sigma^+ for kernels). When Phi_X is
/// rank deficient the minimum-norm solution X Phi_X^+ is used instead.
///
inline KoopmanModes regression_modes(const RealMatrix& x, const RealMatrix& data_weights,
                                     const ComplexMatrix& left, const ComplexMatrix& phi_x)
{
    detail::require(x.cols() == data_weights.rows(), "koopman modes: snapshot count mismatch");
    detail::require(data_weights.cols() == left.rows(), "koopman modes: eigenvector dimension mismatch");
    KoopmanModes out;
    const Index r = phi_x.rows();
    if (numerical_rank(phi_x, 1e-10) < r)
    {
        out.modes         = x.cast<Complex>() * pinv_complex(phi_x, 1e-10);
        out.pinv_fallback = true;
    }
    else
    {
        out.modes = x.cast<Complex>() * (data_weights.cast<Complex>() * left).conjugate();
    }
    return out;
}

/// Column t is sum_k xi_k mu_k^t phi_k(x0).
inline ComplexMatrix modal_rollout(const ComplexMatrix& modes, const ComplexVector& values,
                                   const ComplexVector& phi0, Index steps)
{
    ComplexMatrix out(modes.rows(), steps + 1);
    ComplexVector coeff = phi0;
    for (Index t = 0; t <= steps; ++t)
    {
        out.col(t) = modes * coeff;
        coeff      = coeff.cwiseProduct(values);
    }
    return out;
}

} // namespace koopman

#endif
