///
/// \file edmd.hpp
///
/// Extended DMD on an explicit dictionary: K = G^+ A with
/// G = Psi_X Psi_X^T / M and A = Psi_X Psi_Y^T / M.
///
#ifndef KOOPMAN_EDMD_HPP
#define KOOPMAN_EDMD_HPP

#include <koopman/dict.hpp>
#include <koopman/spectrum.hpp>

namespace koopman
{

struct EdmdModel
{
    Dictionary dictionary;
    RealMatrix K;
    RealMatrix G;
    RealMatrix A;
    Index rank = 0;
    EigPair spectrum;
    double residual = 0.0; // |Psi_Y^T - Psi_X^T K|_F on the training data
    KoopmanModes modes;
};

/// Eigenfunction values: row k, column j is w_{R,k}^T Psi(x_j).
inline ComplexMatrix edmd_eigenfunctions(const EdmdModel& m, const RealMatrix& x_query)
{
    const RealMatrix psi = m.dictionary.eval_features(x_query);
    return m.spectrum.right.transpose() * psi.cast<Complex>();
}

/// Least-squares Koopman modes of the full state, Xi = X conj(Psi_X^+ W_L).
inline KoopmanModes koopman_modes(const EdmdModel& m, const RealMatrix& x)
{
    const RealMatrix psi_x = m.dictionary.eval_features(x);
    const RealMatrix psi_pinv = pinv(psi_x, 1e-12);
    return regression_modes(x, psi_pinv, m.spectrum.left, edmd_eigenfunctions(m, x));
}

///
/// Fits the EDMD matrix from snapshot pairs (columns of X and Y). Singular
/// values of G below `rank_tol * max` are discarded before inversion. Modes
/// for the full-state observable are computed from X.
///
inline EdmdModel fit_edmd(const RealMatrix& x, const RealMatrix& y, const Dictionary& d,
                          double rank_tol = 1e-10)
{
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw InvalidArgument("fit_edmd: X and Y must have the same shape");
    if (x.cols() < 1)
        throw InvalidArgument("fit_edmd: need at least one snapshot pair");
    require_finite(x, "fit_edmd X");
    require_finite(y, "fit_edmd Y");

    const RealMatrix psi_x = d.eval_features(x);
    const RealMatrix psi_y = d.eval_features(y);
    const double inv_m     = 1.0 / static_cast<double>(x.cols());

    EdmdModel m{d, {}, {}, {}, 0, {}, 0.0, {}};
    m.G = inv_m * psi_x * psi_x.transpose();
    m.A = inv_m * psi_x * psi_y.transpose();
    if (m.G.norm() == 0.0)
        throw NumericalError("fit_edmd: all dictionary features vanish on the data");

    const SvdResult svd = svd_economy(m.G, rank_tol);
    m.rank              = svd.rank();
    m.K                 = pinv_truncated(m.G, m.rank) * m.A;
    m.residual          = (psi_y.transpose() - psi_x.transpose() * m.K).norm();
    m.spectrum          = general_eig_binormalized(m.K);
    m.modes             = koopman_modes(m, x);
    return m;
}

/// Modal prediction from x0 before taking the real part.
inline ComplexMatrix edmd_predict_complex(const EdmdModel& m, const RealVector& x0, Index steps)
{
    detail::require(x0.size() == m.dictionary.input_dim(), "edmd_predict: state dimension mismatch");
    detail::require(steps >= 0, "edmd_predict: steps must be non-negative");
    const ComplexVector phi0 = edmd_eigenfunctions(m, x0).col(0);
    return modal_rollout(m.modes.modes, m.spectrum.values, phi0, steps);
}

/// Column t is Re(sum_k xi_k mu_k^t phi_k(x0)).
inline RealMatrix edmd_predict(const EdmdModel& m, const RealVector& x0, Index steps)
{
    return edmd_predict_complex(m, x0, steps).real();
}

} // namespace koopman

#endif
