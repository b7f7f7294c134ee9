///
/// \file mkrecon.hpp
///
/// Partially linear multi-kernel regression x = C1 z + C2 Psi(z) with an l2
/// penalty gamma |C2|^2 on the nonlinear part only.
///
#ifndef KOOPMAN_MKRECON_HPP
#define KOOPMAN_MKRECON_HPP

#include <string>

#include <koopman/dict.hpp>

namespace koopman
{

struct MultiKernelModel
{
    RealMatrix Z_train; // d x M
    KernelSpec kernel;
    double gamma = 0.0;
    Index r1 = 0;
    Index r2 = 0;
    RealMatrix C1_hat;  // n x r1
    RealMatrix C2_hat;  // n x r2
    RealMatrix V1;      // M x r1
    RealVector Sigma1;  // r1
    RealMatrix V2;      // M x r2
    RealVector Sigma2;  // r2

    // Folded coefficients: x = L z + N k(Z_train, z).
    RealMatrix linear_map;    // n x d
    RealMatrix kernel_weights; // n x M
};

namespace detail
{

inline void truncate_positive(const HermEig& e, Index r, const char* what, RealMatrix& v, RealVector& s)
{
    const double cut = 1e-12 * std::max(e.values(0), 0.0);
    Index usable     = 0;
    while (usable < e.values.size() && e.values(usable) > cut && e.values(usable) > 0.0)
        ++usable;
    if (r > usable)
        throw InvalidArgument(std::string("fit_mkrecon: ") + what + " rank " + std::to_string(r)
                              + " exceeds the usable rank " + std::to_string(usable));
    v = e.vectors.leftCols(r);
    s = e.values.head(r).cwiseSqrt();
}

} // namespace detail

///
/// Closed-form fit. Z^T Z = V1 Sigma1^2 V1^T and Gram(Z) = V2 Sigma2^2 V2^T are
/// truncated to ranks r1 and r2, and the coefficients solve
///
///   [C1^T; C2^T] = diag(Sigma1, Sigma2)^{-1}
///                  [[I, V1^T V2], [V2^T V1, I + gamma Sigma2^{-2}]]^{-1}
///                  [V1^T X^T; V2^T X^T].
///
inline MultiKernelModel fit_mkrecon(const RealMatrix& z, const RealMatrix& x, const KernelSpec& k, double gamma,
                                    Index r1, Index r2)
{
    detail::require(z.cols() == x.cols(), "fit_mkrecon: Z and X must have the same number of columns");
    detail::require(gamma > 0.0, "fit_mkrecon: gamma must be positive");
    detail::require(r1 >= 1 && r1 <= z.rows(), "fit_mkrecon: r1 must lie in [1, d]");
    detail::require(r2 >= 1 && r2 <= z.cols(), "fit_mkrecon: r2 must lie in [1, M]");
    require_finite(z, "fit_mkrecon Z");
    require_finite(x, "fit_mkrecon X");

    MultiKernelModel m;
    m.Z_train = z;
    m.kernel  = k;
    m.gamma   = gamma;
    m.r1      = r1;
    m.r2      = r2;
    detail::truncate_positive(herm_eig(z.transpose() * z), r1, "linear part", m.V1, m.Sigma1);
    detail::truncate_positive(herm_eig(kernel_gram(k, z)), r2, "nonlinear part", m.V2, m.Sigma2);

    const Index n = r1 + r2;
    RealMatrix block(n, n);
    block.topLeftCorner(r1, r1).setIdentity();
    block.topRightCorner(r1, r2)    = m.V1.transpose() * m.V2;
    block.bottomLeftCorner(r2, r1)  = block.topRightCorner(r1, r2).transpose();
    block.bottomRightCorner(r2, r2) = RealMatrix::Identity(r2, r2);
    block.bottomRightCorner(r2, r2).diagonal() += gamma * m.Sigma2.array().square().inverse().matrix();

    const double cond = condition_number(block);
    if (!(cond <= 1e14))
        throw NumericalError("fit_mkrecon: block system is singular (condition " + std::to_string(cond)
                             + "); increase gamma");

    RealMatrix rhs(n, x.rows());
    rhs.topRows(r1)    = m.V1.transpose() * x.transpose();
    rhs.bottomRows(r2) = m.V2.transpose() * x.transpose();
    RealMatrix coef    = block.partialPivLu().solve(rhs);
    coef.topRows(r1)    = m.Sigma1.cwiseInverse().asDiagonal() * coef.topRows(r1);
    coef.bottomRows(r2) = m.Sigma2.cwiseInverse().asDiagonal() * coef.bottomRows(r2);

    m.C1_hat = coef.topRows(r1).transpose();
    m.C2_hat = coef.bottomRows(r2).transpose();
    m.linear_map     = m.C1_hat * m.Sigma1.cwiseInverse().asDiagonal() * m.V1.transpose() * z.transpose();
    m.kernel_weights = m.C2_hat * m.Sigma2.cwiseInverse().asDiagonal() * m.V2.transpose();
    return m;
}

/// x = C1 Sigma1^{-1} V1^T Z^T z + C2 Sigma2^{-1} V2^T k(Z_train, z).
inline RealMatrix mk_reconstruct(const MultiKernelModel& m, const RealMatrix& z_query)
{
    detail::require(z_query.rows() == m.Z_train.rows(), "mk_reconstruct: latent dimension mismatch");
    return m.linear_map * z_query + m.kernel_weights * kernel_matrix(m.kernel, m.Z_train, z_query);
}

/// J = |X^T - Z^T C1^T - Psi_Z^T C2^T|_F^2 + gamma |C2_hat|_F^2 on training data.
inline double mkrecon_objective(const MultiKernelModel& m, const RealMatrix& x)
{
    const RealMatrix fit = mk_reconstruct(m, m.Z_train);
    return (x - fit).squaredNorm() + m.gamma * m.C2_hat.squaredNorm();
}

} // namespace koopman

#endif
