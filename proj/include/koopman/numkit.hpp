///
/// \file numkit.hpp
///
/// Dense linear algebra used throughout the library: economy SVD, symmetric
/// eigendecomposition, general eigendecomposition with bi-orthonormal left and
/// right eigenvectors, truncated pseudoinverses and least squares.
///
/// The decompositions themselves are delegated to Eigen; the functions here pin
/// down ordering, truncation and normalization conventions so that callers get
/// deterministic results.
///
#ifndef KOOPMAN_NUMKIT_HPP
#define KOOPMAN_NUMKIT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <koopman/error.hpp>

namespace koopman
{

using Index         = Eigen::Index;
using Complex       = std::complex<double>;
using RealMatrix    = Eigen::MatrixXd;
using RealVector    = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Throws InvalidArgument when any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what)
{
    if (!a.allFinite())
        throw InvalidArgument(std::string(what) + ": non-finite entries");
}

/// Economy SVD A = U diag(S) V^T restricted to the retained rank.
struct SvdResult
{
    RealMatrix U;
    RealVector S;
    RealMatrix V;

    Index rank() const { return S.size(); }
};

/// Eigenvalues with right eigenvectors (columns of `right`) and left
/// eigenvectors normalized so that left^* right = I.
struct EigPair
{
    ComplexVector values;
    ComplexMatrix right;
    ComplexMatrix left;

    Index size() const { return values.size(); }
};

struct HermEig
{
    RealVector values; // descending
    RealMatrix vectors;
};

namespace detail
{

// Flip the sign of each column so its largest-magnitude entry is positive
// (first such entry on ties).
inline void canonicalize_signs(RealMatrix& v)
{
    for (Index j = 0; j < v.cols(); ++j)
    {
        Index imax  = 0;
        double best = -1.0;
        for (Index i = 0; i < v.rows(); ++i)
        {
            const double a = std::abs(v(i, j));
            if (a > best * (1.0 + 1e-12))
            {
                best = a;
                imax = i;
            }
        }
        if (v(imax, j) < 0.0)
            v.col(j) = -v.col(j);
    }
}

// Rotate each complex column so its largest-magnitude entry is real positive.
inline void canonicalize_phases(ComplexMatrix& v)
{
    for (Index j = 0; j < v.cols(); ++j)
    {
        Index imax  = 0;
        double best = -1.0;
        for (Index i = 0; i < v.rows(); ++i)
        {
            const double a = std::abs(v(i, j));
            if (a > best * (1.0 + 1e-12))
            {
                best = a;
                imax = i;
            }
        }
        if (best > 0.0)
            v.col(j) *= std::conj(v(imax, j)) / best;
    }
}

inline bool eig_order(const Complex& a, const Complex& b)
{
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb)
        return ma > mb;
    if (a.real() != b.real())
        return a.real() > b.real();
    return a.imag() > b.imag();
}

} // namespace detail

///
/// Economy SVD. Singular values below `rank_tol * S_max` are dropped; with
/// `rank_tol == 0` every singular value is kept.
///
inline SvdResult svd_economy(const RealMatrix& a, double rank_tol = 0.0)
{
    if (a.size() == 0)
        throw InvalidArgument("svd_economy: empty input");
    require_finite(a, "svd_economy");

    Eigen::BDCSVD<RealMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    Index r             = s.size();
    if (rank_tol > 0.0)
    {
        const double cut = rank_tol * s(0);
        r                = 0;
        while (r < s.size() && s(r) > cut)
            ++r;
    }
    return {svd.matrixU().leftCols(r), s.head(r), svd.matrixV().leftCols(r)};
}

///
/// Symmetric eigendecomposition with eigenvalues in descending order and a
/// deterministic sign for each eigenvector.
///
inline HermEig herm_eig(const RealMatrix& a)
{
    if (a.rows() != a.cols())
        throw InvalidArgument("herm_eig: matrix must be square");
    if (a.size() == 0)
        throw InvalidArgument("herm_eig: empty input");
    require_finite(a, "herm_eig");
    const double norm = a.norm();
    if ((a - a.transpose()).norm() > 1e-10 * norm)
        throw InvalidArgument("herm_eig: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<RealMatrix> es(a);
    if (es.info() != Eigen::Success)
        throw NumericalError("herm_eig: eigensolver did not converge");

    HermEig out;
    out.values  = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    detail::canonicalize_signs(out.vectors);
    return out;
}

///
/// General eigendecomposition of a real square matrix. Eigenvalues are sorted
/// by descending magnitude (ties: descending real, then imaginary part). Right
/// eigenvectors have unit norm; left eigenvectors are the conjugate-transposed
/// rows of the inverse of the right eigenvector matrix, so left^* right = I.
///
inline EigPair general_eig_binormalized(const RealMatrix& a)
{
    if (a.rows() != a.cols() || a.size() == 0)
        throw InvalidArgument("general_eig_binormalized: matrix must be square and non-empty");
    require_finite(a, "general_eig_binormalized");

    Eigen::EigenSolver<RealMatrix> es(a, true);
    if (es.info() != Eigen::Success)
        throw NumericalError("general_eig_binormalized: eigensolver did not converge");

    const Index n                = a.rows();
    const ComplexVector vals     = es.eigenvalues();
    const ComplexMatrix vecs     = es.eigenvectors();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return detail::eig_order(vals(i), vals(j)); });

    EigPair out;
    out.values.resize(n);
    out.right.resize(n, n);
    for (Index k = 0; k < n; ++k)
    {
        out.values(k)    = vals(order[static_cast<std::size_t>(k)]);
        out.right.col(k) = vecs.col(order[static_cast<std::size_t>(k)]).normalized();
    }
    detail::canonicalize_phases(out.right);

    Eigen::JacobiSVD<ComplexMatrix> sv(out.right);
    const auto& s     = sv.singularValues();
    const double cond = s(n - 1) > 0.0 ? s(0) / s(n - 1) : INFINITY;
    if (!(cond <= 1e12))
        throw NumericalError("general_eig_binormalized: near-defective matrix (eigenvector condition "
                             + std::to_string(cond) + ")");

    out.left = out.right.partialPivLu().inverse().adjoint();
    return out;
}

///
/// Pseudoinverse from the leading `rank` singular triplets: V_r S_r^{-1} U_r^T.
///
inline RealMatrix pinv_truncated(const RealMatrix& a, Index rank)
{
    if (rank <= 0)
        throw InvalidArgument("pinv_truncated: rank must be positive");
    if (rank > std::min(a.rows(), a.cols()))
        throw InvalidArgument("pinv_truncated: rank exceeds matrix dimensions");
    const SvdResult svd = svd_economy(a, 0.0);
    if (!(svd.S(rank - 1) > 0.0))
        throw NumericalError("pinv_truncated: requested rank exceeds numerical rank");
    return svd.V.leftCols(rank) * svd.S.head(rank).cwiseInverse().asDiagonal()
           * svd.U.leftCols(rank).transpose();
}

/// Numerical rank: number of singular values above `rel_tol * S_max`.
template <typename MatrixType>
Index numerical_rank(const MatrixType& a, double rel_tol)
{
    if (a.size() == 0)
        return 0;
    Eigen::BDCSVD<MatrixType> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0)
        return 0;
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0))
        ++r;
    return r;
}

/// Pseudoinverse of a complex matrix with relative singular value cutoff.
inline ComplexMatrix pinv_complex(const ComplexMatrix& a, double rel_tol = 1e-12)
{
    Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    RealVector inv      = RealVector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0))
            inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// Pseudoinverse of a real matrix with relative singular value cutoff.
inline RealMatrix pinv(const RealMatrix& a, double rel_tol = 1e-12)
{
    Eigen::BDCSVD<RealMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    RealVector inv      = RealVector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0))
            inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Minimum-norm least-squares solution of A X = B.
inline RealMatrix least_squares(const RealMatrix& a, const RealMatrix& b)
{
    if (a.rows() != b.rows())
        throw InvalidArgument("least_squares: row count mismatch");
    return a.completeOrthogonalDecomposition().solve(b);
}

/// 2-norm condition number (infinite for singular matrices).
inline double condition_number(const RealMatrix& a)
{
    Eigen::JacobiSVD<RealMatrix> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : INFINITY;
}

} // namespace koopman

#endif
