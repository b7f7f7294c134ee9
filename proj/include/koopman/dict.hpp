///
/// \file dict.hpp
///
/// Explicit dictionaries of observables for EDMD and kernel functions for the
/// kernel-based methods.
///
#ifndef KOOPMAN_DICT_HPP
#define KOOPMAN_DICT_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <koopman/numkit.hpp>

namespace koopman
{

/// A scalar observable with a name, evaluated on one state column.
struct BasisFunction
{
    std::string name;
    std::function<double(const RealVector&)> eval;
};

///
/// Feature map Psi: R^n -> R^N.
///
/// Monomials are laid out in graded lexicographic order: by total degree, and
/// within a degree by descending exponent tuples, e.g. 1, x1, x2, x1^2, x1 x2,
/// x2^2.
///
class Dictionary
{
public:
    enum class Kind
    {
        state,
        monomials,
        state_plus_norm2,
        custom
    };

    static Dictionary state(Index input_dim)
    {
        detail::require(input_dim > 0, "Dictionary: input_dim must be positive");
        return Dictionary(Kind::state, input_dim, 0, {});
    }

    static Dictionary monomials(Index input_dim, int max_degree)
    {
        detail::require(input_dim > 0, "Dictionary: input_dim must be positive");
        detail::require(max_degree >= 0, "Dictionary: max_degree must be non-negative");
        Dictionary d(Kind::monomials, input_dim, max_degree, {});
        for (int deg = 0; deg <= max_degree; ++deg)
        {
            std::vector<int> e(static_cast<std::size_t>(input_dim), 0);
            d.append_exponents(e, 0, deg);
        }
        return d;
    }

    /// The state followed by its squared Euclidean norm.
    static Dictionary state_plus_norm2(Index input_dim)
    {
        detail::require(input_dim > 0, "Dictionary: input_dim must be positive");
        return Dictionary(Kind::state_plus_norm2, input_dim, 0, {});
    }

    static Dictionary custom(Index input_dim, std::vector<BasisFunction> functions)
    {
        detail::require(input_dim > 0, "Dictionary: input_dim must be positive");
        detail::require(!functions.empty(), "Dictionary: custom dictionary needs at least one function");
        return Dictionary(Kind::custom, input_dim, 0, std::move(functions));
    }

    Kind kind() const { return kind_; }
    Index input_dim() const { return input_dim_; }
    int max_degree() const { return max_degree_; }

    Index output_dim() const
    {
        switch (kind_)
        {
        case Kind::state:
            return input_dim_;
        case Kind::state_plus_norm2:
            return input_dim_ + 1;
        case Kind::monomials:
            return static_cast<Index>(exponents_.size());
        case Kind::custom:
            return static_cast<Index>(functions_.size());
        }
        return 0;
    }

    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    /// Column j of the result is Psi(x_j).
    RealMatrix eval_features(const RealMatrix& x) const
    {
        if (x.rows() != input_dim_)
            throw InvalidArgument("eval_features: expected " + std::to_string(input_dim_)
                                  + " rows, got " + std::to_string(x.rows()));
        const Index m = x.cols();
        switch (kind_)
        {
        case Kind::state:
            return x;
        case Kind::state_plus_norm2:
        {
            RealMatrix out(input_dim_ + 1, m);
            out.topRows(input_dim_) = x;
            out.row(input_dim_)     = x.colwise().squaredNorm();
            return out;
        }
        case Kind::monomials:
        {
            RealMatrix out(output_dim(), m);
            for (Index j = 0; j < m; ++j)
                for (std::size_t k = 0; k < exponents_.size(); ++k)
                {
                    double v = 1.0;
                    for (Index i = 0; i < input_dim_; ++i)
                        for (int p = 0; p < exponents_[k][static_cast<std::size_t>(i)]; ++p)
                            v *= x(i, j);
                    out(static_cast<Index>(k), j) = v;
                }
            return out;
        }
        case Kind::custom:
        {
            RealMatrix out(output_dim(), m);
            for (Index j = 0; j < m; ++j)
            {
                const RealVector col = x.col(j);
                for (std::size_t k = 0; k < functions_.size(); ++k)
                    out(static_cast<Index>(k), j) = functions_[k].eval(col);
            }
            return out;
        }
        }
        return {};
    }

private:
    Dictionary(Kind kind, Index input_dim, int max_degree, std::vector<BasisFunction> functions)
        : kind_(kind), input_dim_(input_dim), max_degree_(max_degree), functions_(std::move(functions))
    {
    }

    // Exponent tuples of total degree `remaining` over variables [pos, n), in
    // descending lexicographic order.
    void append_exponents(std::vector<int>& e, std::size_t pos, int remaining)
    {
        if (pos + 1 == e.size())
        {
            e[pos] = remaining;
            exponents_.push_back(e);
            e[pos] = 0;
            return;
        }
        for (int p = remaining; p >= 0; --p)
        {
            e[pos] = p;
            append_exponents(e, pos + 1, remaining - p);
        }
        e[pos] = 0;
    }

    Kind kind_;
    Index input_dim_;
    int max_degree_;
    std::vector<BasisFunction> functions_;
    std::vector<std::vector<int>> exponents_;
};

///
/// Positive semi-definite kernel. The Gaussian RBF uses
/// k(x, z) = exp(-|x - z|^2 / sigma^2).
///
struct KernelSpec
{
    enum class Kind
    {
        gaussian_rbf,
        linear,
        polynomial
    };

    Kind kind     = Kind::linear;
    double sigma  = 1.0;
    int degree    = 1;
    double offset = 0.0;

    static KernelSpec gaussian_rbf(double sigma)
    {
        detail::require(sigma > 0.0 && std::isfinite(sigma), "KernelSpec: sigma must be positive");
        return {Kind::gaussian_rbf, sigma, 1, 0.0};
    }
    static KernelSpec linear() { return {Kind::linear, 1.0, 1, 0.0}; }
    static KernelSpec polynomial(int degree, double offset)
    {
        detail::require(degree >= 1, "KernelSpec: degree must be at least 1");
        detail::require(offset >= 0.0, "KernelSpec: offset must be non-negative");
        return {Kind::polynomial, 1.0, degree, offset};
    }

    double operator()(const RealVector& a, const RealVector& b) const
    {
        switch (kind)
        {
        case Kind::gaussian_rbf:
            return std::exp(-(a - b).squaredNorm() / (sigma * sigma));
        case Kind::linear:
            return a.dot(b);
        case Kind::polynomial:
            return std::pow(a.dot(b) + offset, degree);
        }
        return 0.0;
    }
};

namespace detail
{

inline RealMatrix apply_kernel_to_inner(const KernelSpec& k, RealMatrix inner, const RealVector& na,
                                        const RealVector& nb)
{
    switch (k.kind)
    {
    case KernelSpec::Kind::linear:
        return inner;
    case KernelSpec::Kind::polynomial:
        return (inner.array() + k.offset).pow(k.degree).matrix();
    case KernelSpec::Kind::gaussian_rbf:
    {
        const double s2 = k.sigma * k.sigma;
        for (Index j = 0; j < inner.cols(); ++j)
            for (Index i = 0; i < inner.rows(); ++i)
            {
                const double d2 = std::max(0.0, na(i) + nb(j) - 2.0 * inner(i, j));
                inner(i, j)     = std::exp(-d2 / s2);
            }
        return inner;
    }
    }
    return inner;
}

} // namespace detail

/// Gram matrix of one data set; exactly symmetric.
inline RealMatrix kernel_gram(const KernelSpec& k, const RealMatrix& a)
{
    RealMatrix inner(a.cols(), a.cols());
    inner.setZero();
    inner.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    inner.triangularView<Eigen::StrictlyUpper>() = inner.transpose();
    const RealVector na = inner.diagonal();
    RealMatrix out      = detail::apply_kernel_to_inner(k, std::move(inner), na, na);
    if (k.kind == KernelSpec::Kind::gaussian_rbf)
        out.diagonal().setOnes();
    return out;
}

/// Entry (i, j) is k(a_i, b_j) for columns a_i of A and b_j of B.
inline RealMatrix kernel_matrix(const KernelSpec& k, const RealMatrix& a, const RealMatrix& b)
{
    if (a.rows() != b.rows())
        throw InvalidArgument("kernel_matrix: dimension mismatch (" + std::to_string(a.rows()) + " vs "
                              + std::to_string(b.rows()) + ")");
    if (&a == &b)
        return kernel_gram(k, a);
    RealMatrix inner = a.transpose() * b;
    return detail::apply_kernel_to_inner(k, std::move(inner), a.colwise().squaredNorm().transpose(),
                                         b.colwise().squaredNorm().transpose());
}

} // namespace koopman

#endif
