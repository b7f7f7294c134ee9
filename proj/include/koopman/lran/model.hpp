///
/// \file lran/model.hpp
///
/// Linearly-recurrent autoencoder: an elu encoder network into a d-dimensional
/// latent space, a latent transition matrix K advancing codes as
/// z_{t+1} = K^T z_t, and an elu decoder network back to the state space.
///
#ifndef KOOPMAN_LRAN_MODEL_HPP
#define KOOPMAN_LRAN_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <koopman/numkit.hpp>

namespace koopman::lran
{

inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }

/// Dense network: hidden layers apply elu, the output layer is affine.
struct MlpParams
{
    std::vector<Index> widths;
    std::vector<RealMatrix> W; // W[l] is widths[l+1] x widths[l]
    std::vector<RealVector> b;

    std::size_t layers() const { return W.size(); }
    Index input_dim() const { return widths.front(); }
    Index output_dim() const { return widths.back(); }

    static MlpParams zeros(const std::vector<Index>& widths)
    {
        MlpParams p;
        p.widths = widths;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        {
            p.W.push_back(RealMatrix::Zero(widths[l + 1], widths[l]));
            p.b.push_back(RealVector::Zero(widths[l + 1]));
        }
        return p;
    }
};

/// A known eigenvalue pinned on the leading diagonal of K: either a real value
/// (1x1 block) or a conjugate pair sigma +- i omega stored as
/// [[sigma, omega], [-omega, sigma]].
struct FixedEigenvalue
{
    bool pair    = false;
    double sigma = 0.0;
    double omega = 0.0;

    Index dim() const { return pair ? 2 : 1; }

    static FixedEigenvalue real(double mu) { return {false, mu, 0.0}; }
    static FixedEigenvalue complex_pair(double sigma, double omega) { return {true, sigma, omega}; }
    /// Discrete eigenvalue exp(lambda dt) of a continuous-time eigenvalue.
    static FixedEigenvalue from_continuous(Complex lambda, double dt)
    {
        const Complex mu = std::exp(lambda * dt);
        if (lambda.imag() == 0.0)
            return real(mu.real());
        return complex_pair(mu.real(), std::abs(mu.imag()));
    }
};

///
/// K with an optional set of pinned leading blocks. Only the trailing
/// (d - fixed_dim) x (d - fixed_dim) block is trainable; the coupling between
/// pinned and free coordinates stays zero.
///
struct LatentTransition
{
    RealMatrix K;
    std::vector<FixedEigenvalue> fixed;

    Index dim() const { return K.rows(); }
    Index fixed_dim() const
    {
        Index n = 0;
        for (const auto& f : fixed)
            n += f.dim();
        return n;
    }
    bool trainable(Index i, Index j) const
    {
        const Index f = fixed_dim();
        return i >= f && j >= f;
    }
};

struct LranModel
{
    MlpParams encoder;
    MlpParams decoder;
    LatentTransition transition;

    Index latent_dim() const { return transition.dim(); }
    Index state_dim() const { return encoder.input_dim(); }
};

/// Same shapes as the trainable parameters of an LranModel.
struct LranGradients
{
    MlpParams encoder;
    MlpParams decoder;
    RealMatrix K;

    static LranGradients zeros_like(const LranModel& m)
    {
        return {MlpParams::zeros(m.encoder.widths), MlpParams::zeros(m.decoder.widths),
                RealMatrix::Zero(m.latent_dim(), m.latent_dim())};
    }
};

/// Contiguous parameter storage, used for optimizers and serialization.
struct ParamBlock
{
    std::string name;
    double* data;
    Index rows;
    Index cols;

    Index size() const { return rows * cols; }
};

namespace detail
{

inline void mlp_blocks(MlpParams& p, const std::string& prefix, std::vector<ParamBlock>& out)
{
    for (std::size_t l = 0; l < p.layers(); ++l)
    {
        out.push_back({prefix + ".W" + std::to_string(l), p.W[l].data(), p.W[l].rows(), p.W[l].cols()});
        out.push_back({prefix + ".b" + std::to_string(l), p.b[l].data(), p.b[l].rows(), 1});
    }
}

} // namespace detail

/// Declared block order: encoder (W0, b0, W1, ...), decoder, K.
inline std::vector<ParamBlock> param_blocks(LranModel& m)
{
    std::vector<ParamBlock> out;
    detail::mlp_blocks(m.encoder, "encoder", out);
    detail::mlp_blocks(m.decoder, "decoder", out);
    out.push_back({"K", m.transition.K.data(), m.transition.K.rows(), m.transition.K.cols()});
    return out;
}

inline std::vector<ParamBlock> param_blocks(LranGradients& g)
{
    std::vector<ParamBlock> out;
    detail::mlp_blocks(g.encoder, "encoder", out);
    detail::mlp_blocks(g.decoder, "decoder", out);
    out.push_back({"K", g.K.data(), g.K.rows(), g.K.cols()});
    return out;
}

/// Xavier bound sqrt(6 / (fan_in + fan_out)).
inline double xavier_bound(Index fan_in, Index fan_out)
{
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

///
/// Rotation-scaled blocks with eigenvalues equally spaced in angle on the
/// circle of radius `radius`. For odd dimension one eigenvalue sits on the
/// positive real axis.
///
inline RealMatrix circle_transition(Index dim, double radius = 0.8)
{
    RealMatrix k = RealMatrix::Zero(dim, dim);
    if (dim == 0)
        return k;
    const double n     = static_cast<double>(dim);
    const bool odd     = dim % 2 == 1;
    const double shift = odd ? 1.0 : 0.5;
    Index pos          = 0;
    if (odd)
        k(pos++, 0) = radius;
    for (Index j = 0; pos < dim; ++j, pos += 2)
    {
        const double theta  = 2.0 * std::numbers::pi * (static_cast<double>(j) + shift) / n;
        const double s      = radius * std::cos(theta);
        const double w      = radius * std::sin(theta);
        k(pos, pos)         = s;
        k(pos, pos + 1)     = w;
        k(pos + 1, pos)     = -w;
        k(pos + 1, pos + 1) = s;
    }
    return k;
}

inline LranModel init_model(const std::vector<Index>& encoder_widths, const std::vector<Index>& decoder_widths,
                            Index latent_dim, std::uint64_t seed,
                            const std::vector<FixedEigenvalue>& constraint = {})
{
    using koopman::detail::require;
    require(encoder_widths.size() >= 2 && decoder_widths.size() >= 2, "init_model: networks need at least two widths");
    require(encoder_widths.back() == latent_dim, "init_model: encoder output width must equal the latent dimension");
    require(decoder_widths.front() == latent_dim, "init_model: decoder input width must equal the latent dimension");
    require(encoder_widths.front() == decoder_widths.back(), "init_model: encoder input and decoder output widths differ");
    for (Index w : encoder_widths)
        require(w > 0, "init_model: widths must be positive");
    for (Index w : decoder_widths)
        require(w > 0, "init_model: widths must be positive");

    LranModel m;
    m.encoder = MlpParams::zeros(encoder_widths);
    m.decoder = MlpParams::zeros(decoder_widths);

    std::mt19937_64 rng(seed);
    for (MlpParams* net : {&m.encoder, &m.decoder})
        for (auto& w : net->W)
        {
            std::uniform_real_distribution<double> dist(-xavier_bound(w.cols(), w.rows()),
                                                        xavier_bound(w.cols(), w.rows()));
            for (Index j = 0; j < w.cols(); ++j)
                for (Index i = 0; i < w.rows(); ++i)
                    w(i, j) = dist(rng);
        }

    m.transition.fixed = constraint;
    const Index f      = m.transition.fixed_dim();
    require(f <= latent_dim, "init_model: pinned eigenvalues exceed the latent dimension");
    m.transition.K = RealMatrix::Zero(latent_dim, latent_dim);
    Index pos      = 0;
    for (const auto& e : constraint)
    {
        if (e.pair)
        {
            m.transition.K(pos, pos)         = e.sigma;
            m.transition.K(pos, pos + 1)     = e.omega;
            m.transition.K(pos + 1, pos)     = -e.omega;
            m.transition.K(pos + 1, pos + 1) = e.sigma;
        }
        else
        {
            m.transition.K(pos, pos) = e.sigma;
        }
        pos += e.dim();
    }
    m.transition.K.bottomRightCorner(latent_dim - f, latent_dim - f) = circle_transition(latent_dim - f);
    return m;
}

} // namespace koopman::lran

#endif
