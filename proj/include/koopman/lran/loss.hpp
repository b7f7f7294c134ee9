///
/// \file lran/loss.hpp
///
/// Forward pass, decay-weighted loss and exact reverse-mode gradients for the
/// linearly-recurrent autoencoder. A batch of B sequences of length T is held
/// as an n x (T B) matrix whose column tau * B + b is x_{t+tau} of sequence b.
///
#ifndef KOOPMAN_LRAN_LOSS_HPP
#define KOOPMAN_LRAN_LOSS_HPP

#include <cmath>
#include <vector>

#include <koopman/lran/model.hpp>

namespace koopman::lran
{

struct SequenceBatch
{
    Index T = 0;
    Index B = 0;
    RealMatrix X; // n x (T * B)

    auto step(Index tau) const { return X.middleCols(tau * B, B); }
};

/// Builds a batch from n x T sequences.
inline SequenceBatch make_batch(const std::vector<RealMatrix>& sequences)
{
    koopman::detail::require(!sequences.empty(), "make_batch: empty batch");
    SequenceBatch out;
    out.T = sequences.front().cols();
    out.B = static_cast<Index>(sequences.size());
    out.X.resize(sequences.front().rows(), out.T * out.B);
    for (Index b = 0; b < out.B; ++b)
    {
        const RealMatrix& s = sequences[static_cast<std::size_t>(b)];
        koopman::detail::require(s.cols() == out.T && s.rows() == out.X.rows(), "make_batch: ragged sequences");
        for (Index tau = 0; tau < out.T; ++tau)
            out.X.col(tau * out.B + b) = s.col(tau);
    }
    return out;
}

struct LossConfig
{
    Index T            = 10;
    double delta       = 0.8;
    double beta        = 1.0;
    double eps1        = 1e-6;
    double eps2        = 1e-6;
    double omega_weight = 0.0; // weight decay on network weights

    /// sum_{tau=0}^{T-1} delta^tau
    double n1() const
    {
        double s = 0.0;
        for (Index t = 0; t < T; ++t)
            s += std::pow(delta, static_cast<double>(t));
        return s;
    }
    /// sum_{tau=1}^{T-1} delta^(tau-1)
    double n2() const
    {
        double s = 0.0;
        for (Index t = 1; t < T; ++t)
            s += std::pow(delta, static_cast<double>(t - 1));
        return s;
    }

    void validate() const
    {
        using koopman::detail::require;
        require(T >= 1, "LossConfig: T must be at least 1");
        require(delta > 0.0 && delta <= 1.0, "LossConfig: delta must lie in (0, 1]");
        require(beta >= 0.0, "LossConfig: beta must be non-negative");
        require(!(beta > 0.0 && T < 2), "LossConfig: T must be at least 2 when beta > 0");
        require(eps1 > 0.0 && eps2 > 0.0, "LossConfig: eps1 and eps2 must be positive");
        require(omega_weight >= 0.0, "LossConfig: omega_weight must be non-negative");
    }
};

/// Activations of every layer; act[0] is the input.
struct MlpCache
{
    std::vector<RealMatrix> act;
};

inline RealMatrix mlp_forward(const MlpParams& p, const RealMatrix& in, MlpCache* cache = nullptr)
{
    RealMatrix a = in;
    if (cache)
    {
        cache->act.clear();
        cache->act.push_back(a);
    }
    for (std::size_t l = 0; l < p.layers(); ++l)
    {
        RealMatrix pre = p.W[l] * a;
        pre.colwise() += p.b[l];
        if (l + 1 < p.layers())
            pre = pre.unaryExpr([](double v) { return elu(v); });
        a = std::move(pre);
        if (cache)
            cache->act.push_back(a);
    }
    return a;
}

/// Accumulates parameter gradients into `grad` and returns dL/d(input).
inline RealMatrix mlp_backward(const MlpParams& p, const MlpCache& cache, RealMatrix g, MlpParams& grad)
{
    for (std::size_t l = p.layers(); l-- > 0;)
    {
        if (l + 1 < p.layers())
        {
            // elu'(x) = 1 for x >= 0, exp(x) = elu(x) + 1 otherwise
            const RealMatrix& out = cache.act[l + 1];
            g = g.cwiseProduct(out.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : v + 1.0; }));
        }
        grad.W[l].noalias() += g * cache.act[l].transpose();
        grad.b[l] += g.rowwise().sum();
        g = p.W[l].transpose() * g;
    }
    return g;
}

inline RealMatrix encode(const LranModel& m, const RealMatrix& x) { return mlp_forward(m.encoder, x); }
inline RealMatrix decode(const LranModel& m, const RealMatrix& z) { return mlp_forward(m.decoder, z); }

struct ForwardResult
{
    RealMatrix z;     // d x (T B) encoded states
    RealMatrix z_hat; // d x (T B) latent rollout, z_hat_tau = (K^tau)^T z_0
    RealMatrix x_hat; // n x (T B) decoded rollout
};

inline ForwardResult forward(const LranModel& m, const SequenceBatch& batch, MlpCache* enc_cache = nullptr,
                             MlpCache* dec_cache = nullptr)
{
    koopman::detail::require(batch.T >= 1, "forward: sequence length must be at least 1");
    koopman::detail::require(batch.X.rows() == m.state_dim(), "forward: state dimension mismatch");
    ForwardResult r;
    r.z = mlp_forward(m.encoder, batch.X, enc_cache);
    r.z_hat.resize(r.z.rows(), r.z.cols());
    const Index B = batch.B;
    r.z_hat.leftCols(B) = r.z.leftCols(B);
    const RealMatrix kt = m.transition.K.transpose();
    for (Index tau = 1; tau < batch.T; ++tau)
        r.z_hat.middleCols(tau * B, B).noalias() = kt * r.z_hat.middleCols((tau - 1) * B, B);
    r.x_hat = mlp_forward(m.decoder, r.z_hat, dec_cache);
    return r;
}

/// Forward pass for a single n x T sequence.
inline ForwardResult forward(const LranModel& m, const RealMatrix& sequence)
{
    return forward(m, make_batch({sequence}));
}

namespace detail
{

inline double weight_penalty(const LranModel& m)
{
    double s = 0.0;
    for (const auto* net : {&m.encoder, &m.decoder})
        for (const auto& w : net->W)
            s += w.squaredNorm();
    return s;
}

} // namespace detail

inline double loss(const LranModel& m, const SequenceBatch& batch, const LossConfig& cfg)
{
    cfg.validate();
    koopman::detail::require(batch.T == cfg.T, "loss: batch sequence length differs from the loss config");
    const ForwardResult f = forward(m, batch);
    const Index B         = batch.B;
    const double n1       = cfg.n1();
    const double n2       = cfg.n2();

    double recon = 0.0;
    for (Index tau = 0; tau < cfg.T; ++tau)
    {
        const auto x  = batch.step(tau);
        const auto xh = f.x_hat.middleCols(tau * B, B);
        const double w = std::pow(cfg.delta, static_cast<double>(tau)) / n1;
        recon += w * ((xh - x).colwise().squaredNorm().array()
                      / (x.colwise().squaredNorm().array() + cfg.eps1)).sum();
    }
    double latent = 0.0;
    if (cfg.beta > 0.0)
        for (Index tau = 1; tau < cfg.T; ++tau)
        {
            const auto z  = f.z.middleCols(tau * B, B);
            const auto zh = f.z_hat.middleCols(tau * B, B);
            const double w = std::pow(cfg.delta, static_cast<double>(tau - 1)) / n2;
            latent += w * ((zh - z).colwise().squaredNorm().array()
                           / (z.colwise().squaredNorm().array() + cfg.eps2)).sum();
        }
    const double data_term = (recon + cfg.beta * latent) / ((1.0 + cfg.beta) * static_cast<double>(B));
    return data_term + cfg.omega_weight * detail::weight_penalty(m);
}

///
/// Loss value together with its exact gradient. Backpropagation through the
/// latent rollout accumulates every occurrence of K in (K^tau)^T; gradient
/// entries of pinned K blocks are zeroed.
///
inline double loss_and_gradients(const LranModel& m, const SequenceBatch& batch, const LossConfig& cfg,
                                 LranGradients& grad)
{
    cfg.validate();
    koopman::detail::require(batch.T == cfg.T, "gradients: batch sequence length differs from the loss config");
    grad = LranGradients::zeros_like(m);

    MlpCache enc_cache;
    MlpCache dec_cache;
    const ForwardResult f = forward(m, batch, &enc_cache, &dec_cache);
    const Index B         = batch.B;
    const double scale    = 1.0 / ((1.0 + cfg.beta) * static_cast<double>(B));
    const double n1       = cfg.n1();
    const double n2       = cfg.n2();

    double recon = 0.0;
    RealMatrix g_xhat(f.x_hat.rows(), f.x_hat.cols());
    for (Index tau = 0; tau < cfg.T; ++tau)
    {
        const auto x   = batch.step(tau);
        const auto err = f.x_hat.middleCols(tau * B, B) - x;
        const RealVector denom = (x.colwise().squaredNorm().array() + cfg.eps1).transpose();
        const double w = std::pow(cfg.delta, static_cast<double>(tau)) / n1;
        recon += w * (err.colwise().squaredNorm().transpose().array() / denom.array()).sum();
        g_xhat.middleCols(tau * B, B) = (2.0 * scale * w) * err * denom.cwiseInverse().asDiagonal();
    }

    RealMatrix g_zhat = mlp_backward(m.decoder, dec_cache, std::move(g_xhat), grad.decoder);
    RealMatrix g_z    = RealMatrix::Zero(f.z.rows(), f.z.cols());

    double latent = 0.0;
    if (cfg.beta > 0.0)
        for (Index tau = 1; tau < cfg.T; ++tau)
        {
            const auto z   = f.z.middleCols(tau * B, B);
            const RealMatrix err = f.z_hat.middleCols(tau * B, B) - z;
            const RealVector denom = (z.colwise().squaredNorm().array() + cfg.eps2).transpose();
            const RealVector e2    = err.colwise().squaredNorm().transpose();
            const double w = cfg.beta * std::pow(cfg.delta, static_cast<double>(tau - 1)) / n2;
            latent += w * (e2.array() / denom.array()).sum();
            const RealMatrix g_err = (2.0 * scale * w) * err * denom.cwiseInverse().asDiagonal();
            g_zhat.middleCols(tau * B, B) += g_err;
            g_z.middleCols(tau * B, B) -= g_err;
            // derivative of the normalizer |z|^2 + eps2
            const RealVector coef = (2.0 * scale * w) * (e2.array() / denom.array().square()).matrix();
            g_z.middleCols(tau * B, B) -= z * coef.asDiagonal();
        }

    // z_hat_tau = K^T z_hat_{tau-1}
    const RealMatrix& K = m.transition.K;
    for (Index tau = cfg.T - 1; tau >= 1; --tau)
    {
        const auto g = g_zhat.middleCols(tau * B, B);
        grad.K.noalias() += f.z_hat.middleCols((tau - 1) * B, B) * g.transpose();
        g_zhat.middleCols((tau - 1) * B, B).noalias() += K * g;
    }
    g_z.leftCols(B) += g_zhat.leftCols(B);

    mlp_backward(m.encoder, enc_cache, std::move(g_z), grad.encoder);

    const Index fixed = m.transition.fixed_dim();
    if (fixed > 0)
    {
        grad.K.topRows(fixed).setZero();
        grad.K.leftCols(fixed).setZero();
    }

    if (cfg.omega_weight > 0.0)
    {
        for (std::size_t l = 0; l < m.encoder.layers(); ++l)
            grad.encoder.W[l] += 2.0 * cfg.omega_weight * m.encoder.W[l];
        for (std::size_t l = 0; l < m.decoder.layers(); ++l)
            grad.decoder.W[l] += 2.0 * cfg.omega_weight * m.decoder.W[l];
    }
    return (recon + latent) * scale + cfg.omega_weight * detail::weight_penalty(m);
}

} // namespace koopman::lran

#endif
