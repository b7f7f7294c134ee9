///
/// \file data/ks.hpp
///
/// Kuramoto-Sivashinsky equation u_t + u_xx + u_xxxx + u u_x = 0 on a periodic
/// domain of length L. In Fourier space
///
///   d/dt u_k = (q^2 - q^4) u_k - (i q / 2) F[u^2]_k,   q = 2 pi k / L.
///
/// The linear part is integrated exactly (integrating factor) and the
/// nonlinear part with the explicit midpoint rule; products are dealiased
/// with the 2/3 rule.
///
#ifndef KOOPMAN_DATA_KS_HPP
#define KOOPMAN_DATA_KS_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <unsupported/Eigen/FFT>

#include <koopman/data/duffing.hpp>
#include <koopman/data/snapshots.hpp>

namespace koopman::data
{

struct KsParams
{
    double L      = 8.0 * std::numbers::pi;
    Index n_modes = 128;
    double max_substep = 0.05;
};

class KsSolver
{
public:
    using CVec = std::vector<Complex>;

    KsSolver(const KsParams& p, double h) : p_(p), h_(h), n_(p.n_modes)
    {
        detail::require(n_ >= 4 && n_ % 2 == 0, "KsSolver: n_modes must be even and at least 4");
        detail::require(p.L > 0.0 && h > 0.0, "KsSolver: L and the step must be positive");
        const auto un = static_cast<std::size_t>(n_);
        q_.resize(un);
        e_.resize(un);
        e2_.resize(un);
        keep_.resize(un);
        for (Index j = 0; j < n_; ++j)
        {
            const Index k   = j < n_ / 2 ? j : j - n_;
            const auto uj   = static_cast<std::size_t>(j);
            q_[uj]          = 2.0 * std::numbers::pi * static_cast<double>(k) / p.L;
            const double lin = q_[uj] * q_[uj] - std::pow(q_[uj], 4);
            e_[uj]          = std::exp(lin * h);
            e2_[uj]         = std::exp(lin * h / 2.0);
            keep_[uj]       = 3 * std::abs(k) < n_ && j != n_ / 2;
        }
    }

    /// Linear growth rate q^2 - q^4 of wavenumber index k.
    double growth_rate(Index k) const
    {
        const double q = 2.0 * std::numbers::pi * static_cast<double>(k) / p_.L;
        return q * q - q * q * q * q;
    }

    CVec to_spectral(const RealVector& u)
    {
        std::vector<double> in(u.data(), u.data() + u.size());
        CVec out;
        fft_.fwd(out, in);
        return out;
    }

    RealVector to_physical(const CVec& v)
    {
        CVec copy = v;
        std::vector<double> out;
        fft_.inv(out, copy);
        return Eigen::Map<const RealVector>(out.data(), static_cast<Index>(out.size()));
    }

    /// -(i q / 2) F[u^2] with dealiasing.
    CVec nonlinear(const CVec& v)
    {
        CVec w = v;
        dealias(w);
        std::vector<double> u;
        fft_.inv(u, w);
        for (double& x : u)
            x = x * x;
        CVec f;
        fft_.fwd(f, u);
        for (std::size_t j = 0; j < f.size(); ++j)
            f[j] = keep_[j] ? Complex(0.0, -0.5 * q_[j]) * f[j] : Complex(0.0, 0.0);
        return f;
    }

    void step(CVec& v)
    {
        const CVec n1 = nonlinear(v);
        CVec mid(v.size());
        for (std::size_t j = 0; j < v.size(); ++j)
            mid[j] = e2_[j] * (v[j] + 0.5 * h_ * n1[j]);
        const CVec n2 = nonlinear(mid);
        for (std::size_t j = 0; j < v.size(); ++j)
            v[j] = e_[j] * v[j] + h_ * e2_[j] * n2[j];
    }

    double step_size() const { return h_; }

private:
    void dealias(CVec& v) const
    {
        for (std::size_t j = 0; j < v.size(); ++j)
            if (!keep_[j])
                v[j] = 0.0;
    }

    KsParams p_;
    double h_;
    Index n_;
    std::vector<double> q_;
    std::vector<double> e_;
    std::vector<double> e2_;
    std::vector<bool> keep_;
    Eigen::FFT<double> fft_;
};

/// Grid points x_j = j L / n.
inline RealVector ks_grid(const KsParams& p)
{
    RealVector x(p.n_modes);
    for (Index j = 0; j < p.n_modes; ++j)
        x(j) = p.L * static_cast<double>(j) / static_cast<double>(p.n_modes);
    return x;
}

/// `samples` states dt_sample apart starting at u0.
inline RealMatrix ks_trajectory(const RealVector& u0, Index samples, double dt_sample, const KsParams& p = {},
                                double burn_in = 0.0)
{
    detail::require(u0.size() == p.n_modes, "ks: initial condition must have n_modes entries");
    detail::require(samples >= 1 && dt_sample > 0.0 && burn_in >= 0.0, "ks: invalid sampling parameters");
    const auto sub = static_cast<Index>(std::ceil(dt_sample / p.max_substep - 1e-12));
    KsSolver solver(p, dt_sample / static_cast<double>(sub));
    KsSolver::CVec v = solver.to_spectral(u0);

    Index step_index = 0;
    auto advance     = [&](Index steps) {
        for (Index k = 0; k < steps; ++k)
        {
            solver.step(v);
            ++step_index;
        }
        const RealVector u = solver.to_physical(v);
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e6)
            throw NumericalError("ks: solution blew up at step " + std::to_string(step_index));
        return u;
    };

    if (burn_in > 0.0)
        advance(static_cast<Index>(std::ceil(burn_in / solver.step_size() - 1e-12)));
    RealMatrix out(p.n_modes, samples);
    out.col(0) = solver.to_physical(v);
    for (Index t = 1; t < samples; ++t)
        out.col(t) = advance(sub);
    return out;
}

///
/// Initial condition of trajectory `index`: Gaussian coefficients on the
/// cosine and sine of wavenumbers 1, 2, 3 scaled by `amplitude`.
///
inline RealVector ks_initial_condition(const KsParams& p, double amplitude, std::uint64_t seed, std::uint64_t index)
{
    std::mt19937_64 rng = trajectory_stream(seed, index);
    std::normal_distribution<double> g(0.0, 1.0);
    const RealVector x = ks_grid(p);
    RealVector u       = RealVector::Zero(p.n_modes);
    for (int k = 1; k <= 3; ++k)
    {
        const double a = g(rng);
        const double b = g(rng);
        const double q = 2.0 * std::numbers::pi * k / p.L;
        u += amplitude * (a * (q * x.array()).cos() + b * (q * x.array()).sin()).matrix();
    }
    return u;
}

inline SnapshotSet simulate_ks(Index n_traj, Index samples, double dt_sample, const KsParams& p, double ic_amplitude,
                               std::uint64_t seed, double burn_in = 0.0)
{
    detail::require(n_traj >= 1, "simulate_ks: need at least one trajectory");
    SnapshotSet s;
    s.dt = dt_sample;
    for (Index i = 0; i < n_traj; ++i)
        s.trajectories.push_back(ks_trajectory(ks_initial_condition(p, ic_amplitude, seed, static_cast<std::uint64_t>(i)),
                                               samples, dt_sample, p, burn_in));
    s.meta = {{"source", "kuramoto_sivashinsky"},
              {"L", p.L},
              {"n_modes", p.n_modes},
              {"ic_amplitude", ic_amplitude},
              {"burn_in", burn_in},
              {"seed", seed},
              {"n_traj", n_traj},
              {"samples", samples},
              {"integrator", "integrating_factor_midpoint"}};
    return s;
}

} // namespace koopman::data

#endif
