///
/// \file data/duffing.hpp
///
/// Unforced Duffing oscillator x'' = -delta x' - x (beta + alpha x^2).
///
#ifndef KOOPMAN_DATA_DUFFING_HPP
#define KOOPMAN_DATA_DUFFING_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

#include <koopman/data/snapshots.hpp>

namespace koopman::data
{

struct DuffingParams
{
    double delta = 0.5;
    double beta  = -1.0;
    double alpha = 1.0;
};

using Duffing2 = std::array<double, 2>;

inline Duffing2 duffing_rhs(const Duffing2& s, const DuffingParams& p)
{
    return {s[1], -p.delta * s[1] - s[0] * (p.beta + p.alpha * s[0] * s[0])};
}

inline Duffing2 duffing_rk4_step(const Duffing2& s, double h, const DuffingParams& p)
{
    auto axpy = [](const Duffing2& a, double c, const Duffing2& b) { return Duffing2{a[0] + c * b[0], a[1] + c * b[1]}; };
    const Duffing2 k1 = duffing_rhs(s, p);
    const Duffing2 k2 = duffing_rhs(axpy(s, 0.5 * h, k1), p);
    const Duffing2 k3 = duffing_rhs(axpy(s, 0.5 * h, k2), p);
    const Duffing2 k4 = duffing_rhs(axpy(s, h, k3), p);
    return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

/// Energy V = v^2/2 + beta x^2/2 + alpha x^4/4, with dV/dt = -delta v^2.
inline double duffing_energy(const Duffing2& s, const DuffingParams& p)
{
    return 0.5 * s[1] * s[1] + 0.5 * p.beta * s[0] * s[0] + 0.25 * p.alpha * std::pow(s[0], 4);
}

/// `samples` states dt_sample apart starting at x0, RK4 with `substeps` per sample.
inline RealMatrix duffing_trajectory(const Duffing2& x0, Index samples, double dt_sample,
                                     const DuffingParams& p = {}, Index substeps = 25)
{
    detail::require(samples >= 1, "duffing: samples must be positive");
    detail::require(dt_sample > 0.0 && substeps >= 1, "duffing: dt_sample and substeps must be positive");
    RealMatrix out(2, samples);
    Duffing2 s      = x0;
    const double h  = dt_sample / static_cast<double>(substeps);
    out.col(0) << s[0], s[1];
    for (Index t = 1; t < samples; ++t)
    {
        for (Index k = 0; k < substeps; ++k)
            s = duffing_rk4_step(s, h, p);
        out.col(t) << s[0], s[1];
    }
    return out;
}

/// Independent generator for trajectory `index` of a run seeded with `seed`.
inline std::mt19937_64 trajectory_stream(std::uint64_t seed, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

/// Initial condition of trajectory `index`, uniform on [-2, 2]^2.
inline Duffing2 duffing_initial_condition(std::uint64_t seed, std::uint64_t index)
{
    std::mt19937_64 rng = trajectory_stream(seed, index);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const double x = u(rng);
    const double v = u(rng);
    return {x, v};
}

inline SnapshotSet simulate_duffing(Index n_traj, Index samples_per_traj, double dt_sample, const DuffingParams& p,
                                    std::uint64_t seed)
{
    detail::require(n_traj >= 1, "simulate_duffing: need at least one trajectory");
    SnapshotSet s;
    s.dt = dt_sample;
    s.trajectories.reserve(static_cast<std::size_t>(n_traj));
    for (Index i = 0; i < n_traj; ++i)
        s.trajectories.push_back(
            duffing_trajectory(duffing_initial_condition(seed, static_cast<std::uint64_t>(i)), samples_per_traj,
                               dt_sample, p));
    s.meta = {{"source", "duffing"},
              {"delta", p.delta},
              {"beta", p.beta},
              {"alpha", p.alpha},
              {"seed", seed},
              {"n_traj", n_traj},
              {"samples", samples_per_traj},
              {"integrator", "rk4"},
              {"substeps", 25}};
    return s;
}

/// Basin of attraction of x0: sign of x after integrating `horizon` time units.
inline int duffing_basin_label(const Duffing2& x0, const DuffingParams& p = {}, double horizon = 40.0,
                               double h = 0.01)
{
    Duffing2 s        = x0;
    const auto steps  = static_cast<Index>(std::ceil(horizon / h));
    const double step = horizon / static_cast<double>(steps);
    for (Index k = 0; k < steps; ++k)
        s = duffing_rk4_step(s, step, p);
    return s[0] >= 0.0 ? 1 : -1;
}

} // namespace koopman::data

#endif
