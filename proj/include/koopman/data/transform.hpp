///
/// \file data/transform.hpp
///
/// Delay embedding, POD projection and train/eval/test splits.
///
#ifndef KOOPMAN_DATA_TRANSFORM_HPP
#define KOOPMAN_DATA_TRANSFORM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <koopman/data/snapshots.hpp>

namespace koopman::data
{

///
/// Stacks [x_t; x_{t+lag}; ...; x_{t+(delays-1) lag}]. Trajectories shrink by
/// (delays - 1) lag snapshots.
///
inline SnapshotSet delay_embed(const SnapshotSet& s, Index delays, Index lag = 1)
{
    detail::require(delays >= 1, "delay_embed: delays must be at least 1");
    detail::require(lag >= 1, "delay_embed: lag must be at least 1");
    SnapshotSet out;
    out.dt   = s.dt;
    out.meta = s.meta;
    out.meta["delays"]    = delays;
    out.meta["delay_lag"] = lag;
    const Index n    = s.state_dim();
    const Index span = (delays - 1) * lag;
    for (const auto& t : s.trajectories)
    {
        if (t.cols() <= span)
            throw InvalidArgument("delay_embed: trajectory of length " + std::to_string(t.cols())
                                  + " is too short for " + std::to_string(delays) + " delays");
        RealMatrix e(n * delays, t.cols() - span);
        for (Index j = 0; j < e.cols(); ++j)
            for (Index k = 0; k < delays; ++k)
                e.block(k * n, j, n, 1) = t.col(j + k * lag);
        out.trajectories.push_back(std::move(e));
    }
    return out;
}

struct PodBasis
{
    RealMatrix modes;    // n x k, orthonormal columns
    RealVector energies; // sigma_i^2 for all retained singular values, non-increasing
    RealVector mean;     // empty when no mean was removed
    double total_energy = 0.0;

    Index size() const { return modes.cols(); }

    double captured_fraction() const
    {
        return total_energy > 0.0 ? energies.head(size()).sum() / total_energy : 1.0;
    }

    RealMatrix project(const RealMatrix& x) const
    {
        if (mean.size() == 0)
            return modes.transpose() * x;
        return modes.transpose() * (x.colwise() - mean);
    }

    RealMatrix lift(const RealMatrix& a) const
    {
        RealMatrix x = modes * a;
        if (mean.size() != 0)
            x.colwise() += mean;
        return x;
    }
};

/// POD of all snapshots; returns the basis and the coefficient trajectories.
inline std::pair<PodBasis, SnapshotSet> pod_project(const SnapshotSet& s, Index k, bool subtract_mean = false)
{
    const RealMatrix all = s.concatenated();
    if (k < 1 || k > std::min(all.rows(), all.cols()))
        throw InvalidArgument("pod_project: k = " + std::to_string(k) + " must lie in [1, min(n, snapshots)]");
    PodBasis b;
    RealMatrix centered = all;
    if (subtract_mean)
    {
        b.mean = all.rowwise().mean();
        centered.colwise() -= b.mean;
    }
    const SvdResult svd = svd_economy(centered, 0.0);
    b.modes             = svd.U.leftCols(k);
    b.energies          = svd.S.array().square();
    b.total_energy      = b.energies.sum();

    SnapshotSet out;
    out.dt   = s.dt;
    out.meta = s.meta;
    out.meta["pod_modes"]          = k;
    out.meta["pod_energy_fraction"] = b.captured_fraction();
    for (const auto& t : s.trajectories)
        out.trajectories.push_back(b.project(t));
    return {b, out};
}

struct Splits
{
    SnapshotSet train;
    SnapshotSet eval;
    SnapshotSet test;
};

namespace detail
{

inline SnapshotSet empty_like(const SnapshotSet& s, const std::string& role, double dt)
{
    SnapshotSet out;
    out.dt           = dt;
    out.meta         = s.meta;
    out.meta["split"] = role;
    return out;
}

} // namespace detail

/// Whole trajectories shuffled with `seed` and assigned by `ratios`.
inline Splits split_by_trajectory(const SnapshotSet& s, std::array<double, 3> ratios, std::uint64_t seed)
{
    for (double r : ratios)
        detail::require(r >= 0.0, "split: ratios must be non-negative");
    const double sum = ratios[0] + ratios[1] + ratios[2];
    detail::require(sum > 0.0, "split: ratios must not all be zero");

    const auto n = static_cast<Index>(s.trajectories.size());
    Index n_train = static_cast<Index>(std::llround(ratios[0] / sum * static_cast<double>(n)));
    Index n_eval  = static_cast<Index>(std::llround(ratios[1] / sum * static_cast<double>(n)));
    n_train       = std::min(n_train, n);
    n_eval        = std::min(n_eval, n - n_train);
    const Index n_test = n - n_train - n_eval;
    if ((ratios[0] > 0.0 && n_train == 0) || (ratios[1] > 0.0 && n_eval == 0) || (ratios[2] > 0.0 && n_test == 0))
        throw InvalidArgument("split: too few trajectories (" + std::to_string(n) + ") for the requested ratios");

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
    {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }

    Splits out{detail::empty_like(s, "train", s.dt), detail::empty_like(s, "eval", s.dt),
               detail::empty_like(s, "test", s.dt)};
    for (Index i = 0; i < n; ++i)
    {
        SnapshotSet& dst = i < n_train ? out.train : (i < n_train + n_eval ? out.eval : out.test);
        dst.trajectories.push_back(s.trajectories[order[static_cast<std::size_t>(i)]]);
    }
    return out;
}

///
/// Within each trajectory: zero-based even indices train (spacing 2 dt), the
/// remaining points alternate into eval (indices 1, 5, 9, ...) and test
/// (3, 7, 11, ...), each with spacing 4 dt.
///
inline Splits split_odd_even_interleave(const SnapshotSet& s)
{
    Splits out{detail::empty_like(s, "train", 2.0 * s.dt), detail::empty_like(s, "eval", 4.0 * s.dt),
               detail::empty_like(s, "test", 4.0 * s.dt)};
    for (const auto& t : s.trajectories)
    {
        if (t.cols() < 4)
            throw InvalidArgument("split: interleaving needs at least 4 snapshots per trajectory");
        auto pick = [&](Index start, Index stride) {
            RealMatrix m(t.rows(), (t.cols() - start + stride - 1) / stride);
            for (Index j = 0; j < m.cols(); ++j)
                m.col(j) = t.col(start + j * stride);
            return m;
        };
        out.train.trajectories.push_back(pick(0, 2));
        out.eval.trajectories.push_back(pick(1, 4));
        out.test.trajectories.push_back(pick(3, 4));
    }
    return out;
}

} // namespace koopman::data

#endif
