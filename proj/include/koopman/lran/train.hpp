///
/// \file lran/train.hpp
///
/// Minibatch ADAM training over length-T windows of trajectories.
///
#ifndef KOOPMAN_LRAN_TRAIN_HPP
#define KOOPMAN_LRAN_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <koopman/lran/loss.hpp>

namespace koopman::lran
{

struct AdamConfig
{
    double lr0          = 1e-3;
    double beta1        = 0.9;
    double beta2        = 0.999;
    double eps_adam     = 1e-8;
    double decay_factor = 0.1;
    Index decay_steps   = 100000;
    Index total_steps   = 1000;
    Index batch_size    = 50;
    std::uint64_t seed  = 0;

    double learning_rate(Index step) const
    {
        return lr0 * std::pow(decay_factor, static_cast<double>(step) / static_cast<double>(decay_steps));
    }

    void validate() const
    {
        using koopman::detail::require;
        require(lr0 > 0.0, "AdamConfig: lr0 must be positive");
        require(beta1 >= 0.0 && beta1 < 1.0, "AdamConfig: beta1 must lie in [0, 1)");
        require(beta2 >= 0.0 && beta2 < 1.0, "AdamConfig: beta2 must lie in [0, 1)");
        require(eps_adam > 0.0, "AdamConfig: eps_adam must be positive");
        require(decay_factor > 0.0 && decay_factor <= 1.0, "AdamConfig: decay_factor must lie in (0, 1]");
        require(decay_steps >= 1, "AdamConfig: decay_steps must be positive");
        require(total_steps >= 0, "AdamConfig: total_steps must be non-negative");
        require(batch_size >= 1, "AdamConfig: batch_size must be positive");
    }
};

/// First and second moment estimates, one buffer per parameter block.
class AdamState
{
public:
    explicit AdamState(LranModel& m)
    {
        for (const ParamBlock& b : param_blocks(m))
        {
            first_.emplace_back(static_cast<std::size_t>(b.size()), 0.0);
            second_.emplace_back(static_cast<std::size_t>(b.size()), 0.0);
        }
    }

    /// One update with learning rate `lr`; `step` counts from 1.
    void apply(LranModel& m, LranGradients& g, const AdamConfig& c, double lr, Index step)
    {
        std::vector<ParamBlock> params = param_blocks(m);
        std::vector<ParamBlock> grads  = param_blocks(g);
        const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < params.size(); ++k)
        {
            double* p       = params[k].data;
            const double* d = grads[k].data;
            auto& m1        = first_[k];
            auto& m2        = second_[k];
            for (std::size_t i = 0; i < m1.size(); ++i)
            {
                m1[i] = c.beta1 * m1[i] + (1.0 - c.beta1) * d[i];
                m2[i] = c.beta2 * m2[i] + (1.0 - c.beta2) * d[i] * d[i];
                p[i] -= lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + c.eps_adam);
            }
        }
    }

private:
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
};

/// All length-T windows of a trajectory set, addressed by a flat index.
class WindowSampler
{
public:
    WindowSampler(const std::vector<RealMatrix>& trajectories, Index T) : trajectories_(&trajectories), T_(T)
    {
        koopman::detail::require(T >= 1, "WindowSampler: T must be positive");
        Index total = 0;
        for (const RealMatrix& tr : trajectories)
        {
            offsets_.push_back(total);
            total += std::max<Index>(tr.cols() - T + 1, 0);
        }
        total_ = total;
        koopman::detail::require(total_ > 0, "WindowSampler: no trajectory is at least T snapshots long");
    }

    Index size() const { return total_; }

    RealMatrix window(Index flat) const
    {
        const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
        const auto k  = static_cast<std::size_t>(std::distance(offsets_.begin(), it) - 1);
        return (*trajectories_)[k].middleCols(flat - offsets_[k], T_);
    }

    SequenceBatch sample(std::mt19937_64& rng, Index batch) const
    {
        std::uniform_int_distribution<Index> pick(0, total_ - 1);
        std::vector<RealMatrix> seqs;
        seqs.reserve(static_cast<std::size_t>(batch));
        for (Index b = 0; b < batch; ++b)
            seqs.push_back(window(pick(rng)));
        return make_batch(seqs);
    }

    /// Evenly strided selection of at most `max_windows` windows.
    SequenceBatch fixed_batch(Index max_windows) const
    {
        const Index count = std::min(max_windows, total_);
        std::vector<RealMatrix> seqs;
        seqs.reserve(static_cast<std::size_t>(count));
        for (Index i = 0; i < count; ++i)
            seqs.push_back(window(i * total_ / count));
        return make_batch(seqs);
    }

private:
    const std::vector<RealMatrix>* trajectories_;
    Index T_;
    std::vector<Index> offsets_;
    Index total_ = 0;
};

struct TrainRecord
{
    Index step = 0;
    double train_loss = 0.0;
    double eval_loss  = 0.0;
    double lr         = 0.0;
};

struct TrainOptions
{
    Index eval_every       = 1000;
    Index max_eval_windows = 2000;
    Index start_step       = 0; // resumes the schedule from a checkpoint
    std::function<void(const TrainRecord&)> on_record;
};

struct TrainResult
{
    LranModel model;
    std::vector<TrainRecord> history;
    Index steps = 0;
};

///
/// Runs `opt.total_steps` ADAM steps. An evaluation record is appended every
/// `eval_every` steps and after the final step; the eval loss uses a fixed
/// strided batch of evaluation windows (the training windows when
/// `eval_trajectories` is empty).
///
inline TrainResult train(LranModel model, const std::vector<RealMatrix>& train_trajectories,
                         const std::vector<RealMatrix>& eval_trajectories, const LossConfig& cfg,
                         const AdamConfig& opt, const TrainOptions& options = {})
{
    cfg.validate();
    opt.validate();
    koopman::detail::require(options.eval_every >= 1, "train: eval_every must be positive");

    const WindowSampler sampler(train_trajectories, cfg.T);
    const WindowSampler eval_sampler(eval_trajectories.empty() ? train_trajectories : eval_trajectories, cfg.T);
    const SequenceBatch eval_batch = eval_sampler.fixed_batch(options.max_eval_windows);

    std::mt19937_64 rng(opt.seed);
    AdamState adam(model);
    LranGradients grad = LranGradients::zeros_like(model);
    TrainResult out;
    double last_finite = std::numeric_limits<double>::quiet_NaN();

    for (Index k = 1; k <= opt.total_steps; ++k)
    {
        const Index step          = options.start_step + k;
        const SequenceBatch batch = sampler.sample(rng, opt.batch_size);
        const double value        = loss_and_gradients(model, batch, cfg, grad);
        if (!std::isfinite(value))
            throw NumericalError("train: non-finite loss at step " + std::to_string(step)
                                 + " (last finite loss " + std::to_string(last_finite) + ")");
        last_finite     = value;
        const double lr = opt.learning_rate(step - 1);
        adam.apply(model, grad, opt, lr, k);

        if (k % options.eval_every == 0 || k == opt.total_steps)
        {
            TrainRecord rec{step, value, loss(model, eval_batch, cfg), lr};
            if (!std::isfinite(rec.eval_loss))
                throw NumericalError("train: non-finite evaluation loss at step " + std::to_string(step)
                                     + " (last finite loss " + std::to_string(last_finite) + ")");
            out.history.push_back(rec);
            if (options.on_record)
                options.on_record(rec);
        }
    }
    out.steps = options.start_step + opt.total_steps;
    out.model = std::move(model);
    return out;
}

} // namespace koopman::lran

#endif
