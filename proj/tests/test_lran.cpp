#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <filesystem>

#include <koopman/lran/analysis.hpp>
#include <koopman/lran/checkpoint.hpp>
#include <koopman/lran/loss.hpp>
#include <koopman/lran/train.hpp>

#include "support.hpp"

using namespace koopman;
using namespace koopman::lran;
using testing_support::random_matrix;

namespace
{

const Complex duffing_lambda(-0.25, 1.3919410907075054); // (-1 + sqrt(31) i) / 4

// Straight per-sequence transcription of the weighted loss, used as an oracle.
double naive_loss(const LranModel& m, const std::vector<RealMatrix>& seqs, const LossConfig& c)
{
    double total = 0.0;
    double n1    = 0.0;
    double n2    = 0.0;
    for (Index t = 0; t < c.T; ++t)
        n1 += std::pow(c.delta, static_cast<double>(t));
    for (Index t = 1; t < c.T; ++t)
        n2 += std::pow(c.delta, static_cast<double>(t - 1));
    for (const RealMatrix& s : seqs)
    {
        RealVector zhat  = encode(m, s.col(0));
        double recon     = 0.0;
        double latent    = 0.0;
        for (Index t = 0; t < c.T; ++t)
        {
            if (t > 0)
                zhat = m.transition.K.transpose() * zhat;
            const RealVector x    = s.col(t);
            const RealVector xhat = decode(m, zhat);
            recon += std::pow(c.delta, static_cast<double>(t)) / n1 * (xhat - x).squaredNorm()
                     / (x.squaredNorm() + c.eps1);
            if (t > 0)
            {
                const RealVector z = encode(m, x);
                latent += std::pow(c.delta, static_cast<double>(t - 1)) / n2 * (zhat - z).squaredNorm()
                          / (z.squaredNorm() + c.eps2);
            }
        }
        total += (recon + c.beta * latent) / (1.0 + c.beta);
    }
    double omega = 0.0;
    for (const auto* net : {&m.encoder, &m.decoder})
        for (const auto& w : net->W)
            omega += w.squaredNorm();
    return total / static_cast<double>(seqs.size()) + c.omega_weight * omega;
}

std::vector<RealMatrix> random_sequences(Index n, Index T, Index count, std::uint64_t seed)
{
    std::vector<RealMatrix> out;
    for (Index b = 0; b < count; ++b)
        out.push_back(random_matrix(n, T, seed + static_cast<std::uint64_t>(b)));
    return out;
}

// Orbits of a damped rotation, used as easy training data.
std::vector<RealMatrix> rotation_orbits(Index count, Index length, std::uint64_t seed)
{
    RealMatrix a(2, 2);
    a << 0.95 * std::cos(0.3), -0.95 * std::sin(0.3), 0.95 * std::sin(0.3), 0.95 * std::cos(0.3);
    std::vector<RealMatrix> out;
    for (Index k = 0; k < count; ++k)
    {
        RealMatrix tr(2, length);
        tr.col(0) = random_matrix(2, 1, seed + static_cast<std::uint64_t>(k)).col(0);
        for (Index t = 1; t < length; ++t)
            tr.col(t) = a * tr.col(t - 1);
        out.push_back(tr);
    }
    return out;
}

double relative_gap(const RealMatrix& a, const RealMatrix& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-8);
}

// Central-difference gradient over every trainable entry of one model.
LranGradients finite_difference(const LranModel& m, const SequenceBatch& batch, const LossConfig& c, double h)
{
    LranModel probe     = m;
    LranGradients out   = LranGradients::zeros_like(m);
    std::vector<ParamBlock> params = param_blocks(probe);
    std::vector<ParamBlock> grads  = param_blocks(out);
    for (std::size_t k = 0; k < params.size(); ++k)
        for (Index i = 0; i < params[k].size(); ++i)
        {
            if (params[k].name == "K" && !m.transition.trainable(i % params[k].rows, i / params[k].rows))
                continue;
            const double saved  = params[k].data[i];
            params[k].data[i]   = saved + h;
            const double up     = loss(probe, batch, c);
            params[k].data[i]   = saved - h;
            const double down   = loss(probe, batch, c);
            params[k].data[i]   = saved;
            grads[k].data[i]    = (up - down) / (2.0 * h);
        }
    return out;
}

} // namespace

TEST(Elu, Values)
{
    EXPECT_EQ(elu(0.0), 0.0);
    EXPECT_EQ(elu(1.5), 1.5);
    EXPECT_NEAR(elu(-20.0), std::exp(-20.0) - 1.0, 1e-16);
    EXPECT_NEAR(elu(-20.0), -1.0, 1e-8);
    // C1 at zero: one-sided slopes agree.
    const double h = 1e-7;
    EXPECT_NEAR((elu(h) - elu(0.0)) / h, (elu(0.0) - elu(-h)) / h, 1e-6);
}

TEST(InitModel, XavierBoundsAndZeroBiases)
{
    EXPECT_NEAR(xavier_bound(2, 32), std::sqrt(6.0 / 34.0), 1e-15);
    EXPECT_NEAR(xavier_bound(2, 32), 0.4201, 1e-4);
    const LranModel m = init_model({2, 32, 32, 16, 16, 8, 3}, {3, 8, 16, 16, 32, 32, 2}, 3, 1);
    for (const MlpParams* net : {&m.encoder, &m.decoder})
        for (std::size_t l = 0; l < net->layers(); ++l)
        {
            const double bound = xavier_bound(net->W[l].cols(), net->W[l].rows());
            EXPECT_LE(net->W[l].cwiseAbs().maxCoeff(), bound);
            EXPECT_GT(net->W[l].cwiseAbs().maxCoeff(), 0.5 * bound);
            EXPECT_EQ(net->b[l].norm(), 0.0);
        }
}

TEST(InitModel, TwoDimensionalLatentIsOneCircleBlock)
{
    const LranModel m = init_model({4, 2}, {2, 4}, 2, 2);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    EXPECT_NEAR(std::abs(e.values(0)), 0.8, 1e-14);
    EXPECT_NEAR(std::abs(e.values(1)), 0.8, 1e-14);
    EXPECT_NEAR(std::abs(e.values(0) - std::conj(e.values(1))), 0.0, 1e-14);
    EXPECT_GT(std::abs(e.values(0).imag()), 0.1);
}

TEST(InitModel, CircleEigenvaluesAreEquallySpaced)
{
    for (Index d : {3, 5, 6, 16})
    {
        const RealMatrix k = circle_transition(d);
        Eigen::EigenSolver<RealMatrix> es(k);
        std::vector<double> angles;
        for (Index i = 0; i < d; ++i)
        {
            EXPECT_NEAR(std::abs(es.eigenvalues()(i)), 0.8, 1e-12);
            double a = std::arg(es.eigenvalues()(i));
            angles.push_back(a < -1e-12 ? a + 2.0 * std::numbers::pi : std::max(a, 0.0));
        }
        std::sort(angles.begin(), angles.end());
        for (std::size_t i = 1; i < angles.size(); ++i)
            EXPECT_NEAR(angles[i] - angles[i - 1], 2.0 * std::numbers::pi / static_cast<double>(d), 1e-10);
        if (d % 2 == 1)
            EXPECT_NEAR(angles.front(), 0.0, 1e-12);
    }
}

TEST(InitModel, ConstrainedDuffingTransition)
{
    const double dt = 0.25;
    const std::vector<FixedEigenvalue> c = {FixedEigenvalue::from_continuous({0.0, 0.0}, dt),
                                            FixedEigenvalue::from_continuous(duffing_lambda, dt)};
    const LranModel m = init_model({2, 8, 3}, {3, 8, 2}, 3, 3, c);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    const Complex mu  = std::exp(duffing_lambda * dt);
    bool has_one = false;
    bool has_pair = false;
    for (Index i = 0; i < 3; ++i)
    {
        has_one |= std::abs(e.values(i) - 1.0) < 1e-14;
        has_pair |= std::abs(e.values(i) - mu) < 1e-14;
    }
    EXPECT_TRUE(has_one);
    EXPECT_TRUE(has_pair);
}

TEST(InitModel, InconsistentWidthsThrow)
{
    EXPECT_THROW(init_model({2, 4, 3}, {2, 4, 2}, 3, 0), InvalidArgument);
    EXPECT_THROW(init_model({2, 4, 3}, {3, 4, 5}, 3, 0), InvalidArgument);
    EXPECT_THROW(init_model({2, 4, 3}, {3, 4, 2}, 3, 0, {FixedEigenvalue::complex_pair(0.5, 0.5),
                                                         FixedEigenvalue::complex_pair(0.5, 0.5)}),
                 InvalidArgument);
}

TEST(Forward, IdentityTransitionWithInverseDecoderReproducesStart)
{
    LranModel m          = init_model({3, 3}, {3, 3}, 3, 4);
    m.transition.K       = RealMatrix::Identity(3, 3);
    m.encoder.W[0]       = random_matrix(3, 3, 5);
    m.encoder.b[0]       = random_matrix(3, 1, 6).col(0);
    m.decoder.W[0]       = m.encoder.W[0].inverse();
    m.decoder.b[0]       = -m.decoder.W[0] * m.encoder.b[0];
    const RealMatrix seq = random_matrix(3, 5, 7);
    const ForwardResult f = forward(m, seq);
    for (Index t = 0; t < 5; ++t)
        EXPECT_LT((f.x_hat.col(t) - seq.col(0)).norm(), 1e-12);
}

TEST(Forward, SingleStepIsAutoencoder)
{
    const LranModel m     = init_model({3, 6, 2}, {2, 6, 3}, 2, 8);
    const RealMatrix x    = random_matrix(3, 1, 9);
    const ForwardResult f = forward(m, x);
    EXPECT_EQ(f.x_hat, decode(m, encode(m, x)));
    EXPECT_EQ(f.z_hat, f.z);
}

TEST(Forward, RolloutMatchesRepeatedSteps)
{
    const LranModel m     = init_model({3, 6, 4}, {4, 6, 3}, 4, 10);
    const RealMatrix seq  = random_matrix(3, 7, 11);
    const ForwardResult f = forward(m, seq);
    RealVector z          = encode(m, seq.col(0));
    for (Index t = 0; t < 7; ++t)
    {
        EXPECT_LT((f.z_hat.col(t) - z).norm(), 1e-12);
        z = m.transition.K.transpose() * z;
    }
    // Composing a rollout of length a with one of length b from its endpoint.
    const RealMatrix zhat3 = f.z_hat.col(3);
    RealVector w           = zhat3;
    for (Index t = 3; t < 7; ++t)
    {
        EXPECT_LT((f.z_hat.col(t) - w).norm(), 1e-12);
        w = m.transition.K.transpose() * w;
    }
}

TEST(Forward, BatchLayoutIsStepMajor)
{
    const auto seqs       = random_sequences(2, 3, 4, 12);
    const SequenceBatch b = make_batch(seqs);
    EXPECT_EQ(b.T, 3);
    EXPECT_EQ(b.B, 4);
    for (Index tau = 0; tau < 3; ++tau)
        for (Index k = 0; k < 4; ++k)
            EXPECT_EQ(b.step(tau).col(k), seqs[static_cast<std::size_t>(k)].col(tau));
}

TEST(Loss, Normalizers)
{
    LossConfig c;
    c.T     = 10;
    c.delta = 0.8;
    EXPECT_NEAR(c.n1(), (1.0 - std::pow(0.8, 10)) / 0.2, 1e-12);
    EXPECT_NEAR(c.n1(), 4.46312, 1e-5);
    EXPECT_NEAR(c.n2(), (1.0 - std::pow(0.8, 9)) / 0.2, 1e-12);
}

TEST(Loss, MatchesNaiveOracle)
{
    for (int trial = 0; trial < 10; ++trial)
    {
        LossConfig c;
        c.T            = 2 + trial % 4;
        c.delta        = 0.5 + 0.05 * trial;
        c.beta         = 0.5 * (trial % 3);
        c.omega_weight = trial % 2 == 0 ? 0.0 : 1e-3;
        const LranModel m = init_model({3, 5, 2}, {2, 5, 3}, 2, 100 + trial);
        const auto seqs   = random_sequences(3, c.T, 5, 200 + 10 * trial);
        EXPECT_NEAR(loss(m, make_batch(seqs), c), naive_loss(m, seqs, c), 1e-12);
    }
}

TEST(Loss, PerfectModelOnStaticSequenceIsZero)
{
    LranModel m    = init_model({2, 2}, {2, 2}, 2, 13);
    m.transition.K = RealMatrix::Identity(2, 2);
    m.encoder.W[0] = RealMatrix::Identity(2, 2);
    m.decoder.W[0] = RealMatrix::Identity(2, 2);
    RealMatrix seq(2, 4);
    seq.colwise() = Eigen::Vector2d(0.3, -1.1);
    LossConfig c;
    c.T = 4;
    EXPECT_EQ(loss(m, make_batch({seq}), c), 0.0);
    LranGradients g;
    loss_and_gradients(m, make_batch({seq}), c, g);
    double norm = 0.0;
    for (const ParamBlock& p : param_blocks(g))
        norm += Eigen::Map<const RealMatrix>(p.data, p.rows, p.cols).squaredNorm();
    EXPECT_LT(std::sqrt(norm), 1e-10);
}

TEST(Loss, IsNonNegative)
{
    LossConfig c;
    c.T = 3;
    for (int trial = 0; trial < 20; ++trial)
    {
        const LranModel m = init_model({2, 4, 2}, {2, 4, 2}, 2, 300 + trial);
        EXPECT_GE(loss(m, make_batch(random_sequences(2, 3, 4, 400 + 5 * trial)), c), 0.0);
    }
}

TEST(Loss, ZeroBetaIgnoresLatentMismatch)
{
    // Latent errors differ between the two models; with beta = 0 only the
    // reconstruction path through the decoder matters.
    LossConfig c;
    c.T    = 3;
    c.beta = 0.0;
    const auto seqs = random_sequences(2, 3, 3, 14);
    LranModel m     = init_model({2, 4, 2}, {2, 4, 2}, 2, 15);
    const double recon_only = naive_loss(m, seqs, c);
    EXPECT_NEAR(loss(m, make_batch(seqs), c), recon_only, 1e-14);
    LossConfig with_latent = c;
    with_latent.beta       = 1.0;
    EXPECT_NE(loss(m, make_batch(seqs), with_latent), recon_only);
}

TEST(Gradients, MatchFiniteDifferences)
{
    for (int seed = 0; seed < 20; ++seed)
    {
        LossConfig c;
        c.T            = 4;
        c.delta        = 0.8;
        c.beta         = 1.0;
        c.omega_weight = seed % 4 == 3 ? 1e-2 : 0.0;
        const LranModel m     = init_model({3, 4, 2}, {2, 4, 3}, 2, 500 + seed);
        const SequenceBatch b = make_batch(random_sequences(3, 4, 3, 600 + 10 * seed));
        LranGradients g;
        loss_and_gradients(m, b, c, g);
        const LranGradients fd = finite_difference(m, b, c, 1e-6);
        for (std::size_t l = 0; l < g.encoder.layers(); ++l)
        {
            EXPECT_LT(relative_gap(g.encoder.W[l], fd.encoder.W[l]), 1e-5) << "seed " << seed << " encoder W" << l;
            EXPECT_LT(relative_gap(g.encoder.b[l], fd.encoder.b[l]), 1e-5) << "seed " << seed << " encoder b" << l;
        }
        for (std::size_t l = 0; l < g.decoder.layers(); ++l)
        {
            EXPECT_LT(relative_gap(g.decoder.W[l], fd.decoder.W[l]), 1e-5) << "seed " << seed << " decoder W" << l;
            EXPECT_LT(relative_gap(g.decoder.b[l], fd.decoder.b[l]), 1e-5) << "seed " << seed << " decoder b" << l;
        }
        EXPECT_LT(relative_gap(g.K, fd.K), 1e-5) << "seed " << seed << " K";
    }
}

TEST(Gradients, ConstrainedBlocksReceiveZeroGradient)
{
    LossConfig c;
    c.T = 4;
    const std::vector<FixedEigenvalue> fixed = {FixedEigenvalue::complex_pair(0.6, 0.5)};
    const LranModel m     = init_model({3, 5, 4}, {4, 5, 3}, 4, 16, fixed);
    const SequenceBatch b = make_batch(random_sequences(3, 4, 3, 17));
    LranGradients g;
    loss_and_gradients(m, b, c, g);
    EXPECT_EQ(g.K.topRows(2).norm(), 0.0);
    EXPECT_EQ(g.K.leftCols(2).norm(), 0.0);
    EXPECT_GT(g.K.bottomRightCorner(2, 2).norm(), 0.0);
    const LranGradients fd = finite_difference(m, b, c, 1e-6);
    EXPECT_LT(relative_gap(g.K, fd.K), 1e-5);
}

TEST(Train, LossDecreasesOnLinearData)
{
    const auto data = rotation_orbits(40, 30, 18);
    LossConfig c;
    c.T = 5;
    AdamConfig opt;
    opt.lr0         = 3e-3;
    opt.total_steps = 1000;
    opt.batch_size  = 20;
    opt.seed        = 19;
    TrainOptions o;
    o.eval_every = 100;
    const LranModel m0  = init_model({2, 16, 2}, {2, 16, 2}, 2, 20);
    const double before = loss(m0, WindowSampler(data, 5).fixed_batch(2000), c);
    const TrainResult r = train(m0, data, {}, c, opt, o);
    ASSERT_EQ(r.history.size(), 10u);
    EXPECT_EQ(r.steps, 1000);
    EXPECT_LT(r.history.back().eval_loss, 0.2 * before);
}

TEST(Train, SameSeedIsBitIdentical)
{
    const auto data = rotation_orbits(10, 12, 21);
    LossConfig c;
    c.T = 4;
    AdamConfig opt;
    opt.total_steps = 60;
    opt.batch_size  = 8;
    opt.seed        = 22;
    const LranModel m0 = init_model({2, 6, 3}, {3, 6, 2}, 3, 23);
    TrainResult a      = train(m0, data, {}, c, opt);
    TrainResult b      = train(m0, data, {}, c, opt);
    auto pa = param_blocks(a.model);
    auto pb = param_blocks(b.model);
    for (std::size_t k = 0; k < pa.size(); ++k)
        EXPECT_EQ(0, std::memcmp(pa[k].data, pb[k].data, sizeof(double) * static_cast<std::size_t>(pa[k].size())));
    opt.seed        = 23;
    TrainResult cdiff = train(m0, data, {}, c, opt);
    EXPECT_NE(cdiff.model.transition.K, a.model.transition.K);
}

TEST(Train, ConstrainedEntriesStayBitIdentical)
{
    const auto data = rotation_orbits(10, 12, 24);
    LossConfig c;
    c.T = 4;
    AdamConfig opt;
    opt.total_steps = 200;
    opt.batch_size  = 8;
    const std::vector<FixedEigenvalue> fixed = {FixedEigenvalue::real(1.0),
                                                FixedEigenvalue::from_continuous(duffing_lambda, 0.25)};
    const LranModel m0  = init_model({2, 6, 5}, {5, 6, 2}, 5, 25, fixed);
    const TrainResult r = train(m0, data, {}, c, opt);
    const RealMatrix& k0 = m0.transition.K;
    const RealMatrix& k1 = r.model.transition.K;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            if (!m0.transition.trainable(i, j))
                EXPECT_EQ(k0(i, j), k1(i, j));
    EXPECT_NE(k0.bottomRightCorner(2, 2), k1.bottomRightCorner(2, 2));
}

TEST(Train, NonFiniteLossReportsStep)
{
    auto data        = rotation_orbits(3, 8, 26);
    data[0](0, 0)    = std::nan("");
    data[1](0, 0)    = std::nan("");
    data[2](0, 0)    = std::nan("");
    LossConfig c;
    c.T = 8;
    AdamConfig opt;
    opt.total_steps = 5;
    opt.batch_size  = 2;
    try
    {
        train(init_model({2, 4, 2}, {2, 4, 2}, 2, 27), data, {}, c, opt);
        FAIL();
    }
    catch (const NumericalError& e)
    {
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
    }
}

TEST(Train, LearningRateSchedule)
{
    AdamConfig opt;
    opt.lr0          = 1e-3;
    opt.decay_factor = 0.01;
    opt.decay_steps  = 400000;
    EXPECT_DOUBLE_EQ(opt.learning_rate(0), 1e-3);
    EXPECT_NEAR(opt.learning_rate(400000), 1e-5, 1e-18);
    EXPECT_NEAR(opt.learning_rate(200000), 1e-4, 1e-16);
}

TEST(WindowSampler, WindowsStayInsideTrajectories)
{
    std::vector<RealMatrix> trajs;
    for (Index k = 0; k < 4; ++k)
    {
        RealMatrix t(2, 5 + k);
        for (Index j = 0; j < t.cols(); ++j)
            t.col(j) << static_cast<double>(k), static_cast<double>(j);
        trajs.push_back(t);
    }
    const WindowSampler s(trajs, 5);
    EXPECT_EQ(s.size(), 1 + 2 + 3 + 4);
    for (Index i = 0; i < s.size(); ++i)
    {
        const RealMatrix w = s.window(i);
        for (Index j = 1; j < 5; ++j)
        {
            EXPECT_EQ(w(0, j), w(0, 0));
            EXPECT_EQ(w(1, j), w(1, j - 1) + 1.0);
        }
    }
    EXPECT_THROW(WindowSampler(trajs, 9), InvalidArgument);
}

TEST(Spectrum, ConstrainedEigenvaluesAreExact)
{
    const double dt = 0.25;
    const std::vector<FixedEigenvalue> fixed = {FixedEigenvalue::real(1.0),
                                                FixedEigenvalue::from_continuous(duffing_lambda, dt)};
    const LranModel m         = init_model({2, 8, 3}, {3, 8, 2}, 3, 28, fixed);
    const RealMatrix x        = random_matrix(2, 30, 29);
    const KoopmanSpectrum s   = lran_spectrum(m, x, dt);
    const ComplexVector lam   = s.continuous();
    int found = 0;
    for (Index i = 0; i < lam.size(); ++i)
    {
        if (std::abs(lam(i)) < 1e-12)
            ++found;
        if (std::abs(lam(i) - duffing_lambda) < 1e-12 || std::abs(lam(i) - std::conj(duffing_lambda)) < 1e-12)
            ++found;
    }
    EXPECT_EQ(found, 3);
    EXPECT_EQ(s.modes.modes.rows(), 2);
    const ComplexMatrix phi = s.eigenfunctions(x);
    EXPECT_LT((phi - s.right.transpose() * encode(m, x).cast<Complex>()).norm(), 1e-12);
}

TEST(Manifold, ZeroCoordinateIsFinite)
{
    const LranModel m = init_model({3, 6, 4}, {4, 6, 3}, 4, 30);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    const RealMatrix x = manifold_param(m, e, 0, ComplexVector::Zero(1));
    EXPECT_TRUE(x.allFinite());
    EXPECT_EQ(x, decode(m, RealMatrix::Zero(4, 1)));
}

TEST(Manifold, ProjectionInvertsParameterization)
{
    const LranModel m = init_model({3, 6, 4}, {4, 6, 3}, 4, 31);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    // Latent points of encoded data, projected onto the pair and re-lifted.
    const RealMatrix x  = random_matrix(3, 10, 32);
    const ComplexVector alpha = manifold_project(m, e, 0, x);
    for (Index k = 0; k < alpha.size(); ++k)
    {
        const RealVector z = manifold_latent(e, 0, alpha(k));
        const Complex back = e.right.col(0).transpose() * z.cast<Complex>();
        EXPECT_LT(std::abs(back - alpha(k)), 1e-12);
    }
}

TEST(Manifold, EvolutionIsMultiplicationByEigenvalue)
{
    const LranModel m = init_model({3, 6, 4}, {4, 6, 3}, 4, 33);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    for (Index j : {0, 2})
    {
        const Complex alpha(0.3, -0.7);
        const RealVector z0 = manifold_latent(e, j, alpha);
        const RealVector z1 = m.transition.K.transpose() * z0;
        EXPECT_LT((z1 - manifold_latent(e, j, e.values(j) * alpha)).norm(), 1e-12);
        ComplexVector one(1);
        one(0) = e.values(j) * alpha;
        EXPECT_LT((manifold_param(m, e, j, one) - decode(m, z1)).norm(), 1e-12);
    }
}

TEST(Manifold, RealEigenvalueThrows)
{
    const LranModel m = init_model({3, 6, 3}, {3, 6, 3}, 3, 34);
    const EigPair e   = general_eig_binormalized(m.transition.K);
    Index real_index  = -1;
    for (Index i = 0; i < 3; ++i)
        if (std::abs(e.values(i).imag()) < 1e-12)
            real_index = i;
    ASSERT_GE(real_index, 0);
    EXPECT_THROW(manifold_latent(e, real_index, Complex(1.0, 0.0)), InvalidArgument);
}

TEST(Predict, RolloutAgreesWithSingleState)
{
    const LranModel m  = init_model({3, 6, 4}, {4, 6, 3}, 4, 35);
    const RealMatrix x = random_matrix(3, 5, 36);
    const auto roll    = lran_rollout(m, x, 6);
    for (Index j = 0; j < 5; ++j)
    {
        const RealMatrix p = lran_predict(m, x.col(j), 6);
        for (Index t = 0; t <= 6; ++t)
            EXPECT_LT((p.col(t) - roll[static_cast<std::size_t>(t)].col(j)).norm(), 1e-13);
    }
}

TEST(Checkpoint, RoundTripIsExact)
{
    const std::vector<FixedEigenvalue> fixed = {FixedEigenvalue::real(1.0)};
    Checkpoint c;
    c.model  = init_model({2, 5, 3}, {3, 5, 2}, 3, 37, fixed);
    c.model.encoder.b[0](1) = 0.125;
    c.config = {{"T", 4}};
    c.seed   = 99;
    c.step   = 1234;
    const auto path = std::filesystem::temp_directory_path() / "koopman_test_checkpoint.bin";
    save_checkpoint(path.string(), c);
    const Checkpoint r = load_checkpoint(path.string());
    std::filesystem::remove(path);
    EXPECT_EQ(r.seed, 99u);
    EXPECT_EQ(r.step, 1234);
    EXPECT_EQ(r.config, c.config);
    ASSERT_EQ(r.model.transition.fixed.size(), 1u);
    EXPECT_EQ(r.model.transition.fixed[0].sigma, 1.0);
    LranModel a = c.model;
    LranModel b = r.model;
    auto pa     = param_blocks(a);
    auto pb     = param_blocks(b);
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k)
        EXPECT_EQ(Eigen::Map<const RealMatrix>(pa[k].data, pa[k].rows, pa[k].cols),
                  Eigen::Map<const RealMatrix>(pb[k].data, pb[k].rows, pb[k].cols));
}

TEST(Checkpoint, WrongMagicIsIoError)
{
    const auto path = std::filesystem::temp_directory_path() / "koopman_test_not_a_checkpoint.bin";
    {
        std::FILE* f = std::fopen(path.string().c_str(), "wb");
        std::fputs("definitely not a checkpoint", f);
        std::fclose(f);
    }
    EXPECT_THROW(load_checkpoint(path.string()), IoError);
    std::filesystem::remove(path);
    EXPECT_THROW(load_checkpoint(path.string()), IoError);
}
