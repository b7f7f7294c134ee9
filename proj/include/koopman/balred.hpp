///
/// \file balred.hpp
///
/// Balanced reduction of the KDMD feature-space system
///
///   Psi_U(x_{t+1}) = K_hat^T Psi_U(x_t) + Sigma u_t / sqrt(M)
///   x_t            = C Psi_U(x_t),          C = X V Sigma^+
///
/// using finite-horizon balanced POD: the Gramians are never formed, only the
/// impulse-response snapshot factors
///
///   B    = [Sigma, K_hat^T Sigma, ..., (K_hat^T)^T Sigma] / sqrt(M)
///   A_op = [C^T U_op, K_hat C^T U_op, ..., K_hat^T C^T U_op]
///
/// where U_op holds the leading left singular vectors of C B (output
/// projection). The block count is T + 1 for horizon T.
///
#ifndef KOOPMAN_BALRED_HPP
#define KOOPMAN_BALRED_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <koopman/kdmd.hpp>

namespace koopman
{

struct FeatureStateSystem
{
    RealMatrix K_hat;     // r x r, propagates features through its transpose
    RealVector Sigma;     // r
    RealMatrix C;         // n x r
    Index M = 0;          // snapshot count

    Index order() const { return K_hat.rows(); }
    double input_scale() const { return 1.0 / std::sqrt(static_cast<double>(M)); }
};

inline FeatureStateSystem build_feature_system(const KdmdModel& m, const RealMatrix& x)
{
    detail::require(x.cols() == m.snapshots(), "build_feature_system: X must hold the training snapshots");
    FeatureStateSystem sys;
    sys.K_hat = m.K_hat;
    sys.Sigma = m.Sigma;
    sys.C     = x * m.feature_projector().transpose();
    sys.M     = m.snapshots();
    return sys;
}

struct BpodFactors
{
    RealMatrix A_op; // r x p(T+1)
    RealMatrix B;    // r x r(T+1)
    Index horizon         = 0;
    Index projection_rank = 0;
    std::string warning;
};

inline BpodFactors bpod_factors(const FeatureStateSystem& sys, Index horizon, Index out_proj_rank)
{
    detail::require(horizon >= 1, "bpod_factors: horizon must be at least 1");
    detail::require(out_proj_rank >= 1 && out_proj_rank <= sys.C.rows(),
                    "bpod_factors: output projection rank must lie in [1, n]");
    const Index r = sys.order();
    const Index blocks = horizon + 1;

    BpodFactors f;
    f.horizon = horizon;
    f.B.resize(r, r * blocks);
    RealMatrix block = sys.input_scale() * RealMatrix(sys.Sigma.asDiagonal());
    for (Index t = 0; t < blocks; ++t)
    {
        f.B.middleCols(t * r, r) = block;
        block                    = sys.K_hat.transpose() * block;
    }

    const SvdResult cb = svd_economy(sys.C * f.B, 1e-12);
    Index p            = out_proj_rank;
    if (cb.rank() < p)
    {
        f.warning = "output projection rank reduced from " + std::to_string(p) + " to "
                    + std::to_string(cb.rank());
        p = cb.rank();
    }
    f.projection_rank = p;

    f.A_op.resize(r, p * blocks);
    block = sys.C.transpose() * cb.U.leftCols(p);
    for (Index t = 0; t < blocks; ++t)
    {
        f.A_op.middleCols(t * p, p) = block;
        block                       = sys.K_hat * block;
    }
    return f;
}

struct BalancedRom
{
    RealMatrix T_d;     // r x d balancing modes
    RealMatrix S_d;     // r x d adjoint modes
    RealMatrix A_red;   // d x d
    RealMatrix B_red;   // d x r
    RealMatrix C_red;   // n x d
    RealVector hankel;  // retained Hankel singular values
    Index horizon = 0;
    std::shared_ptr<const KdmdModel> source;

    Index order() const { return A_red.rows(); }

    /// S_d^T Sigma^+ V^T: kernel column against the training data -> z.
    RealMatrix encoder() const { return S_d.transpose() * source->feature_projector(); }
};

///
/// Square-root balancing from the snapshot factors. The SVD of
/// H = A_op^T B is obtained from thin QR factors of both sides, so its cost
/// scales with the feature dimension r rather than with the horizon.
///
inline BalancedRom balance_truncate(const FeatureStateSystem& sys, const BpodFactors& f, Index d,
                                    std::shared_ptr<const KdmdModel> source = nullptr)
{
    const Index r = sys.order();
    detail::require(f.A_op.rows() == r && f.B.rows() == r, "balance_truncate: factor shape mismatch");
    detail::require(d >= 1, "balance_truncate: order must be positive");

    Eigen::HouseholderQR<RealMatrix> qa(f.A_op.transpose());
    Eigen::HouseholderQR<RealMatrix> qb(f.B.transpose());
    const Index ka = std::min(f.A_op.cols(), r);
    const Index kb = std::min(f.B.cols(), r);
    const RealMatrix ra = qa.matrixQR().topRows(ka).triangularView<Eigen::Upper>();
    const RealMatrix rb = qb.matrixQR().topRows(kb).triangularView<Eigen::Upper>();

    // H = Qa Ra Rb^T Qb^T
    Eigen::JacobiSVD<RealMatrix> svd(ra * rb.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    Index usable        = 0;
    while (usable < s.size() && s(usable) > 1e-12 * s(0))
        ++usable;
    if (d > usable)
        throw InvalidArgument("balance_truncate: order " + std::to_string(d)
                              + " exceeds the numerical rank of the Hankel matrix (usable rank "
                              + std::to_string(usable) + ")");

    const RealVector isqrt = s.head(d).cwiseSqrt().cwiseInverse();
    BalancedRom rom;
    rom.T_d     = rb.transpose() * svd.matrixV().leftCols(d) * isqrt.asDiagonal();
    rom.S_d     = ra.transpose() * svd.matrixU().leftCols(d) * isqrt.asDiagonal();
    rom.hankel  = s.head(usable);
    rom.horizon = f.horizon;
    rom.A_red   = rom.S_d.transpose() * sys.K_hat.transpose() * rom.T_d;
    rom.B_red   = sys.input_scale() * rom.S_d.transpose() * sys.Sigma.asDiagonal();
    rom.C_red   = sys.C * rom.T_d;
    rom.source  = std::move(source);
    return rom;
}

/// z = S_d^T Sigma^+ V^T k(X_train, x) for each column x.
inline RealMatrix rom_encode(const BalancedRom& rom, const RealMatrix& x_query)
{
    detail::require(rom.source != nullptr, "rom_encode: reduced model has no source KDMD model");
    detail::require(x_query.rows() == rom.source->X_train.rows(), "rom_encode: state dimension mismatch");
    return rom.encoder() * kernel_matrix(rom.source->kernel, rom.source->X_train, x_query);
}

/// Maps reduced coordinates (d x q) back to states (n x q).
using Reconstructor = std::function<RealMatrix(const RealMatrix&)>;

inline Reconstructor linear_reconstructor(const BalancedRom& rom)
{
    return [c = rom.C_red](const RealMatrix& z) -> RealMatrix { return c * z; };
}

/// Predictions for many initial states at once: entry t is n x q.
inline std::vector<RealMatrix> rom_rollout(const BalancedRom& rom, const RealMatrix& x0, Index steps,
                                           const Reconstructor& recon = {})
{
    detail::require(steps >= 0, "rom_predict: steps must be non-negative");
    const Reconstructor out_map = recon ? recon : linear_reconstructor(rom);
    std::vector<RealMatrix> out;
    out.reserve(static_cast<std::size_t>(steps + 1));
    RealMatrix z = rom_encode(rom, x0);
    for (Index t = 0; t <= steps; ++t)
    {
        out.push_back(out_map(z));
        z = rom.A_red * z;
    }
    return out;
}

/// Column t is the predicted state after t steps from x0.
inline RealMatrix rom_predict(const BalancedRom& rom, const RealVector& x0, Index steps,
                              const Reconstructor& recon = {})
{
    const std::vector<RealMatrix> traj = rom_rollout(rom, x0, steps, recon);
    RealMatrix out(x0.size(), steps + 1);
    for (Index t = 0; t <= steps; ++t)
        out.col(t) = traj[static_cast<std::size_t>(t)].col(0);
    return out;
}

///
/// Spectrum of the reduced Koopman matrix A_red^T. Eigenfunctions are
/// w_R^T z(x) and modes are regressed against the given training states.
///
inline KoopmanSpectrum rom_spectrum(const BalancedRom& rom, const RealMatrix& x_train, double dt)
{
    const EigPair eig = general_eig_binormalized(rom.A_red.transpose());
    KoopmanSpectrum s;
    s.values = eig.values;
    s.right  = eig.right;
    s.left   = eig.left;
    s.dt     = dt;
    const RealMatrix z = rom_encode(rom, x_train);
    s.modes  = regression_modes(x_train, pinv(z, 1e-12), eig.left, eig.right.transpose() * z.cast<Complex>());
    s.eigenfunctions = [rom, right = eig.right](const RealMatrix& q) -> ComplexMatrix {
        return right.transpose() * rom_encode(rom, q).cast<Complex>();
    };
    return s;
}

} // namespace koopman

#endif
