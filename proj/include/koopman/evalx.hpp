///
/// \file evalx.hpp
///
/// Prediction error curves, basin classification from eigenfunction values,
/// and eigenvalue comparison tables.
///
#ifndef KOOPMAN_EVALX_HPP
#define KOOPMAN_EVALX_HPP

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <string>
#include <vector>

#include <koopman/data/snapshots.hpp>
#include <koopman/spectrum.hpp>

namespace koopman::evalx
{

using io::Json;

struct ErrorCurve
{
    RealVector horizons;          // prediction times h dt
    RealVector mean_sq_rel_error; // one entry per horizon
    Index n_examples = 0;
    std::string model_tag;
};

/// Given q initial states (n x q) returns max_horizon + 1 matrices of predictions.
using BatchPredictor = std::function<std::vector<RealMatrix>(const RealMatrix&, Index)>;

///
/// Mean over start points t (with t + max_horizon inside the trajectory,
/// every `stride`-th one) of |x_hat_{t+h} - x_{t+h}|^2 / |x_{t+h}|^2, for
/// h = 1..max_horizon. The same start points are used at every horizon.
///
inline ErrorCurve error_vs_horizon(const BatchPredictor& predict, const data::SnapshotSet& test, Index max_horizon,
                                   const std::string& tag = "", Index stride = 1)
{
    detail::require(max_horizon >= 1 && stride >= 1, "error_vs_horizon: max_horizon and stride must be positive");
    std::vector<std::pair<std::size_t, Index>> starts;
    for (std::size_t k = 0; k < test.trajectories.size(); ++k)
        for (Index t = 0; t + max_horizon < test.trajectories[k].cols(); t += stride)
            starts.emplace_back(k, t);
    if (starts.empty())
        throw InvalidArgument("error_vs_horizon: no trajectory is longer than the maximum horizon");

    const Index n = test.state_dim();
    const auto q  = static_cast<Index>(starts.size());
    RealMatrix x0(n, q);
    for (Index j = 0; j < q; ++j)
        x0.col(j) = test.trajectories[starts[static_cast<std::size_t>(j)].first].col(starts[static_cast<std::size_t>(j)].second);
    const std::vector<RealMatrix> pred = predict(x0, max_horizon);
    detail::require(static_cast<Index>(pred.size()) == max_horizon + 1, "error_vs_horizon: predictor returned the wrong horizon count");

    ErrorCurve c;
    c.model_tag  = tag;
    c.n_examples = q;
    c.horizons.resize(max_horizon);
    c.mean_sq_rel_error.resize(max_horizon);
    for (Index h = 1; h <= max_horizon; ++h)
    {
        const RealMatrix& p = pred[static_cast<std::size_t>(h)];
        detail::require(p.rows() == n && p.cols() == q, "error_vs_horizon: prediction shape mismatch");
        double sum = 0.0;
        for (Index j = 0; j < q; ++j)
        {
            const auto& [k, t] = starts[static_cast<std::size_t>(j)];
            const auto truth   = test.trajectories[k].col(t + h);
            sum += (p.col(j) - truth).squaredNorm() / truth.squaredNorm();
        }
        c.horizons(h - 1)          = static_cast<double>(h) * test.dt;
        c.mean_sq_rel_error(h - 1) = sum / static_cast<double>(q);
    }
    return c;
}

struct BasinResult
{
    double accuracy  = 0.5;
    double threshold = 0.0;
    double rotation  = 0.0; // phase theta applied as exp(-i theta) before taking the real part
    std::string warning;
};

///
/// The complex values are rotated by the phase that maximizes the variance
/// of their real part, then thresholded at the median. Accuracy is taken over
/// both orientations of the threshold.
///
inline BasinResult basin_classify(const ComplexVector& values, const std::vector<int>& labels)
{
    detail::require(values.size() == static_cast<Index>(labels.size()), "basin_classify: size mismatch");
    detail::require(values.size() > 0, "basin_classify: no points");
    BasinResult r;
    const Complex mean = values.mean();
    const ComplexVector c = values.array() - mean;
    Complex s2{0.0, 0.0};
    for (Index i = 0; i < c.size(); ++i)
        s2 += c(i) * c(i);
    r.rotation = 0.5 * std::arg(s2);
    const Complex rot = std::polar(1.0, -r.rotation);

    std::vector<double> proj(static_cast<std::size_t>(values.size()));
    for (Index i = 0; i < values.size(); ++i)
        proj[static_cast<std::size_t>(i)] = (values(i) * rot).real();
    std::vector<double> sorted = proj;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    r.threshold = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    const double spread = sorted.back() - sorted.front();
    if (!(spread > 1e-12 * std::max(1.0, std::abs(sorted.back()))))
    {
        r.accuracy = 0.5;
        r.warning  = "eigenfunction values are constant; classification is uninformative";
        return r;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < proj.size(); ++i)
        correct += ((proj[i] > r.threshold) == (labels[i] > 0)) ? 1 : 0;
    const double acc = static_cast<double>(correct) / static_cast<double>(proj.size());
    r.accuracy = std::max(acc, 1.0 - acc);
    return r;
}

///
/// Index of the eigenvalue whose continuous counterpart is nearest 0,
/// searched among real eigenvalues first.
///
inline Index stationary_eigenvalue_index(const ComplexVector& mu)
{
    Index best   = -1;
    double score = 0.0;
    for (int pass = 0; pass < 2 && best < 0; ++pass)
        for (Index k = 0; k < mu.size(); ++k)
        {
            if (pass == 0 && std::abs(mu(k).imag()) > 1e-12 * std::max(1.0, std::abs(mu(k))))
                continue;
            const double s = std::abs(std::log(mu(k)));
            if (best < 0 || s < score)
            {
                best  = k;
                score = s;
            }
        }
    return best;
}

struct SpectrumEntry
{
    std::string model;
    Complex mu;
    Complex lambda;
    Index partner = -1; // index in the other model's list
    double distance = 0.0;
};

struct SpectrumTable
{
    std::vector<std::string> models;
    std::vector<std::vector<SpectrumEntry>> entries; // one list per model
};

///
/// Eigenvalue listing per model with nearest pairing against the first
/// model (the first model is paired against the second when present).
///
inline SpectrumTable spectrum_table(const std::vector<std::pair<std::string, const KoopmanSpectrum*>>& models)
{
    detail::require(!models.empty(), "spectrum_table: need at least one model");
    SpectrumTable t;
    for (const auto& [name, s] : models)
    {
        t.models.push_back(name);
        std::vector<SpectrumEntry> list;
        const ComplexVector lam = s->continuous();
        for (Index k = 0; k < s->values.size(); ++k)
            list.push_back({name, s->values(k), lam(k)});
        t.entries.push_back(std::move(list));
    }
    for (std::size_t m = 0; m < t.entries.size(); ++m)
    {
        const std::size_t ref = m == 0 ? (t.entries.size() > 1 ? 1 : 0) : 0;
        for (auto& e : t.entries[m])
        {
            const auto& other = t.entries[ref];
            for (std::size_t k = 0; k < other.size(); ++k)
            {
                const double d = std::abs(e.mu - other[k].mu);
                if (e.partner < 0 || d < e.distance)
                {
                    e.partner  = static_cast<Index>(k);
                    e.distance = d;
                }
            }
        }
    }
    return t;
}

inline void write_curve_csv(const std::string& path, const ErrorCurve& c)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoError(path + ": cannot open for writing");
    os << std::setprecision(17) << "horizon,error\n";
    for (Index i = 0; i < c.horizons.size(); ++i)
        os << c.horizons(i) << ',' << c.mean_sq_rel_error(i) << '\n';
    if (!os)
        throw IoError(path + ": write failed");
}

inline Json curve_to_json(const ErrorCurve& c)
{
    return {{"model", c.model_tag},
            {"n_examples", c.n_examples},
            {"horizons", io::vector_to_json(c.horizons)},
            {"mean_sq_rel_error", io::vector_to_json(c.mean_sq_rel_error)}};
}

inline void write_spectrum_csv(const std::string& path, const SpectrumTable& t)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw IoError(path + ": cannot open for writing");
    os << std::setprecision(17) << "model,index,mu_re,mu_im,abs_mu,lambda_re,lambda_im,partner,distance\n";
    for (const auto& list : t.entries)
        for (std::size_t k = 0; k < list.size(); ++k)
        {
            const auto& e = list[k];
            os << e.model << ',' << k << ',' << e.mu.real() << ',' << e.mu.imag() << ',' << std::abs(e.mu) << ','
               << e.lambda.real() << ',' << e.lambda.imag() << ',' << e.partner << ',' << e.distance << '\n';
        }
    if (!os)
        throw IoError(path + ": write failed");
}

} // namespace koopman::evalx

#endif
