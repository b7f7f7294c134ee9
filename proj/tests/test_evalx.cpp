#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <koopman/evalx.hpp>

#include "support.hpp"

using namespace koopman;
using namespace koopman::evalx;
using testing_support::random_matrix;

namespace
{

data::SnapshotSet linear_orbits(const RealMatrix& a, Index count, Index length, std::uint64_t seed)
{
    data::SnapshotSet s;
    s.dt = 0.5;
    for (Index k = 0; k < count; ++k)
    {
        RealMatrix t(a.rows(), length);
        t.col(0) = random_matrix(a.rows(), 1, seed + static_cast<std::uint64_t>(k)).col(0);
        for (Index j = 1; j < length; ++j)
            t.col(j) = a * t.col(j - 1);
        s.trajectories.push_back(t);
    }
    return s;
}

BatchPredictor linear_predictor(const RealMatrix& a)
{
    return [a](const RealMatrix& x0, Index h) {
        std::vector<RealMatrix> out{x0};
        for (Index k = 0; k < h; ++k)
            out.push_back(a * out.back());
        return out;
    };
}

KoopmanSpectrum spectrum_of(std::initializer_list<Complex> mu, double dt)
{
    KoopmanSpectrum s;
    s.values.resize(static_cast<Index>(mu.size()));
    Index i = 0;
    for (Complex m : mu)
        s.values(i++) = m;
    s.dt = dt;
    return s;
}

} // namespace

TEST(ErrorCurve, PerfectPredictorHasZeroError)
{
    RealMatrix a(2, 2);
    a << 0.9, 0.2, -0.2, 0.9;
    const data::SnapshotSet test = linear_orbits(a, 3, 20, 1);
    const ErrorCurve c           = error_vs_horizon(linear_predictor(a), test, 5, "exact");
    EXPECT_EQ(c.mean_sq_rel_error.size(), 5);
    EXPECT_LT(c.mean_sq_rel_error.maxCoeff(), 1e-28);
    EXPECT_EQ(c.n_examples, 3 * 15);
    EXPECT_EQ(c.model_tag, "exact");
    for (Index h = 0; h < 5; ++h)
        EXPECT_DOUBLE_EQ(c.horizons(h), 0.5 * static_cast<double>(h + 1));
}

TEST(ErrorCurve, ZeroPredictorHasUnitError)
{
    const data::SnapshotSet test = linear_orbits(0.95 * RealMatrix::Identity(3, 3), 2, 10, 2);
    const BatchPredictor zero    = [](const RealMatrix& x0, Index h) {
        return std::vector<RealMatrix>(static_cast<std::size_t>(h + 1), RealMatrix::Zero(x0.rows(), x0.cols()));
    };
    const ErrorCurve c = error_vs_horizon(zero, test, 4);
    for (Index h = 0; h < 4; ++h)
        EXPECT_DOUBLE_EQ(c.mean_sq_rel_error(h), 1.0);
}

TEST(ErrorCurve, ScaledIdentityMatchesClosedForm)
{
    // Truth x_t = r^t x_0, prediction x_0: relative error (1 - r^{-h})^2 at every start.
    const double r               = 0.8;
    const data::SnapshotSet test = linear_orbits(r * RealMatrix::Identity(2, 2), 4, 12, 3);
    const BatchPredictor hold    = [](const RealMatrix& x0, Index h) {
        return std::vector<RealMatrix>(static_cast<std::size_t>(h + 1), x0);
    };
    const ErrorCurve c = error_vs_horizon(hold, test, 6, "", 2);
    EXPECT_EQ(c.n_examples, 4 * 3);
    for (Index h = 1; h <= 6; ++h)
        EXPECT_NEAR(c.mean_sq_rel_error(h - 1), std::pow(1.0 - std::pow(r, -static_cast<double>(h)), 2), 1e-12);
}

TEST(ErrorCurve, InvariantUnderOrthogonalChangeOfBasis)
{
    RealMatrix a(3, 3);
    a << 0.9, 0.1, 0.0, -0.1, 0.9, 0.0, 0.0, 0.0, 0.5;
    const RealMatrix wrong       = 0.97 * a;
    const data::SnapshotSet test = linear_orbits(a, 3, 15, 4);
    const ErrorCurve base        = error_vs_horizon(linear_predictor(wrong), test, 5);

    const RealMatrix q = random_matrix(3, 3, 5).householderQr().householderQ();
    data::SnapshotSet rotated = test;
    for (auto& t : rotated.trajectories)
        t = q * t;
    const ErrorCurve turned = error_vs_horizon(linear_predictor(q * wrong * q.transpose()), rotated, 5);
    EXPECT_LT((base.mean_sq_rel_error - turned.mean_sq_rel_error).norm(), 1e-12);
    EXPECT_GT(base.mean_sq_rel_error(4), base.mean_sq_rel_error(0));
}

TEST(ErrorCurve, ArgumentErrors)
{
    const data::SnapshotSet test = linear_orbits(RealMatrix::Identity(2, 2), 1, 5, 6);
    const BatchPredictor p       = linear_predictor(RealMatrix::Identity(2, 2));
    EXPECT_THROW(error_vs_horizon(p, test, 5), InvalidArgument);
    EXPECT_THROW(error_vs_horizon(p, test, 0), InvalidArgument);
    const BatchPredictor short_p = [](const RealMatrix& x0, Index) { return std::vector<RealMatrix>{x0}; };
    EXPECT_THROW(error_vs_horizon(short_p, test, 2), InvalidArgument);
}

TEST(Basin, SeparatedValuesClassifyPerfectly)
{
    std::vector<int> labels;
    ComplexVector v(40);
    for (Index i = 0; i < 40; ++i)
    {
        labels.push_back(i % 2 ? 1 : -1);
        v(i) = Complex(i % 2 ? 1.0 + 0.01 * i : -1.0 - 0.01 * i, 0.0);
    }
    EXPECT_DOUBLE_EQ(basin_classify(v, labels).accuracy, 1.0);
    // Flipping the orientation gives the same accuracy.
    EXPECT_DOUBLE_EQ(basin_classify(-v, labels).accuracy, 1.0);
}

TEST(Basin, PhaseRotationDoesNotMatter)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.1);
    std::vector<int> labels;
    ComplexVector v(60);
    for (Index i = 0; i < 60; ++i)
    {
        labels.push_back(i < 30 ? 1 : -1);
        v(i) = Complex(i < 30 ? 1.0 : -1.0, 0.0) + Complex(g(rng), g(rng));
    }
    const double base = basin_classify(v, labels).accuracy;
    EXPECT_DOUBLE_EQ(base, 1.0);
    for (double theta : {0.3, 1.2, 2.5, -0.7})
    {
        const ComplexVector turned = v * std::polar(3.0, theta);
        EXPECT_DOUBLE_EQ(basin_classify(turned, labels).accuracy, base);
        EXPECT_DOUBLE_EQ(basin_classify(turned.array() + Complex(5.0, -2.0), labels).accuracy, base);
    }
}

TEST(Basin, UninformativeValuesScoreNearHalf)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<int> labels;
    ComplexVector v(4000);
    for (Index i = 0; i < v.size(); ++i)
    {
        labels.push_back(coin(rng) ? 1 : -1);
        v(i) = Complex(g(rng), g(rng));
    }
    const BasinResult r = basin_classify(v, labels);
    EXPECT_GE(r.accuracy, 0.5);
    EXPECT_LT(r.accuracy, 0.55);
    EXPECT_TRUE(r.warning.empty());
}

TEST(Basin, ConstantValuesWarn)
{
    const ComplexVector v = ComplexVector::Constant(10, Complex(0.4, 0.1));
    const BasinResult r   = basin_classify(v, std::vector<int>(10, 1));
    EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
    EXPECT_FALSE(r.warning.empty());
    EXPECT_THROW(basin_classify(v, std::vector<int>(9, 1)), InvalidArgument);
}

TEST(Basin, StationaryEigenvaluePrefersRealNearOne)
{
    ComplexVector mu(4);
    mu << Complex(0.99, 0.05), Complex(0.99, -0.05), Complex(0.97, 0.0), Complex(0.5, 0.0);
    EXPECT_EQ(stationary_eigenvalue_index(mu), 2);
    ComplexVector pairs(2);
    pairs << Complex(0.9, 0.2), Complex(0.5, 0.5);
    EXPECT_EQ(stationary_eigenvalue_index(pairs), 0);
}

TEST(SpectrumTable, IdenticalModelsPairAtZeroDistance)
{
    const KoopmanSpectrum a = spectrum_of({{0.9, 0.3}, {0.9, -0.3}, {0.5, 0.0}}, 0.25);
    const KoopmanSpectrum b = spectrum_of({{0.5, 0.0}, {0.9, -0.3}, {0.9, 0.3}}, 0.25);
    const SpectrumTable t   = spectrum_table({{"a", &a}, {"b", &b}});
    ASSERT_EQ(t.entries.size(), 2u);
    for (const auto& list : t.entries)
        for (const auto& e : list)
        {
            EXPECT_EQ(e.distance, 0.0);
            const auto& other = t.entries[&list == &t.entries[0] ? 1 : 0];
            EXPECT_EQ(other[static_cast<std::size_t>(e.partner)].mu, e.mu);
            EXPECT_LT(std::abs(std::exp(e.lambda * 0.25) - e.mu), 1e-14);
        }
}

TEST(SpectrumTable, ConjugateSymmetryOfRealModel)
{
    const KoopmanSpectrum a = spectrum_of({{0.9, 0.3}, {0.9, -0.3}, {0.5, 0.0}}, 0.25);
    const SpectrumTable t   = spectrum_table({{"a", &a}});
    const auto& list        = t.entries[0];
    for (const auto& e : list)
    {
        bool has_conj = false;
        for (const auto& f : list)
            has_conj |= std::abs(f.lambda - std::conj(e.lambda)) < 1e-14;
        EXPECT_TRUE(has_conj);
    }
}

TEST(Export, CsvAndJson)
{
    ErrorCurve c;
    c.horizons          = RealVector::LinSpaced(3, 1.0, 3.0);
    c.mean_sq_rel_error = RealVector::LinSpaced(3, 0.1, 0.3);
    c.n_examples        = 7;
    c.model_tag         = "m";
    const auto path     = (std::filesystem::temp_directory_path() / "koopman_test_curve.csv").string();
    write_curve_csv(path, c);
    const RealMatrix back = data::read_csv(path);
    ASSERT_EQ(back.rows(), 3);
    EXPECT_EQ(back.col(0), c.horizons);
    EXPECT_EQ(back.col(1), c.mean_sq_rel_error);
    const Json j = curve_to_json(c);
    EXPECT_EQ(j.at("n_examples"), 7);
    EXPECT_EQ(j.at("mean_sq_rel_error").size(), 3u);

    const KoopmanSpectrum a = spectrum_of({{0.9, 0.3}, {0.9, -0.3}}, 0.25);
    write_spectrum_csv(path, spectrum_table({{"a", &a}}));
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "model,index,mu_re,mu_im,abs_mu,lambda_re,lambda_im,partner,distance");
    std::filesystem::remove(path);
}
