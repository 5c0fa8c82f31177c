#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace phasedc;
using namespace phasedc::testing;

TEST(SpectralInit, TwoDimensionalExample)
{
    Vector b(2);
    b << 1.0, 0.0;
    const MeasurementEnsemble ens(FieldTag::Real, 2, Matrix::Identity(2, 2), b);
    const Signal x = spectral_init(ens, 3);
    EXPECT_NEAR(std::abs(x.data()[0]), std::sqrt(0.5), 1e-8);
    EXPECT_NEAR(x.data()[1], 0.0, 1e-8);
}

TEST(SpectralInit, ZeroValuesGiveZero)
{
    auto ens = sample_gaussian_ensemble(5, 20, FieldTag::Complex, LinkFunction::square_modulus(), 1);
    ens.set_values(Vector::Zero(20));
    EXPECT_EQ(spectral_init(ens, 1).norm(), 0.0);
    EXPECT_EQ(reweighted_init(ens, 1).norm(), 0.0);
}

TEST(SpectralInit, CloseToTruthWithManyMeasurements)
{
    // At m = 5n the unweighted estimate sits near distance 0.8; m = 20n brings it to about 0.42.
    int close = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = clean_instance(FieldTag::Real, 128, 2560, seed);
        close += dist_up_to_phase(spectral_init(inst.ensemble, seed), inst.truth) <= 0.5 ? 1 : 0;
    }
    EXPECT_GE(close, 95);
}

TEST(SpectralInit, ScaleEquivariant)
{
    const auto inst = clean_instance(FieldTag::Real, 8, 40, 2);
    auto scaled = inst.ensemble;
    scaled.set_values(4.0 * inst.ensemble.values());
    const Signal x = spectral_init(inst.ensemble, 2), y = spectral_init(scaled, 2);
    EXPECT_LE((y.data() - 2.0 * x.data()).norm(), 1e-12);
}

TEST(SpectralInit, Deterministic)
{
    for (FieldTag field : {FieldTag::Real, FieldTag::Complex}) {
        const auto inst = clean_instance(field, 8, 40, 3);
        EXPECT_EQ(spectral_init(inst.ensemble, 9).data(), spectral_init(inst.ensemble, 9).data());
        EXPECT_EQ(reweighted_init(inst.ensemble, 9).data(), reweighted_init(inst.ensemble, 9).data());
    }
}

TEST(SpectralInit, CustomLinkIsUninformed)
{
    const LinkFunction quartic = LinkFunction::custom(
        "quartic", [](std::complex<double> t) { return std::norm(t) * std::norm(t); },
        [](std::complex<double> t) { return 4.0 * std::norm(t) * t; },
        [](std::complex<double> t) {
            const double r = t.real(), i = t.imag(), s = std::norm(t);
            return LinkCurvature{4.0 * s + 8.0 * r * r, 8.0 * r * i, 4.0 * s + 8.0 * i * i};
        });
    const auto ens = sample_gaussian_ensemble(6, 24, FieldTag::Real, quartic, 4);
    const auto meas = measure(ens, Signal::real(Vector::Ones(6)));
    const InitResult r = spectral_init_report(meas, 4);
    EXPECT_TRUE(r.uninformed);
    EXPECT_NEAR(r.x.norm(), 1.0, 1e-12);
    EXPECT_TRUE(reweighted_init_report(meas, 4).uninformed);
}

TEST(SpectralInit, EigenvectorOfWeightedGram)
{
    for (FieldTag field : {FieldTag::Real, FieldTag::Complex}) {
        const auto inst = clean_instance(field, 6, 40, 5);
        const auto& ens = inst.ensemble;
        const double inv_m = 1.0 / static_cast<double>(ens.m());
        const Vector w = inv_m * ens.values();
        const Matrix y = ens.weighted_gram(w, Vector::Zero(w.size()), w);
        Vector v = spectral_init(ens, 5).data();
        v.normalize();
        const double lambda = v.dot(y * v);
        EXPECT_LE((y * v - lambda * v).norm(), 1e-4 * lambda);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(y);
        EXPECT_NEAR(lambda, eig.eigenvalues().maxCoeff(), 1e-6 * lambda);
    }
}

TEST(ReweightedInit, TopEigenvectorOracle)
{
    for (FieldTag field : {FieldTag::Real, FieldTag::Complex}) {
        const auto inst = clean_instance(field, 6, 30, 6);
        const auto& ens = inst.ensemble;
        const double mean_b = ens.values().mean();
        const double inv_m = 1.0 / static_cast<double>(ens.m());

        // Dense Y assembled row by row from outer products.
        const auto d = static_cast<Eigen::Index>(ens.dim());
        Matrix y = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(ens.m()); ++i) {
            const double w = inv_m * (0.5 - std::exp(-ens.values()[i] / mean_b));
            const Vector a = ens.vectors().row(i).transpose();
            if (field == FieldTag::Real) {
                y += w * a * a.transpose();
            } else {
                const auto n = static_cast<Eigen::Index>(ens.n());
                Vector p(d), q(d);
                p << a.head(n), -a.tail(n);
                q << a.tail(n), a.head(n);
                y += w * (p * p.transpose() + q * q.transpose());
            }
        }
        Vector v = reweighted_init(ens, 6).data();
        const double scale = std::sqrt(field == FieldTag::Complex ? 0.5 * mean_b : mean_b);
        EXPECT_NEAR(v.norm(), scale, 1e-10);
        v.normalize();
        Eigen::SelfAdjointEigenSolver<Matrix> eig(y);
        const double top = eig.eigenvalues().maxCoeff();
        EXPECT_NEAR(v.dot(y * v), top, 1e-10);
        EXPECT_LE((y * v - top * v).norm(), 1e-10);
    }
}

TEST(ReweightedInit, AtLeastAsCloseAsSpectralOnAverage)
{
    double spectral = 0.0, reweighted = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto inst = clean_instance(FieldTag::Real, 32, 64, seed);
        spectral += dist_up_to_phase(spectral_init(inst.ensemble, seed), inst.truth);
        reweighted += dist_up_to_phase(reweighted_init(inst.ensemble, seed), inst.truth);
    }
    EXPECT_LT(reweighted, spectral);
}

TEST(InitMethod, ParseAndDispatch)
{
    EXPECT_EQ(parse_init_method("spectral"), InitMethod::Spectral);
    EXPECT_EQ(parse_init_method("reweighted"), InitMethod::Reweighted);
    EXPECT_THROW(parse_init_method("random"), std::invalid_argument);
    EXPECT_EQ(to_string(InitMethod::Reweighted), "reweighted");
    const auto inst = clean_instance(FieldTag::Real, 4, 16, 7);
    EXPECT_EQ(initialize(inst.ensemble, InitMethod::Spectral, 7).x.data(), spectral_init(inst.ensemble, 7).data());
}
