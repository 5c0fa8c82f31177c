#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace phasedc;
using namespace phasedc::testing;

namespace {

/// C(2n-2, n-1) from Pascal's rule.
BigInt central_binomial(std::uint64_t n)
{
    const std::size_t top = 2 * n - 2;
    std::vector<BigInt> row{1};
    for (std::size_t r = 1; r <= top; ++r) {
        std::vector<BigInt> next(r + 1, 1);
        for (std::size_t j = 1; j < r; ++j) next[j] = row[j - 1] + row[j];
        row = std::move(next);
    }
    return row[n - 1];
}

} // namespace

TEST(DegreeBound, Examples)
{
    EXPECT_EQ(rank_one_degree_bound(1), 1);
    EXPECT_EQ(rank_one_degree_bound(2), 2);
    EXPECT_EQ(rank_one_degree_bound(4), 20);
    EXPECT_THROW(rank_one_degree_bound(0), std::invalid_argument);
}

TEST(DegreeBound, CentralBinomialOracle)
{
    for (std::uint64_t n = 1; n <= 30; ++n) EXPECT_EQ(rank_one_degree_bound(n), central_binomial(n)) << "n=" << n;
    // Beyond 64 bits.
    EXPECT_EQ(rank_one_degree_bound(40), central_binomial(40));
    EXPECT_GT(rank_one_degree_bound(40), BigInt(std::numeric_limits<std::uint64_t>::max()));
}

TEST(Certificate, RealRecoveredMinimizerIsPositiveDefinite)
{
    const auto inst = clean_instance(FieldTag::Real, 8, 32, 1);
    SplitObjective obj(inst.ensemble);
    const DcRun run = run_dc(obj, reweighted_init(inst.ensemble, 1));
    ASSERT_LE(dist_up_to_phase(run.x, inst.truth), 1e-6);
    const HessianCertificate cert = certify_minimizer_hessian(obj, run.x, 200);
    EXPECT_EQ(cert.directions, 200);
    EXPECT_GT(cert.min_quadratic_form, 0.0);
    EXPECT_FALSE(cert.flagged);
    EXPECT_FALSE(cert.null_direction_residual.has_value());
}

TEST(Certificate, ComplexPhaseDirectionIsNull)
{
    const auto inst = clean_instance(FieldTag::Complex, 6, 36, 2);
    SplitObjective obj(inst.ensemble);
    const HessianCertificate cert = certify_minimizer_hessian(obj, inst.truth, 50);
    ASSERT_TRUE(cert.null_direction_residual.has_value());
    EXPECT_LE(std::abs(*cert.null_direction_residual), 1e-8 * (1.0 + std::pow(inst.truth.norm(), 4)));
    EXPECT_GE(cert.min_quadratic_form, -1e-8);
}

TEST(Certificate, OriginIsFlagged)
{
    Matrix a(1, 1);
    a << 1.0;
    Vector b(1);
    b << 1.0;
    const SplitObjective obj(MeasurementEnsemble(FieldTag::Real, 1, a, b));
    const HessianCertificate cert = certify_minimizer_hessian(obj, Signal(FieldTag::Real, 1), 10);
    EXPECT_NEAR(cert.min_quadratic_form, -4.0, 1e-12);
    EXPECT_TRUE(cert.flagged);
}

TEST(Certificate, QuarticScaling)
{
    // Doubling z and quadrupling b scales F by 16 and its Hessian form by 4 * 4.
    const auto inst = clean_instance(FieldTag::Real, 5, 20, 3);
    auto scaled = inst.ensemble;
    scaled.set_values(4.0 * inst.ensemble.values());
    const SplitObjective obj(inst.ensemble), obj2(scaled);
    Rng rng(3);
    const Signal x = random_signal(FieldTag::Real, 5, rng);
    const Signal x2 = x.with_data(2.0 * x.data());
    const HessianCertificate c1 = certify_minimizer_hessian(obj, x, 20, 9), c2 = certify_minimizer_hessian(obj2, x2, 20, 9);
    EXPECT_NEAR(c2.min_quadratic_form, 4.0 * c1.min_quadratic_form, 1e-9 * (1.0 + std::abs(c2.min_quadratic_form)));
    EXPECT_NEAR(obj2.eval_F(x2), 16.0 * obj.eval_F(x), 1e-9 * (1.0 + obj2.eval_F(x2)));
    EXPECT_THROW(certify_minimizer_hessian(obj, x, 0), std::invalid_argument);
}
