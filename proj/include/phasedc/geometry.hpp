#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "objective.hpp"
#include "power_iteration.hpp"
#include "random.hpp"

namespace phasedc {

using BigInt = boost::multiprecision::cpp_int;

/// prod_{i=0}^{n-2} (n+i)/(1+i), exactly. After j factors the running value
/// is C(n-1+j, j), so every division is exact.
inline BigInt rank_one_degree_bound(std::uint64_t n)
{
    if (n == 0) throw std::invalid_argument("rank_one_degree_bound: n must be positive");
    BigInt value = 1;
    for (std::uint64_t i = 0; i + 2 <= n; ++i) {
        value *= n + i;
        value /= i + 1;
    }
    return value;
}

struct HessianCertificate
{
    /// Smallest y^T H_F(x*) y over the sampled unit directions.
    double min_quadratic_form = std::numeric_limits<double>::infinity();
    int directions = 0;
    /// Complex signals: quadratic form along the phase direction [-y*; x*].
    std::optional<double> null_direction_residual;
    /// min_quadratic_form <= 0: x* is not certified as a strict local
    /// minimizer along the sampled directions.
    bool flagged = false;
};

/// Samples `directions` seeded random unit directions and reports the least
/// Hessian quadratic form of F at x_star. Complex signals also report the
/// form along the phase direction i z* = [-y*; x*], which vanishes at exact
/// minimizers.
inline HessianCertificate certify_minimizer_hessian(const SplitObjective& obj, const Signal& x_star, int directions,
                                                    std::uint64_t seed = 0x5eedULL)
{
    obj.check(x_star, "certify_minimizer_hessian");
    if (directions < 1) throw std::invalid_argument("certify_minimizer_hessian: directions must be >= 1");

    const Vector& x = x_star.data();
    const auto d = static_cast<Eigen::Index>(x.size());
    ObjectiveWorkspace ws;
    HessianCertificate report;

    if (x_star.field() == FieldTag::Complex) {
        const auto n = static_cast<Eigen::Index>(x_star.n());
        Vector v(d);
        v << -x.tail(n), x.head(n);
        report.null_direction_residual = obj.hessian_quadratic_form(x, v, ws);
    }

    Rng rng(seed);
    for (int k = 0; k < directions; ++k) {
        const Vector y = random_unit_vector(d, rng);
        report.min_quadratic_form = std::min(report.min_quadratic_form, obj.hessian_quadratic_form(x, y, ws));
        ++report.directions;
    }
    report.flagged = !(report.min_quadratic_form > 0.0);
    return report;
}

} // namespace phasedc
