#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "ensemble.hpp"
#include "power_iteration.hpp"

namespace phasedc {

struct InitResult
{
    Signal x;
    bool uninformed = false; // link was not SquareModulus; x is a random unit vector
};

/// Spectral initialization.
///
/// Leading eigenvector v of Y = (1/m) sum_i b_i a_i a_i^* (embedded), by
/// power iteration from a seeded random start, scaled to the norm estimate
/// sqrt(mean b) for real fields and sqrt(mean b / 2) for complex Gaussian
/// fields (E|a^T z|^2 = 2 ||z||^2 there). The sign or phase of v is
/// arbitrary.
inline InitResult spectral_init_report(const MeasurementEnsemble& ensemble, std::uint64_t seed)
{
    const Vector& b = ensemble.values();
    const auto d = static_cast<Eigen::Index>(ensemble.dim());

    if (!ensemble.link().is_square_modulus()) {
        Rng rng(seed);
        return {Signal(ensemble.field(), ensemble.n(), random_unit_vector(d, rng)), true};
    }
    if ((b.array() == 0.0).all()) return {Signal(ensemble.field(), ensemble.n()), false};

    const double inv_m = 1.0 / static_cast<double>(ensemble.m());
    Vector re, im, wr, wi;
    auto apply = [&](const Vector& v, Vector& out) {
        ensemble.project(v, re, im);
        wr = inv_m * b.cwiseProduct(re);
        if (ensemble.field() == FieldTag::Complex) wi = inv_m * b.cwiseProduct(im);
        ensemble.backproject(wr, wi, out);
    };
    EigenEstimate top = power_iteration(apply, d, seed, 1e-10, 5000);

    double mean_b = b.mean();
    if (ensemble.field() == FieldTag::Complex) mean_b *= 0.5;
    const double scale = std::sqrt(std::max(mean_b, 0.0));
    return {Signal(ensemble.field(), ensemble.n(), scale * top.vector), false};
}

inline Signal spectral_init(const MeasurementEnsemble& ensemble, std::uint64_t seed)
{
    return spectral_init_report(ensemble, seed).x;
}

/// Reweighted spectral initialization of Gao and Xu.
///
/// Leading (algebraically largest) eigenvector of
///     Y = (1/m) sum_i (1/2 - exp(-b_i / mean b)) a_i a_i^*,
/// scaled like `spectral_init`. The weights are negative for small b_i, so
/// Y is indefinite; a dense symmetric eigensolver is used instead of power
/// iteration. Non-square-modulus links and all-zero b fall back exactly as
/// in `spectral_init_report`.
inline InitResult reweighted_init_report(const MeasurementEnsemble& ensemble, std::uint64_t seed)
{
    const Vector& b = ensemble.values();
    if (!ensemble.link().is_square_modulus() || (b.array() == 0.0).all()) {
        return spectral_init_report(ensemble, seed);
    }
    const double mean_b = b.mean();
    if (!(mean_b > 0.0)) return spectral_init_report(ensemble, seed);

    const double inv_m = 1.0 / static_cast<double>(ensemble.m());
    const Vector w = inv_m * (0.5 - (-b.array() / mean_b).exp()).matrix();
    const Vector zero = Vector::Zero(w.size());
    const Matrix y = ensemble.weighted_gram(w, zero, w);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(y);
    if (eig.info() != Eigen::Success) return spectral_init_report(ensemble, seed);
    Vector v = eig.eigenvectors().col(y.cols() - 1);

    const double scale = std::sqrt(ensemble.field() == FieldTag::Complex ? 0.5 * mean_b : mean_b);
    return {Signal(ensemble.field(), ensemble.n(), scale * v), false};
}

inline Signal reweighted_init(const MeasurementEnsemble& ensemble, std::uint64_t seed)
{
    return reweighted_init_report(ensemble, seed).x;
}

enum class InitMethod { Spectral, Reweighted };

inline std::string_view to_string(InitMethod method)
{
    return method == InitMethod::Spectral ? "spectral" : "reweighted";
}

inline InitMethod parse_init_method(std::string_view text)
{
    if (text == "spectral") return InitMethod::Spectral;
    if (text == "reweighted") return InitMethod::Reweighted;
    throw std::invalid_argument("unknown initializer '" + std::string(text) + "'");
}

inline InitResult initialize(const MeasurementEnsemble& ensemble, InitMethod method, std::uint64_t seed)
{
    return method == InitMethod::Spectral ? spectral_init_report(ensemble, seed)
                                          : reweighted_init_report(ensemble, seed);
}

} // namespace phasedc
