#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Cholesky>

#include "random.hpp"
#include "signal.hpp"

namespace phasedc {

struct EigenEstimate
{
    double value = 0.0;
    Vector vector;
    int iterations = 0;
    bool converged = false;
};

inline Vector random_unit_vector(Eigen::Index dim, Rng& rng)
{
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.gaussian();
    const double nrm = v.norm();
    if (nrm > 0.0) v /= nrm;
    return v;
}

/// Leading eigenpair of a symmetric PSD operator given as v -> Hv.
/// Stops when ||v_{k+1} - v_k|| <= tol (eigenvector sign fixed by the PSD
/// assumption) or after max_iters.
template <class Apply>
EigenEstimate power_iteration(Apply&& apply, Eigen::Index dim, std::uint64_t seed, double tol, int max_iters)
{
    Rng rng(seed);
    EigenEstimate out;
    out.vector = random_unit_vector(dim, rng);
    Vector hv(dim);
    for (out.iterations = 1; out.iterations <= max_iters; ++out.iterations) {
        apply(out.vector, hv);
        out.value = out.vector.dot(hv);
        const double nrm = hv.norm();
        if (nrm == 0.0) {
            out.value = 0.0;
            out.converged = true;
            return out;
        }
        hv /= nrm;
        const double change = (hv - out.vector).norm();
        out.vector.swap(hv);
        if (change <= tol) {
            out.converged = true;
            return out;
        }
    }
    out.iterations = max_iters;
    return out;
}

/// Smallest eigenvalue of a dense symmetric PSD matrix by inverse power
/// iteration on an LDL^T factorization. Returns 0 when the matrix is
/// numerically singular.
inline double smallest_eigenvalue_psd(const Matrix& h, std::uint64_t seed, double tol = 1e-8, int max_iters = 500)
{
    const Eigen::Index dim = h.rows();
    if (dim == 0) return 0.0;
    const double scale = h.diagonal().cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;

    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success) return 0.0;
    const Vector d = ldlt.vectorD();
    if (d.minCoeff() <= 1e-14 * scale) return 0.0;

    Rng rng(seed);
    Vector v = random_unit_vector(dim, rng);
    double rayleigh = v.dot(h * v);
    for (int it = 0; it < max_iters; ++it) {
        Vector w = ldlt.solve(v);
        const double nrm = w.norm();
        if (!std::isfinite(nrm) || nrm == 0.0) return 0.0;
        v = w / nrm;
        const double next = v.dot(h * v);
        const bool done = std::abs(next - rayleigh) <= tol * std::max(std::abs(next), 1e-300);
        rayleigh = next;
        if (done) break;
    }
    return std::max(rayleigh, 0.0);
}

} // namespace phasedc
