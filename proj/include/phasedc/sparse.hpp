#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dc.hpp"
#include "objective.hpp"

namespace phasedc {

inline double soft_threshold(double t, double tau)
{
    if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be nonnegative");
    const double mag = std::abs(t) - tau;
    return mag > 0.0 ? std::copysign(mag, t) : 0.0;
}

/// Coordinatewise soft threshold of an embedded vector. Every embedded
/// entry is shrunk on its own, real and imaginary halves alike.
inline Vector soft_threshold(const Vector& v, double tau)
{
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], tau);
    return out;
}

/// Closed-form minimizer of
///     lambda ||y||_1 + F1(y_k) + grad F(y_k)^T (y - y_k) + (L/2) ||y - y_k||^2,
/// i.e. soft_threshold(y_k - grad F(y_k) / L, lambda / L).
inline Vector prox_l1_step(const Vector& y_k, const Vector& grad_F, double lipschitz, double lambda)
{
    if (!(lipschitz > 0.0)) throw std::invalid_argument("prox_l1_step: L must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("prox_l1_step: lambda must be nonnegative");
    return soft_threshold(Vector(y_k - grad_F / lipschitz), lambda / lipschitz);
}

inline Signal prox_l1_step(const SplitObjective& obj, const Signal& y_k, double lipschitz, double lambda)
{
    obj.check(y_k, "prox_l1_step");
    ObjectiveWorkspace ws;
    Vector g;
    obj.grad_F(y_k.data(), g, ws);
    return y_k.with_data(prox_l1_step(y_k.data(), g, lipschitz, lambda));
}

/// Attouch-Peypouquet weight k / (k + alpha), frozen at K / (K + alpha)
/// after k = K.
inline double ap_momentum(long k, double alpha, long cutoff)
{
    if (!(alpha > 3.0)) throw std::invalid_argument("ap_momentum: alpha must exceed 3");
    if (cutoff < 1) throw std::invalid_argument("ap_momentum: K must be >= 1");
    if (k < 1) throw std::invalid_argument("ap_momentum: k must be >= 1");
    const double kk = static_cast<double>(std::min(k, cutoff));
    return kk / (kk + alpha);
}

/// Keeps the s largest-magnitude coordinates and zeroes the rest. Complex
/// coordinates are ranked by modulus and kept or dropped as a pair. Ties go
/// to the lower index.
inline Vector hard_threshold_project(FieldTag field, std::size_t n, const Vector& y, std::size_t s)
{
    if (s < 1 || s > n) throw std::invalid_argument("hard_threshold_project: s must lie in [1, n]");
    if (static_cast<std::size_t>(y.size()) != embedded_dim(field, n)) {
        throw std::invalid_argument("hard_threshold_project: length does not match dimension");
    }
    if (s == n) return y;
    const auto nn = static_cast<Eigen::Index>(n);
    std::vector<double> mag(n);
    for (Eigen::Index j = 0; j < nn; ++j) {
        mag[static_cast<std::size_t>(j)] = field == FieldTag::Real ? std::abs(y[j]) : std::hypot(y[j], y[j + nn]);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });

    Vector out = Vector::Zero(y.size());
    for (std::size_t r = 0; r < s; ++r) {
        const auto j = static_cast<Eigen::Index>(order[r]);
        out[j] = y[j];
        if (field == FieldTag::Complex) out[j + nn] = y[j + nn];
    }
    return out;
}

inline Signal hard_threshold_project(const Signal& y, std::size_t s)
{
    return y.with_data(hard_threshold_project(y.field(), y.n(), y.data(), s));
}

struct SparseConfig
{
    enum class LipschitzMode { Estimate, Backtracking };

    double lambda = 1e-5;
    int max_iters = 5000;
    double alpha = 4.0;
    long momentum_cutoff = 100;
    /// Apply the Attouch-Peypouquet extrapolation; false gives the plain
    /// proximal DC iteration.
    bool momentum = true;
    /// Enables hard thresholding to s nonzero coordinates after every step.
    std::optional<std::size_t> sparsity_s;
    LipschitzMode lipschitz_mode = LipschitzMode::Backtracking;
    double step_tol = 1e-10;
    /// Radius of the initial Lipschitz estimate, relative to ||x1||.
    double lipschitz_radius = 0.25;
    /// Check lambda||y||_1 + F for sufficient descent on momentum-free runs.
    bool audit_descent = true;

    void validate(std::size_t n) const
    {
        if (!(lambda >= 0.0)) throw std::invalid_argument("SparseConfig: lambda must be nonnegative");
        if (max_iters < 1) throw std::invalid_argument("SparseConfig: max_iters must be >= 1");
        if (!(alpha > 3.0)) throw std::invalid_argument("SparseConfig: alpha must exceed 3");
        if (momentum_cutoff < 1) throw std::invalid_argument("SparseConfig: K must be >= 1");
        if (!(step_tol > 0.0)) throw std::invalid_argument("SparseConfig: step_tol must be positive");
        if (sparsity_s && (*sparsity_s < 1 || *sparsity_s > n)) {
            throw std::invalid_argument("SparseConfig: sparsity s must lie in [1, n]");
        }
    }
};

namespace detail {

inline double l1_norm(const Vector& x) { return x.lpNorm<1>(); }

inline DcRun run_sparse(SplitObjective& obj, const Signal& x1, const SparseConfig& cfg)
{
    obj.check(x1, "run_l1_dc");
    cfg.validate(x1.n());

    const FieldTag field = x1.field();
    const std::size_t n = x1.n();
    const std::size_t s = cfg.sparsity_s.value_or(n);

    DcRun run{x1, {}};
    DcTrace& trace = run.trace;
    trace.negative_values = obj.has_negative_values();
    const bool audit = cfg.audit_descent && !cfg.momentum && !cfg.sparsity_s && !trace.negative_values;

    ObjectiveWorkspace ws;
    Vector y = x1.data();
    if (cfg.sparsity_s) y = hard_threshold_project(field, n, y, s);
    Vector y_prev = y;
    Vector g1, g2, grad;

    auto record_at = [&](int iter, const Vector& point) {
        TraceRecord r;
        r.iter = iter;
        const SplitValue split = obj.split_and_gradients(point, g1, g2, ws);
        r.F1 = split.f1;
        r.F2 = split.f2;
        r.F = obj.eval_F(point, ws);
        r.objective = cfg.lambda * l1_norm(point) + r.F;
        r.grad_norm = (g1 - g2).norm();
        r.support_size = count_support(field, n, point);
        return r;
    };

    trace.records.push_back(record_at(0, y));
    trace.iterates.push_back(y);
    trace.sublevel_bound = trace.records[0].objective;

    double lipschitz = obj.estimate_lipschitz_F1(y, cfg.lipschitz_radius * y.norm());
    const double ell = audit ? obj.strong_convexity_F2(y) : std::numeric_limits<double>::quiet_NaN();

    trace.stop_reason = "max_iters";
    for (int k = 1; k <= cfg.max_iters; ++k) {
        const double beta = cfg.momentum ? ap_momentum(k, cfg.alpha, cfg.momentum_cutoff) : 0.0;
        const Vector w = y + beta * (y - y_prev);
        const SplitValue at_w = obj.split_and_gradients(w, g1, g2, ws);
        grad = g1 - g2;

        Vector next;
        bool backtracked = false;
        for (;;) {
            next = prox_l1_step(w, grad, lipschitz, cfg.lambda);
            if (cfg.lipschitz_mode == SparseConfig::LipschitzMode::Estimate) break;
            const Vector d = next - w;
            const double bound = at_w.f1 + g1.dot(d) + 0.5 * lipschitz * d.squaredNorm();
            const double f1_next = obj.eval_F1(next, ws);
            if (f1_next <= bound + 1e-12 * (1.0 + std::abs(bound)) || !std::isfinite(lipschitz)) break;
            lipschitz *= 2.0;
            backtracked = true;
        }
        if (cfg.sparsity_s) next = hard_threshold_project(field, n, next, s);
        if (!next.allFinite()) {
            trace.stop_reason = "non_finite";
            break;
        }

        TraceRecord r = record_at(k, next);
        r.step_norm = (next - y).norm();
        r.inner_iters = 1;
        r.backtracked = backtracked;
        if (audit) {
            const double prev = trace.records.back().objective;
            r.ell = ell;
            r.descent_ok = r.objective <= prev - 0.5 * ell * r.step_norm * r.step_norm + 1e-8 * (1.0 + prev);
        }
        y_prev = std::move(y);
        y = std::move(next);
        trace.records.push_back(r);
        trace.iterates.push_back(y);

        if (r.step_norm <= cfg.step_tol) {
            trace.converged = true;
            trace.stop_reason = "step_tol";
            break;
        }
    }
    trace.lipschitz_F1 = lipschitz;
    trace.rate = fit_linear_rate(trace.iterates);
    run.x = x1.with_data(y);
    return run;
}

} // namespace detail

/// l1-regularized DC iteration with Attouch-Peypouquet extrapolation:
///     w = y_k + beta_k (y_k - y_{k-1}),  y_{k+1} = prox_l1_step(w).
/// In Backtracking mode L doubles until F1 is majorized at the new point.
/// Requires cfg.sparsity_s to be unset.
inline DcRun run_l1_dc(SplitObjective& obj, const Signal& x1, const SparseConfig& cfg = {})
{
    if (cfg.sparsity_s) throw std::invalid_argument("run_l1_dc: sparsity_s must be unset; use run_l1_dc_hard");
    return detail::run_sparse(obj, x1, cfg);
}

/// As run_l1_dc, projecting every iterate onto the s-sparse vectors.
inline DcRun run_l1_dc_hard(SplitObjective& obj, const Signal& x1, const SparseConfig& cfg)
{
    if (!cfg.sparsity_s) throw std::invalid_argument("run_l1_dc_hard: sparsity_s is required");
    return detail::run_sparse(obj, x1, cfg);
}

} // namespace phasedc
