#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "inner.hpp"
#include "objective.hpp"

namespace phasedc {

struct DcConfig
{
    InnerConfig inner;
    int max_outer = 500;
    double step_tol = 1e-9;
    double objective_floor = 1e-14;
    /// Compute the F2 strong-convexity modulus and check the per-step
    /// descent inequality F(x+) <= F(x) - (l/2)||dx||^2.
    bool audit_descent = true;
    /// Outer iterations between refreshes of the curvature estimates.
    int refresh_every = 10;
    /// Radius of the ball sampled by the Lipschitz estimate, relative to
    /// ||x||.
    double lipschitz_radius = 0.25;

    void validate() const
    {
        inner.validate();
        if (max_outer < 1) throw std::invalid_argument("DcConfig: max_outer must be >= 1");
        if (!(step_tol > 0.0)) throw std::invalid_argument("DcConfig: step_tol must be positive");
        if (refresh_every < 1) throw std::invalid_argument("DcConfig: refresh_every must be >= 1");
    }
};

/// One outer iteration (shared by the DC, sparse and Gauss-Newton drivers).
struct TraceRecord
{
    int iter = 0;
    double F = 0.0;
    double F1 = 0.0;
    double F2 = 0.0;
    /// lambda ||x||_1 + F for the sparse solvers, F otherwise.
    double objective = 0.0;
    double step_norm = 0.0;
    double grad_norm = 0.0;
    int inner_iters = 0;
    /// ||grad F1(x_{k+1}) - grad F2(x_k)|| after the inner solve.
    double stationarity = 0.0;
    double inner_tolerance = 0.0;
    bool backtracked = false;
    /// Strong-convexity modulus used by the descent audit (NaN if unaudited).
    double ell = std::numeric_limits<double>::quiet_NaN();
    bool descent_ok = true;
    std::size_t support_size = 0;
};

struct RateFit
{
    double tau = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
    bool defined() const { return points >= 5; }
};

struct DcTrace
{
    /// records[0] describes the starting point (iter 0).
    std::vector<TraceRecord> records;
    /// Iterates x^(1), x^(2), ... (embedded) when kept; needed by the rate fit.
    std::vector<Vector> iterates;
    bool converged = false;
    std::string stop_reason;
    /// F(x^(1)): the sublevel set {F <= bound} is the working region.
    double sublevel_bound = 0.0;
    double lipschitz_F1 = 0.0;
    bool negative_values = false;
    RateFit rate;

    int outer_iterations() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
    int descent_violations() const
    {
        int count = 0;
        for (const auto& r : records) count += r.descent_ok ? 0 : 1;
        return count;
    }
};

/// Least-squares fit of log ||x_k - x_final|| against k over the tail of
/// the run. tau = exp(slope). Points too close to the final iterate (within
/// 10 x the last step) are excluded; the tail is the later half of the
/// remaining points, at least 5 when available.
inline RateFit fit_linear_rate(const std::vector<Vector>& iterates)
{
    RateFit fit;
    if (iterates.size() < 3) return fit;
    const Vector& last = iterates.back();
    const double last_step = (last - iterates[iterates.size() - 2]).norm();
    const double floor = std::max(10.0 * last_step, 1e-14 * (1.0 + last.norm()));

    std::vector<double> ks, logs;
    for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
        const double e = (iterates[k] - last).norm();
        if (e > floor) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(e));
        }
    }
    const std::size_t total = ks.size();
    if (total < 5) {
        fit.points = static_cast<int>(total);
        return fit;
    }
    const std::size_t take = std::max<std::size_t>(5, total / 2);
    const std::size_t start = total - take;

    double mk = 0.0, ml = 0.0;
    for (std::size_t i = start; i < total; ++i) {
        mk += ks[i];
        ml += logs[i];
    }
    mk /= static_cast<double>(take);
    ml /= static_cast<double>(take);
    double skk = 0.0, skl = 0.0, sll = 0.0;
    for (std::size_t i = start; i < total; ++i) {
        skk += (ks[i] - mk) * (ks[i] - mk);
        skl += (ks[i] - mk) * (logs[i] - ml);
        sll += (logs[i] - ml) * (logs[i] - ml);
    }
    const double slope = skl / skk;
    fit.points = static_cast<int>(take);
    fit.tau = std::min(std::exp(slope), 1.0);
    fit.r_squared = sll > 0.0 ? (skl * skl) / (skk * sll) : 1.0;
    return fit;
}

struct DcStepResult
{
    Vector x;
    InnerResult inner;
};

namespace detail {

/// Inner configuration anchored at x: step_L from the objective's cached
/// Lipschitz estimate (refreshed on request) and, when the method needs it,
/// nu from the smallest curvature of F1 at x.
inline InnerConfig anchored_inner_config(SplitObjective& obj, const Vector& x, const DcConfig& cfg, bool refresh)
{
    if (refresh || !(obj.lipschitz_F1() > 0.0)) obj.estimate_lipschitz_F1(x, cfg.lipschitz_radius * x.norm());
    InnerConfig inner = cfg.inner;
    inner.step_L = obj.lipschitz_F1();
    const bool needs_nu = inner.method == InnerConfig::Method::Nesterov ||
                          (inner.method == InnerConfig::Method::BBNesterov && !inner.momentum);
    if (needs_nu) {
        const double nu = cfg.inner.nu > 0.0 ? cfg.inner.nu : obj.min_curvature_F1(x);
        inner.nu = std::min(nu, inner.step_L);
    }
    if (inner.method == InnerConfig::Method::Nesterov && !(inner.nu > 0.0)) inner.momentum = 0.0;
    return inner;
}

} // namespace detail

/// One DC update: minimize G(x) = F1(x) - <grad F2(x_k), x - x_k> from x_k.
/// `inner` must carry step_L (and nu when the method needs it).
inline DcStepResult dc_step_with(const SplitObjective& obj, const Vector& x_k, const InnerConfig& inner)
{
    InnerProblem problem(obj, x_k);
    DcStepResult out;
    out.inner = solve_inner(problem, x_k, inner);
    out.x = out.inner.x;
    return out;
}

/// One DC update with curvature estimates taken at x_k.
inline Signal dc_step(SplitObjective& obj, const Signal& x_k, const DcConfig& cfg = {})
{
    obj.check(x_k, "dc_step");
    cfg.validate();
    const InnerConfig inner = detail::anchored_inner_config(obj, x_k.data(), cfg, false);
    return x_k.with_data(dc_step_with(obj, x_k.data(), inner).x);
}

struct DcRun
{
    Signal x;
    DcTrace trace;
};

/// Iterates dc_step from x1 until ||x_{k+1} - x_k|| <= step_tol,
/// F <= objective_floor, or max_outer iterations. Never throws on
/// non-convergence.
inline DcRun run_dc(SplitObjective& obj, const Signal& x1, const DcConfig& cfg = {})
{
    obj.check(x1, "run_dc");
    cfg.validate();

    DcRun run{x1, {}};
    DcTrace& trace = run.trace;
    trace.negative_values = obj.has_negative_values();
    const bool audit = cfg.audit_descent && !trace.negative_values;
    const bool constant_f2_curvature = obj.ensemble().link().is_square_modulus();

    ObjectiveWorkspace ws;
    Vector x = x1.data();
    Vector grad(x.size());

    auto record_at = [&](int iter, const Vector& point) {
        TraceRecord r;
        r.iter = iter;
        const SplitValue split = obj.eval_split(point, ws);
        r.F1 = split.f1;
        r.F2 = split.f2;
        r.F = obj.eval_F(point, ws);
        r.objective = r.F;
        obj.grad_F(point, grad, ws);
        r.grad_norm = grad.norm();
        r.support_size = count_support(x1.field(), x1.n(), point);
        return r;
    };

    trace.records.push_back(record_at(0, x));
    trace.iterates.push_back(x);
    trace.sublevel_bound = trace.records[0].F;
    if (trace.records[0].F <= cfg.objective_floor) {
        trace.converged = true;
        trace.stop_reason = "objective_floor";
        trace.lipschitz_F1 = obj.lipschitz_F1();
        return run;
    }

    double ell = std::numeric_limits<double>::quiet_NaN();
    InnerConfig inner;
    trace.stop_reason = "max_outer";
    for (int k = 1; k <= cfg.max_outer; ++k) {
        if ((k - 1) % cfg.refresh_every == 0) {
            inner = detail::anchored_inner_config(obj, x, cfg, true);
            if (audit && (k == 1 || !constant_f2_curvature)) ell = obj.strong_convexity_F2(x);
        }

        DcStepResult step = dc_step_with(obj, x, inner);
        if (!step.x.allFinite()) {
            trace.stop_reason = "non_finite";
            break;
        }
        TraceRecord r = record_at(k, step.x);
        r.step_norm = (step.x - x).norm();
        r.inner_iters = step.inner.iterations;
        r.stationarity = step.inner.grad_norm;
        r.inner_tolerance = step.inner.tolerance;
        r.backtracked = step.inner.backtracked;
        const double prev_F = trace.records.back().F;
        if (audit) {
            r.ell = ell;
            r.descent_ok = r.F <= prev_F - 0.5 * ell * r.step_norm * r.step_norm + 1e-8 * (1.0 + prev_F);
        }
        x = std::move(step.x);
        trace.records.push_back(r);
        trace.iterates.push_back(x);

        if (r.F <= cfg.objective_floor) {
            trace.converged = true;
            trace.stop_reason = "objective_floor";
            break;
        }
        if (r.step_norm <= cfg.step_tol) {
            trace.converged = true;
            trace.stop_reason = "step_tol";
            break;
        }
    }
    trace.lipschitz_F1 = obj.lipschitz_F1();
    trace.rate = fit_linear_rate(trace.iterates);
    run.x = x1.with_data(x);
    return run;
}

} // namespace phasedc
