#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "objective.hpp"

namespace phasedc {

/// Anything the inner solvers can minimize: a smooth convex function with
/// a combined value/gradient evaluation.
template <class P>
concept SmoothProblem = requires(const P& p, const Vector& x, Vector& g) {
    { p.value(x) } -> std::convertible_to<double>;
    { p.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

/// The convex surrogate minimized at each outer DC step:
///     G(x) = F1(x) - <grad F2(anchor), x - anchor>.
class InnerProblem
{
public:
    InnerProblem(const SplitObjective& objective, Vector anchor)
        : objective_(&objective), anchor_(std::move(anchor))
    {
        objective_->grad_F2(anchor_, anchor_grad_F2_, ws_);
    }

    InnerProblem(const SplitObjective& objective, Vector anchor, Vector anchor_grad_F2)
        : objective_(&objective), anchor_(std::move(anchor)), anchor_grad_F2_(std::move(anchor_grad_F2))
    {
    }

    const SplitObjective& objective() const noexcept { return *objective_; }
    const Vector& anchor() const noexcept { return anchor_; }
    const Vector& anchor_grad_F2() const noexcept { return anchor_grad_F2_; }

    double value(const Vector& x) const
    {
        return objective_->eval_F1(x, ws_) - anchor_grad_F2_.dot(x - anchor_);
    }

    double value_and_gradient(const Vector& x, Vector& g) const
    {
        const double f1 = objective_->F1_and_gradient(x, g, ws_);
        g -= anchor_grad_F2_;
        return f1 - anchor_grad_F2_.dot(x - anchor_);
    }

private:
    const SplitObjective* objective_;
    Vector anchor_;
    Vector anchor_grad_F2_;
    mutable ObjectiveWorkspace ws_;
};

struct InnerConfig
{
    enum class Method { GD, Nesterov, BBNesterov };

    Method method = Method::BBNesterov;
    int max_iters = 100;
    /// Absolute tolerance on ||grad G||. Nonpositive selects the default
    /// 1e-9 * (1 + |G(x0)|).
    double grad_tol = 0.0;
    /// Lipschitz estimate of grad G (sets the GD/Nesterov steps and the
    /// first BB step).
    double step_L = 1.0;
    /// Strong-convexity estimate of G; enters the momentum coefficient.
    double nu = 0.0;
    double bb_min = 1e-8;
    double bb_max = 1e8;
    double backtrack_factor = 0.5;
    double sufficient_decrease = 1e-4;
    /// Overrides the momentum coefficient q of the Nesterov-type methods.
    std::optional<double> momentum;
    bool record_path = false;

    void validate() const
    {
        if (max_iters < 1) throw std::invalid_argument("InnerConfig: max_iters must be >= 1");
        if (!(step_L > 0.0)) throw std::invalid_argument("InnerConfig: step_L must be positive");
        if (!(nu >= 0.0)) throw std::invalid_argument("InnerConfig: nu must be nonnegative");
        if (!(bb_min > 0.0) || !(bb_min <= bb_max)) throw std::invalid_argument("InnerConfig: need 0 < bb_min <= bb_max");
        if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
            throw std::invalid_argument("InnerConfig: backtrack_factor must lie in (0, 1)");
        }
        if (momentum && !(*momentum >= 0.0 && *momentum < 1.0)) {
            throw std::invalid_argument("InnerConfig: momentum must lie in [0, 1)");
        }
    }
};

struct InnerResult
{
    Vector x;
    int iterations = 0;
    double grad_norm = 0.0;
    double value = 0.0;
    double initial_value = 0.0;
    double tolerance = 0.0;
    bool converged = false;
    /// GD had to shrink its step below 1/(2 step_L): step_L underestimated L.
    bool backtracked = false;
    /// Best G seen after each iteration (index 0 is G(x0)).
    std::vector<double> best_history;
    /// Iterates in order, when requested.
    std::vector<Vector> path;
};

/// q = (sqrt(L/nu) - 1) / (sqrt(L/nu) + 1).
inline double nesterov_momentum_coeff(double lipschitz, double nu)
{
    if (!(nu > 0.0)) throw std::invalid_argument("nesterov_momentum_coeff: nu must be positive");
    if (!(lipschitz >= nu)) throw std::invalid_argument("nesterov_momentum_coeff: need L >= nu");
    const double r = std::sqrt(lipschitz / nu);
    return (r - 1.0) / (r + 1.0);
}

/// Barzilai-Borwein curvature s.y / ||s||^2 clamped into [lo, hi];
/// nonpositive curvature maps to lo.
inline double bb_step_size(const Vector& s, const Vector& y, double lo, double hi)
{
    const double ss = s.squaredNorm();
    if (!(ss > 0.0)) throw std::invalid_argument("bb_step_size: zero displacement");
    const double beta = s.dot(y) / ss;
    if (!(beta > 0.0)) return lo;
    return std::clamp(beta, lo, hi);
}

namespace detail {

struct BestTracker
{
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    double grad_norm = 0.0;

    /// Values within rounding of the current best are compared by gradient
    /// norm instead; near the minimizer G is flat to machine precision.
    void offer(const Vector& candidate, double g_value, double g_norm)
    {
        const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
        const bool tie = std::isfinite(value) && std::abs(g_value - value) <= rounding;
        if ((!tie && g_value < value) || (tie && g_norm < grad_norm)) {
            x = candidate;
            value = g_value;
            grad_norm = g_norm;
        }
    }
};

inline double resolve_tolerance(const InnerConfig& cfg, double g0)
{
    return cfg.grad_tol > 0.0 ? cfg.grad_tol : 1e-9 * (1.0 + std::abs(g0));
}

/// Returns the converged iterate when it honours G <= G(x0), else the best.
inline void finish(InnerResult& out, BestTracker& best, const Vector& last, double last_value, double last_gnorm)
{
    const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(out.initial_value));
    if (out.converged && last_value <= out.initial_value + rounding) {
        out.x = last;
        out.value = last_value;
        out.grad_norm = last_gnorm;
        return;
    }
    out.x = std::move(best.x);
    out.value = best.value;
    out.grad_norm = best.grad_norm;
}

/// Momentum iteration shared by Nesterov and BB-Nesterov:
///     z+ = u - step * grad G(u),   u+ = z+ + q (z+ - z).
template <SmoothProblem Problem, class StepRule>
InnerResult momentum_descent(const Problem& problem, const Vector& x0, const InnerConfig& cfg, double q, StepRule&& step_for)
{
    InnerResult out;
    Vector u = x0, z_prev = x0, g(x0.size());
    double gu = problem.value_and_gradient(u, g);
    double gnorm = g.norm();
    out.initial_value = gu;
    out.tolerance = resolve_tolerance(cfg, gu);
    out.best_history.push_back(gu);
    if (cfg.record_path) out.path.push_back(u);

    BestTracker best;
    best.offer(u, gu, gnorm);

    Vector u_prev, g_prev;
    for (int j = 0; j < cfg.max_iters; ++j) {
        if (gnorm <= out.tolerance) {
            out.converged = true;
            break;
        }
        const double step = step_for(j, u, g, u_prev, g_prev);
        if (!(step > 0.0)) break;
        Vector z = u - step * g;
        Vector u_next = z + q * (z - z_prev);
        z_prev = std::move(z);
        u_prev = std::move(u);
        g_prev = g;
        u = std::move(u_next);
        gu = problem.value_and_gradient(u, g);
        gnorm = g.norm();
        ++out.iterations;
        if (!std::isfinite(gu)) break;
        best.offer(u, gu, gnorm);
        out.best_history.push_back(std::min(best.value, out.best_history.back()));
        if (cfg.record_path) out.path.push_back(u);
    }
    if (!out.converged && std::isfinite(gu) && gnorm <= out.tolerance) out.converged = true;
    finish(out, best, u, gu, gnorm);
    return out;
}

} // namespace detail

/// Gradient descent with step 1/(2 step_L), halved (persistently) whenever
/// the Armijo condition fails.
template <SmoothProblem Problem>
InnerResult solve_inner_gd(const Problem& problem, const Vector& x0, const InnerConfig& cfg)
{
    cfg.validate();
    InnerResult out;
    Vector z = x0, g(x0.size()), trial_g(x0.size());
    double gz = problem.value_and_gradient(z, g);
    double gnorm = g.norm();
    out.initial_value = gz;
    out.tolerance = detail::resolve_tolerance(cfg, gz);
    out.best_history.push_back(gz);
    if (cfg.record_path) out.path.push_back(z);

    double h = 1.0 / (2.0 * cfg.step_L);
    for (int j = 0; j < cfg.max_iters; ++j) {
        if (gnorm <= out.tolerance) break;
        bool accepted = false;
        Vector trial;
        double g_trial = 0.0;
        while (h > std::numeric_limits<double>::min()) {
            trial = z - h * g;
            g_trial = problem.value_and_gradient(trial, trial_g);
            if (std::isfinite(g_trial) && g_trial <= gz - cfg.sufficient_decrease * h * gnorm * gnorm) {
                accepted = true;
                break;
            }
            // Near the minimizer the decrease drops below the rounding of G;
            // fall back to requiring a smaller gradient.
            const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(gz));
            if (std::isfinite(g_trial) && std::abs(g_trial - gz) <= rounding && trial_g.norm() < gnorm) {
                accepted = true;
                break;
            }
            h *= cfg.backtrack_factor;
            out.backtracked = true;
        }
        if (!accepted) break;
        z = std::move(trial);
        g.swap(trial_g);
        gz = g_trial;
        gnorm = g.norm();
        ++out.iterations;
        out.best_history.push_back(std::min(gz, out.best_history.back()));
        if (cfg.record_path) out.path.push_back(z);
    }
    out.converged = gnorm <= out.tolerance;
    out.x = std::move(z);
    out.value = gz;
    out.grad_norm = gnorm;
    return out;
}

/// Nesterov's accelerated gradient with step 1/step_L and momentum
/// q = nesterov_momentum_coeff(step_L, nu) unless overridden.
template <SmoothProblem Problem>
InnerResult solve_inner_nesterov(const Problem& problem, const Vector& x0, const InnerConfig& cfg)
{
    cfg.validate();
    const double q = cfg.momentum ? *cfg.momentum : nesterov_momentum_coeff(cfg.step_L, cfg.nu);
    const double step = 1.0 / cfg.step_L;
    return detail::momentum_descent(problem, x0, cfg, q,
                                    [step](int, const Vector&, const Vector&, const Vector&, const Vector&) { return step; });
}

/// BB steps combined with Nesterov-type extrapolation. The first step uses
/// curvature step_L; later steps take the BB curvature of the last two
/// extrapolated points and their gradients. Returns the best iterate.
template <SmoothProblem Problem>
InnerResult solve_inner_bb_nesterov(const Problem& problem, const Vector& x0, const InnerConfig& cfg)
{
    cfg.validate();
    double q = 0.0;
    if (cfg.momentum) {
        q = *cfg.momentum;
    } else if (cfg.nu > 0.0 && cfg.step_L >= cfg.nu) {
        q = nesterov_momentum_coeff(cfg.step_L, cfg.nu);
    }
    auto rule = [&cfg](int j, const Vector& u, const Vector& g, const Vector& u_prev, const Vector& g_prev) {
        if (j == 0) return 1.0 / cfg.step_L;
        const Vector s = u - u_prev;
        if (s.squaredNorm() == 0.0) return 0.0;
        return 1.0 / bb_step_size(s, g - g_prev, cfg.bb_min, cfg.bb_max);
    };
    return detail::momentum_descent(problem, x0, cfg, q, rule);
}

template <SmoothProblem Problem>
InnerResult solve_inner(const Problem& problem, const Vector& x0, const InnerConfig& cfg)
{
    switch (cfg.method) {
    case InnerConfig::Method::GD: return solve_inner_gd(problem, x0, cfg);
    case InnerConfig::Method::Nesterov: return solve_inner_nesterov(problem, x0, cfg);
    case InnerConfig::Method::BBNesterov: break;
    }
    return solve_inner_bb_nesterov(problem, x0, cfg);
}

} // namespace phasedc
