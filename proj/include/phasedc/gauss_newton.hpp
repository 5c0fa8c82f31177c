#pragma once

#include <cmath>
#include <stdexcept>

#include "dc.hpp"
#include "objective.hpp"

namespace phasedc {

namespace detail {

/// Residuals r_i = |<a_i,x>|^2 - b_i and Jacobian rows dr_i/dx (embedded).
inline void gn_residual_jacobian(const MeasurementEnsemble& ens, const Vector& x, Vector& r, Matrix& jac)
{
    Vector re, im;
    ens.project(x, re, im);
    const Matrix& a = ens.vectors();
    const Vector& b = ens.values();
    if (ens.field() == FieldTag::Real) {
        r = re.cwiseAbs2() - b;
        jac = (2.0 * re).asDiagonal() * a;
        return;
    }
    const auto n = static_cast<Eigen::Index>(ens.n());
    r = re.cwiseAbs2() + im.cwiseAbs2() - b;
    // d Re_i / dx = [a_R, -a_I],  d Im_i / dx = [a_I, a_R]
    jac.resize(a.rows(), 2 * n);
    jac.leftCols(n) = (2.0 * re).asDiagonal() * a.leftCols(n) + (2.0 * im).asDiagonal() * a.rightCols(n);
    jac.rightCols(n) = (2.0 * im).asDiagonal() * a.leftCols(n) - (2.0 * re).asDiagonal() * a.rightCols(n);
}

inline double gn_residual_norm(const MeasurementEnsemble& ens, const Vector& x)
{
    Vector re, im;
    ens.project(x, re, im);
    Vector r = re.cwiseAbs2() - ens.values();
    if (ens.field() == FieldTag::Complex) r += im.cwiseAbs2();
    return r.norm();
}

/// Least-squares solution of [J; sqrt(damping) I] d = [-r; 0].
inline Vector gn_direction(const Vector& r, const Matrix& jac, double damping)
{
    const auto d = jac.cols();
    Matrix aug(jac.rows() + (damping > 0.0 ? d : 0), d);
    Vector rhs = Vector::Zero(aug.rows());
    aug.topRows(jac.rows()) = jac;
    rhs.head(jac.rows()) = -r;
    if (damping > 0.0) aug.bottomRows(d) = std::sqrt(damping) * Matrix::Identity(d, d);

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(1e-12);
    cod.compute(aug);
    if (cod.rank() < d) {
        throw std::domain_error("gauss_newton_step: Jacobian is rank deficient; use a positive damping");
    }
    return cod.solve(rhs);
}

} // namespace detail

/// x + d, where d solves the damped normal equations
///     (J^T J + damping I) d = -J^T r,  r_i = |<a_i,x>|^2 - b_i.
/// Throws std::domain_error at x = 0 and when the undamped system is
/// singular.
inline Vector gauss_newton_step(const SplitObjective& obj, const Vector& x, double damping)
{
    const MeasurementEnsemble& ens = obj.ensemble();
    if (!ens.link().is_square_modulus()) throw std::invalid_argument("gauss_newton_step: needs the square-modulus link");
    if (!(damping >= 0.0)) throw std::invalid_argument("gauss_newton_step: damping must be nonnegative");
    if (x.isZero(0.0)) throw std::domain_error("gauss_newton_step: Jacobian vanishes at x = 0");
    Vector r;
    Matrix jac;
    detail::gn_residual_jacobian(ens, x, r, jac);
    return x + detail::gn_direction(r, jac, damping);
}

inline Signal gauss_newton_step(const SplitObjective& obj, const Signal& x, double damping)
{
    obj.check(x, "gauss_newton_step");
    return x.with_data(gauss_newton_step(obj, x.data(), damping));
}

/// Gauss-Newton iteration with damping 1e-12. A step that increases the
/// residual norm is halved (up to 40 times); if none helps the run stops
/// with reason "no_descent". Uses max_outer, step_tol and objective_floor
/// from cfg.
inline DcRun run_gauss_newton(const SplitObjective& obj, const Signal& x1, const DcConfig& cfg = {})
{
    obj.check(x1, "run_gauss_newton");
    cfg.validate();
    constexpr double damping = 1e-12;
    constexpr int max_halvings = 40;

    const MeasurementEnsemble& ens = obj.ensemble();
    DcRun run{x1, {}};
    DcTrace& trace = run.trace;
    trace.negative_values = obj.has_negative_values();

    ObjectiveWorkspace ws;
    Vector x = x1.data();
    Vector grad;
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
    trace.stop_reason = "max_outer";
    if (trace.records[0].F <= cfg.objective_floor) {
        trace.converged = true;
        trace.stop_reason = "objective_floor";
        return run;
    }

    double res = detail::gn_residual_norm(ens, x);
    for (int k = 1; k <= cfg.max_outer; ++k) {
        const Vector full = gauss_newton_step(obj, x, damping) - x;
        double t = 1.0;
        Vector next;
        double next_res = 0.0;
        bool accepted = false;
        for (int h = 0; h <= max_halvings; ++h, t *= 0.5) {
            next = x + t * full;
            next_res = detail::gn_residual_norm(ens, next);
            if (std::isfinite(next_res) && next_res <= res) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            trace.stop_reason = "no_descent";
            break;
        }
        TraceRecord r = record_at(k, next);
        r.step_norm = (next - x).norm();
        r.inner_iters = 1;
        r.backtracked = t < 1.0;
        x = std::move(next);
        res = next_res;
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
    trace.rate = fit_linear_rate(trace.iterates);
    run.x = x1.with_data(x);
    return run;
}

} // namespace phasedc
