#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "ensemble.hpp"
#include "power_iteration.hpp"
#include "random.hpp"

namespace phasedc {

struct SplitValue
{
    double f1 = 0.0;
    double f2 = 0.0;
    double difference() const { return f1 - f2; }
};

/// Scratch buffers for one caller of SplitObjective. Not shareable between
/// threads; the objective itself is.
struct ObjectiveWorkspace
{
    Vector re, im;   // embedded inner products
    Vector f;        // link values
    Vector gr, gi;   // link gradient components
    Vector wr, wi;   // back-projection weights
    Vector vr, vi;   // projected direction
};

/// F(x) = sum_i (f(<a_i,x>) - b_i)^2 = F1(x) - F2(x) with
///   F1(x) = sum_i f(<a_i,x>)^2 + b_i^2
///   F2(x) = sum_i 2 b_i f(<a_i,x>)
/// Both parts are convex when f is convex and nonnegative and all b_i >= 0.
class SplitObjective
{
public:
    explicit SplitObjective(MeasurementEnsemble ensemble) : ensemble_(std::move(ensemble))
    {
        if (!ensemble_.has_values()) throw std::invalid_argument("SplitObjective: ensemble has no values");
    }

    const MeasurementEnsemble& ensemble() const noexcept { return ensemble_; }
    const Vector& values() const { return ensemble_.values(); }
    std::size_t dim() const noexcept { return ensemble_.dim(); }
    bool has_negative_values() const { return ensemble_.has_negative_values(); }

    void check(const Signal& x, const char* where) const
    {
        if (x.field() != ensemble_.field() || x.n() != ensemble_.n()) {
            throw std::invalid_argument(std::string(where) + ": signal does not match ensemble field/dimension");
        }
    }

    // ---- values -----------------------------------------------------------

    double eval_F(const Vector& x, ObjectiveWorkspace& ws) const
    {
        link_values(x, ws);
        const Vector& b = values();
        double sum = 0.0;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            const double r = ws.f[i] - b[i];
            sum += r * r;
        }
        return sum;
    }

    SplitValue eval_split(const Vector& x, ObjectiveWorkspace& ws) const
    {
        link_values(x, ws);
        return split_from_link(ws);
    }

    double eval_F1(const Vector& x, ObjectiveWorkspace& ws) const { return eval_split(x, ws).f1; }

    double eval_F(const Signal& x) const
    {
        check(x, "eval_F");
        ObjectiveWorkspace ws;
        return eval_F(x.data(), ws);
    }

    SplitValue eval_split(const Signal& x) const
    {
        check(x, "eval_split");
        ObjectiveWorkspace ws;
        return eval_split(x.data(), ws);
    }

    // ---- gradients --------------------------------------------------------

    void grad_F1(const Vector& x, Vector& out, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        ws.wr = 2.0 * ws.f.cwiseProduct(ws.gr);
        if (complex()) ws.wi = 2.0 * ws.f.cwiseProduct(ws.gi);
        ensemble_.backproject(ws.wr, ws.wi, out);
    }

    void grad_F2(const Vector& x, Vector& out, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        const Vector& b = values();
        ws.wr = 2.0 * b.cwiseProduct(ws.gr);
        if (complex()) ws.wi = 2.0 * b.cwiseProduct(ws.gi);
        ensemble_.backproject(ws.wr, ws.wi, out);
    }

    /// grad F1 - grad F2, each accumulated exactly as by grad_F1 / grad_F2.
    void grad_F(const Vector& x, Vector& out, ObjectiveWorkspace& ws) const
    {
        Vector g2;
        grad_F1(x, out, ws);
        grad_F2(x, g2, ws);
        out -= g2;
    }

    /// Split value together with both gradients from one projection.
    SplitValue split_and_gradients(const Vector& x, Vector& g1, Vector& g2, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        const SplitValue v = split_from_link(ws);
        const Vector& b = values();
        ws.wr = 2.0 * ws.f.cwiseProduct(ws.gr);
        if (complex()) ws.wi = 2.0 * ws.f.cwiseProduct(ws.gi);
        ensemble_.backproject(ws.wr, ws.wi, g1);
        ws.wr = 2.0 * b.cwiseProduct(ws.gr);
        if (complex()) ws.wi = 2.0 * b.cwiseProduct(ws.gi);
        ensemble_.backproject(ws.wr, ws.wi, g2);
        return v;
    }

    /// F1 value and gradient from one projection.
    double F1_and_gradient(const Vector& x, Vector& g1, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        const double f1 = split_from_link(ws).f1;
        ws.wr = 2.0 * ws.f.cwiseProduct(ws.gr);
        if (complex()) ws.wi = 2.0 * ws.f.cwiseProduct(ws.gi);
        ensemble_.backproject(ws.wr, ws.wi, g1);
        return f1;
    }

    Vector grad_F1(const Signal& x) const
    {
        return signal_call(x, "grad_F1", [this](const Vector& v, Vector& g, ObjectiveWorkspace& ws) { grad_F1(v, g, ws); });
    }
    Vector grad_F2(const Signal& x) const
    {
        return signal_call(x, "grad_F2", [this](const Vector& v, Vector& g, ObjectiveWorkspace& ws) { grad_F2(v, g, ws); });
    }
    Vector grad_F(const Signal& x) const
    {
        return signal_call(x, "grad_F", [this](const Vector& v, Vector& g, ObjectiveWorkspace& ws) { grad_F(v, g, ws); });
    }

    // ---- curvature --------------------------------------------------------

    /// Hessian-of-F1 times v.
    void hess_vec_F1(const Vector& x, const Vector& v, Vector& out, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        ensemble_.project(v, ws.vr, ws.vi);
        const auto m = static_cast<Eigen::Index>(ensemble_.m());
        ws.wr.resize(m);
        ws.wi.resize(complex() ? m : 0);
        const auto& link = ensemble_.link();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (!complex()) {
                const double c = link.is_square_modulus() ? 2.0 : link.curvature({ws.re[i], 0.0}).rr;
                ws.wr[i] = 2.0 * (ws.gr[i] * ws.gr[i] + ws.f[i] * c) * ws.vr[i];
                continue;
            }
            const LinkCurvature c = link.curvature({ws.re[i], ws.im[i]});
            const double gv = ws.gr[i] * ws.vr[i] + ws.gi[i] * ws.vi[i];
            ws.wr[i] = 2.0 * (gv * ws.gr[i] + ws.f[i] * (c.rr * ws.vr[i] + c.ri * ws.vi[i]));
            ws.wi[i] = 2.0 * (gv * ws.gi[i] + ws.f[i] * (c.ri * ws.vr[i] + c.ii * ws.vi[i]));
        }
        ensemble_.backproject(ws.wr, ws.wi, out);
    }

    /// y^T H_F(x) y with the full Hessian, including the residual-weighted
    /// terms that vanish only at exact interpolation.
    double hessian_quadratic_form(const Vector& x, const Vector& y, ObjectiveWorkspace& ws) const
    {
        link_gradients(x, ws);
        ensemble_.project(y, ws.vr, ws.vi);
        const Vector& b = values();
        const auto& link = ensemble_.link();
        double sum = 0.0;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (!complex()) {
                const double c = link.curvature({ws.re[i], 0.0}).rr;
                const double gv = ws.gr[i] * ws.vr[i];
                sum += 2.0 * gv * gv + 2.0 * (ws.f[i] - b[i]) * c * ws.vr[i] * ws.vr[i];
                continue;
            }
            const LinkCurvature c = link.curvature({ws.re[i], ws.im[i]});
            const double gv = ws.gr[i] * ws.vr[i] + ws.gi[i] * ws.vi[i];
            const double vcv = c.rr * ws.vr[i] * ws.vr[i] + 2.0 * c.ri * ws.vr[i] * ws.vi[i] + c.ii * ws.vi[i] * ws.vi[i];
            sum += 2.0 * gv * gv + 2.0 * (ws.f[i] - b[i]) * vcv;
        }
        return sum;
    }

    double hessian_quadratic_form(const Signal& x, const Signal& y) const
    {
        check(x, "hessian_quadratic_form");
        check(y, "hessian_quadratic_form");
        ObjectiveWorkspace ws;
        return hessian_quadratic_form(x.data(), y.data(), ws);
    }

    /// Dense Hessian of F1 at x.
    Matrix hessian_F1(const Vector& x) const
    {
        ObjectiveWorkspace ws;
        link_gradients(x, ws);
        const auto m = static_cast<Eigen::Index>(ensemble_.m());
        Vector wrr(m), wri(m), wii(m);
        const auto& link = ensemble_.link();
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::complex<double> t(ws.re[i], complex() ? ws.im[i] : 0.0);
            const LinkCurvature c = link.curvature(t);
            const double gi = complex() ? ws.gi[i] : 0.0;
            wrr[i] = 2.0 * (ws.gr[i] * ws.gr[i] + ws.f[i] * c.rr);
            wri[i] = 2.0 * (ws.gr[i] * gi + ws.f[i] * c.ri);
            wii[i] = 2.0 * (gi * gi + ws.f[i] * c.ii);
        }
        return weighted_gram(wrr, wri, wii);
    }

    /// Dense Hessian of F2 at x: sum_i 2 b_i f''(<a_i,x>) (embedded).
    Matrix hessian_F2(const Vector& x) const
    {
        ObjectiveWorkspace ws;
        ensemble_.project(x, ws.re, ws.im);
        const auto m = static_cast<Eigen::Index>(ensemble_.m());
        const Vector& b = values();
        Vector wrr(m), wri(m), wii(m);
        const auto& link = ensemble_.link();
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::complex<double> t(ws.re[i], complex() ? ws.im[i] : 0.0);
            const LinkCurvature c = link.curvature(t);
            wrr[i] = 2.0 * b[i] * c.rr;
            wri[i] = 2.0 * b[i] * c.ri;
            wii[i] = 2.0 * b[i] * c.ii;
        }
        return weighted_gram(wrr, wri, wii);
    }

    /// Upper estimate of the Lipschitz constant of grad F1 near x.
    ///
    /// Power iteration on the Hessian-vector product at the center and at 8
    /// deterministic points on the sphere of the given radius, times 1.1.
    /// The result is folded into a running maximum, so re-queries never
    /// decrease it. Degenerate objectives return 1e-12.
    double estimate_lipschitz_F1(const Vector& x, double radius)
    {
        if (!(radius >= 0.0)) throw std::invalid_argument("estimate_lipschitz_F1: radius must be nonnegative");
        constexpr int boundary_points = 8;
        const auto d = static_cast<Eigen::Index>(dim());
        ObjectiveWorkspace ws;
        Rng rng(derive_seed(0x4c1f5eedULL, ++lipschitz_queries_));
        double largest = 0.0;
        const int samples = radius > 0.0 ? boundary_points + 1 : 1;
        for (int s = 0; s < samples; ++s) {
            Vector point = x;
            if (s > 0) point += radius * random_unit_vector(d, rng);
            auto apply = [&](const Vector& v, Vector& out) { hess_vec_F1(point, v, out, ws); };
            const EigenEstimate e = power_iteration(apply, d, rng.next_u64(), 1e-6, 200);
            largest = std::max(largest, e.value);
        }
        lipschitz_F1_ = std::max({lipschitz_F1_, 1.1 * largest, 1e-12});
        return lipschitz_F1_;
    }

    double estimate_lipschitz_F1(const Signal& x, double radius)
    {
        check(x, "estimate_lipschitz_F1");
        return estimate_lipschitz_F1(x.data(), radius);
    }

    /// Last value returned by estimate_lipschitz_F1 (0 before any query).
    double lipschitz_F1() const noexcept { return lipschitz_F1_; }

    /// Strong-convexity modulus of F2 at x: lambda_min of its Hessian, found
    /// by inverse power iteration. 0 when the Hessian is singular.
    double strong_convexity_F2(const Vector& x) const
    {
        if (has_negative_values()) {
            throw std::domain_error("strong_convexity_F2: requires nonnegative measurement values");
        }
        if ((values().array() == 0.0).all()) return 0.0;
        return smallest_eigenvalue_psd(hessian_F2(x), 0x5eedf2ULL, 1e-8, 500);
    }

    double strong_convexity_F2(const Signal& x) const
    {
        check(x, "strong_convexity_F2");
        return strong_convexity_F2(x.data());
    }

    /// lambda_min of the Hessian of F1 at x (the strong-convexity modulus of
    /// the inner surrogate anchored anywhere).
    double min_curvature_F1(const Vector& x) const
    {
        return smallest_eigenvalue_psd(hessian_F1(x), 0x5eedf1ULL, 1e-8, 500);
    }

private:
    bool complex() const noexcept { return ensemble_.field() == FieldTag::Complex; }

    template <class Fn>
    Vector signal_call(const Signal& x, const char* where, Fn fn) const
    {
        check(x, where);
        ObjectiveWorkspace ws;
        Vector out;
        fn(x.data(), out, ws);
        return out;
    }

    void link_values(const Vector& x, ObjectiveWorkspace& ws) const
    {
        ensemble_.project(x, ws.re, ws.im);
        const auto& link = ensemble_.link();
        if (link.is_square_modulus()) {
            ws.f = complex() ? Vector(ws.re.array().square() + ws.im.array().square())
                             : Vector(ws.re.array().square());
            return;
        }
        ws.f.resize(ws.re.size());
        for (Eigen::Index i = 0; i < ws.re.size(); ++i) {
            ws.f[i] = link.value({ws.re[i], complex() ? ws.im[i] : 0.0});
        }
    }

    void link_gradients(const Vector& x, ObjectiveWorkspace& ws) const
    {
        link_values(x, ws);
        const auto& link = ensemble_.link();
        if (link.is_square_modulus()) {
            ws.gr = 2.0 * ws.re;
            if (complex()) ws.gi = 2.0 * ws.im;
            return;
        }
        ws.gr.resize(ws.re.size());
        ws.gi.resize(complex() ? ws.re.size() : 0);
        for (Eigen::Index i = 0; i < ws.re.size(); ++i) {
            const std::complex<double> g = link.gradient({ws.re[i], complex() ? ws.im[i] : 0.0});
            ws.gr[i] = g.real();
            if (complex()) ws.gi[i] = g.imag();
        }
    }

    SplitValue split_from_link(const ObjectiveWorkspace& ws) const
    {
        const Vector& b = values();
        SplitValue v;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            v.f1 += ws.f[i] * ws.f[i] + b[i] * b[i];
            v.f2 += 2.0 * b[i] * ws.f[i];
        }
        return v;
    }

    Matrix weighted_gram(const Vector& wrr, const Vector& wri, const Vector& wii) const
    {
        return ensemble_.weighted_gram(wrr, wri, wii);
    }

    MeasurementEnsemble ensemble_;
    double lipschitz_F1_ = 0.0;
    std::uint64_t lipschitz_queries_ = 0;
};

} // namespace phasedc
