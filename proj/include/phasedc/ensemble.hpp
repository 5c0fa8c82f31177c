#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "link.hpp"
#include "random.hpp"
#include "signal.hpp"

namespace phasedc {

/// Noise added to clean measurements.
///
///  - Additive:      b_i = f(<a_i, x>) + eps_i
///  - InsideOutside: b_i = f(<a_i, x> + delta_i) + eps_i
///
/// eps_i and delta_i are independent Uniform[-u, u] draws. delta_i is real
/// and shifts the real part of the inner product.
struct NoiseSpec
{
    enum class Model { None, Additive, InsideOutside };

    Model model = Model::None;
    double u = 0.0;
    std::uint64_t seed = 0;
};

/// m measurement vectors (stored embedded, one per row), their observed
/// values, and the link function.
///
/// For complex problems row i holds [Re a_i | Im a_i] and the inner product
/// is the bilinear a_i^T z:
///     Re = Re(a)^T Re(z) - Im(a)^T Im(z)
///     Im = Im(a)^T Re(z) + Re(a)^T Im(z)
class MeasurementEnsemble
{
public:
    MeasurementEnsemble(FieldTag field, std::size_t n, Matrix vectors, LinkFunction link = LinkFunction::square_modulus())
        : field_(field), n_(n), vectors_(std::move(vectors)), link_(std::move(link))
    {
        if (n_ == 0) throw std::invalid_argument("MeasurementEnsemble: n must be positive");
        if (vectors_.rows() == 0) throw std::invalid_argument("MeasurementEnsemble: m must be positive");
        if (static_cast<std::size_t>(vectors_.cols()) != embedded_dim(field_, n_)) {
            throw std::invalid_argument("MeasurementEnsemble: vector length does not match embedding");
        }
    }

    MeasurementEnsemble(FieldTag field, std::size_t n, Matrix vectors, Vector values,
                        LinkFunction link = LinkFunction::square_modulus())
        : MeasurementEnsemble(field, n, std::move(vectors), std::move(link))
    {
        set_values(std::move(values));
    }

    FieldTag field() const noexcept { return field_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t m() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }

    const Matrix& vectors() const noexcept { return vectors_; }
    const Vector& values() const
    {
        if (!has_values()) throw std::logic_error("MeasurementEnsemble: values not populated");
        return values_;
    }
    bool has_values() const noexcept { return values_.size() == vectors_.rows(); }
    const LinkFunction& link() const noexcept { return link_; }

    void set_values(Vector values)
    {
        if (values.size() != vectors_.rows()) {
            throw std::invalid_argument("MeasurementEnsemble: expected " + std::to_string(vectors_.rows()) + " values");
        }
        if (!values.allFinite()) throw std::invalid_argument("MeasurementEnsemble: non-finite value");
        values_ = std::move(values);
    }

    /// True when some observed value is negative (possible under additive
    /// noise); the split F1 - F2 then loses convexity of F2.
    bool has_negative_values() const { return has_values() && (values_.array() < 0.0).any(); }

    /// Embedded inner products <a_i, x>. `im` is left empty for real fields.
    void project(const Vector& x, Vector& re, Vector& im) const
    {
        if (field_ == FieldTag::Real) {
            re.noalias() = vectors_ * x;
            im.resize(0);
            return;
        }
        const auto n = static_cast<Eigen::Index>(n_);
        const auto ar = vectors_.leftCols(n);
        const auto ai = vectors_.rightCols(n);
        re.noalias() = ar * x.head(n);
        re.noalias() -= ai * x.tail(n);
        im.noalias() = ai * x.head(n);
        im.noalias() += ar * x.tail(n);
    }

    /// Adjoint of `project`: sum_i wr_i dRe_i/dx + wi_i dIm_i/dx.
    void backproject(const Vector& wr, const Vector& wi, Vector& out) const
    {
        if (field_ == FieldTag::Real) {
            out.noalias() = vectors_.transpose() * wr;
            return;
        }
        const auto n = static_cast<Eigen::Index>(n_);
        const auto ar = vectors_.leftCols(n);
        const auto ai = vectors_.rightCols(n);
        out.resize(2 * n);
        out.head(n).noalias() = ar.transpose() * wr;
        out.head(n).noalias() += ai.transpose() * wi;
        out.tail(n).noalias() = ar.transpose() * wi;
        out.tail(n).noalias() -= ai.transpose() * wr;
    }

    std::complex<double> inner_product(std::size_t i, const Vector& x) const
    {
        const auto row = vectors_.row(static_cast<Eigen::Index>(i));
        if (field_ == FieldTag::Real) return {row.dot(x), 0.0};
        const auto n = static_cast<Eigen::Index>(n_);
        const double re = row.head(n).dot(x.head(n)) - row.tail(n).dot(x.tail(n));
        const double im = row.tail(n).dot(x.head(n)) + row.head(n).dot(x.tail(n));
        return {re, im};
    }

    /// Dense sum_i J_i^T W_i J_i, where J_i = d[Re_i, Im_i]/dx and
    /// W_i = [[rr_i, ri_i], [ri_i, ii_i]]. Real fields use rr only.
    Matrix weighted_gram(const Vector& wrr, const Vector& wri, const Vector& wii) const
    {
        if (field_ == FieldTag::Real) return vectors_.transpose() * wrr.asDiagonal() * vectors_;
        const auto n = static_cast<Eigen::Index>(n_);
        const auto m = vectors_.rows();
        Matrix p(m, 2 * n), q(m, 2 * n);
        p << vectors_.leftCols(n), -vectors_.rightCols(n);
        q << vectors_.rightCols(n), vectors_.leftCols(n);
        const Matrix bp = wrr.asDiagonal() * p + wri.asDiagonal() * q;
        const Matrix bq = wri.asDiagonal() * p + wii.asDiagonal() * q;
        Matrix h = p.transpose() * bp;
        h.noalias() += q.transpose() * bq;
        return h;
    }

private:
    FieldTag field_;
    std::size_t n_;
    Matrix vectors_;
    Vector values_;
    LinkFunction link_;
};

/// i.i.d. standard normal measurement vectors. Complex rows draw the real
/// parts first, then the imaginary parts. Values are left unset.
inline MeasurementEnsemble sample_gaussian_ensemble(std::size_t n, std::size_t m, FieldTag field,
                                                    LinkFunction link, std::uint64_t seed)
{
    if (n == 0 || m == 0) throw std::invalid_argument("sample_gaussian_ensemble: n and m must be positive");
    const auto d = static_cast<Eigen::Index>(embedded_dim(field, n));
    Matrix a(static_cast<Eigen::Index>(m), d);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.gaussian();
    }
    return MeasurementEnsemble(field, n, std::move(a), std::move(link));
}

/// Populates values with link(<a_i, truth>) plus the selected noise.
inline MeasurementEnsemble measure(const MeasurementEnsemble& ensemble, const Signal& truth, const NoiseSpec& noise = {})
{
    if (truth.field() != ensemble.field() || truth.n() != ensemble.n()) {
        throw std::invalid_argument("measure: truth does not match ensemble field/dimension");
    }
    if (!(noise.u >= 0.0)) throw std::invalid_argument("measure: noise half-width must be nonnegative");

    Vector re, im;
    ensemble.project(truth.data(), re, im);
    const bool complex = ensemble.field() == FieldTag::Complex;
    const auto& link = ensemble.link();

    Vector values(re.size());
    Rng rng(noise.seed);
    for (Eigen::Index i = 0; i < re.size(); ++i) {
        std::complex<double> t(re[i], complex ? im[i] : 0.0);
        switch (noise.model) {
        case NoiseSpec::Model::None:
            values[i] = link.value(t);
            break;
        case NoiseSpec::Model::Additive:
            values[i] = link.value(t) + rng.uniform(-noise.u, noise.u);
            break;
        case NoiseSpec::Model::InsideOutside: {
            const double delta = rng.uniform(-noise.u, noise.u);
            const double eps = rng.uniform(-noise.u, noise.u);
            values[i] = link.value(t + delta) + eps;
            break;
        }
        }
    }
    MeasurementEnsemble out = ensemble;
    out.set_values(std::move(values));
    return out;
}

} // namespace phasedc
