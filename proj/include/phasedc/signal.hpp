#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace phasedc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class FieldTag { Real, Complex };

inline std::string_view to_string(FieldTag field)
{
    return field == FieldTag::Real ? "real" : "complex";
}

inline FieldTag parse_field(std::string_view text)
{
    if (text == "real" || text == "Real") return FieldTag::Real;
    if (text == "complex" || text == "Complex") return FieldTag::Complex;
    throw std::invalid_argument("unknown field '" + std::string(text) + "'");
}

/// Number of real coordinates used to store an n-dimensional signal.
constexpr std::size_t embedded_dim(FieldTag field, std::size_t n) noexcept
{
    return field == FieldTag::Real ? n : 2 * n;
}

/// A real or complex vector in its real embedding.
///
/// Complex signals are stored as [real parts | imaginary parts], so the
/// coordinate vector has length 2n. Gradients and search directions share
/// this layout.
class Signal
{
public:
    Signal() = default;

    Signal(FieldTag field, std::size_t n)
        : field_(field), n_(n), data_(Vector::Zero(static_cast<Eigen::Index>(embedded_dim(field, n))))
    {
        if (n == 0) throw std::invalid_argument("Signal: dimension must be positive");
    }

    Signal(FieldTag field, std::size_t n, Vector data) : field_(field), n_(n), data_(std::move(data))
    {
        if (n == 0) throw std::invalid_argument("Signal: dimension must be positive");
        if (static_cast<std::size_t>(data_.size()) != embedded_dim(field, n)) {
            throw std::invalid_argument("Signal: data length " + std::to_string(data_.size()) +
                                        " does not match embedding of dimension " + std::to_string(n));
        }
        if (!data_.allFinite()) throw std::invalid_argument("Signal: non-finite coordinate");
    }

    static Signal real(Vector data)
    {
        const auto n = static_cast<std::size_t>(data.size());
        return Signal(FieldTag::Real, n, std::move(data));
    }

    static Signal complex(const Vector& re, const Vector& im)
    {
        if (re.size() != im.size()) throw std::invalid_argument("Signal: real/imaginary length mismatch");
        Vector data(2 * re.size());
        data << re, im;
        return Signal(FieldTag::Complex, static_cast<std::size_t>(re.size()), std::move(data));
    }

    FieldTag field() const noexcept { return field_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.size()); }

    const Vector& data() const noexcept { return data_; }
    Vector& data() noexcept { return data_; }

    double norm() const { return data_.norm(); }

    /// Shape of another signal with the same field and dimension.
    Signal with_data(Vector data) const { return Signal(field_, n_, std::move(data)); }

    /// Multiplies by the unit complex number (cos theta + i sin theta); for
    /// real signals only theta in {0, pi} is meaningful and the sign of
    /// cos theta is applied.
    Signal rotated(double theta) const
    {
        if (field_ == FieldTag::Real) {
            return with_data(std::cos(theta) >= 0.0 ? data_ : Vector(-data_));
        }
        const auto n = static_cast<Eigen::Index>(n_);
        const double c = std::cos(theta), s = std::sin(theta);
        Vector out(data_.size());
        out.head(n) = c * data_.head(n) - s * data_.tail(n);
        out.tail(n) = s * data_.head(n) + c * data_.tail(n);
        return with_data(std::move(out));
    }

    std::size_t support_size() const;

private:
    FieldTag field_ = FieldTag::Real;
    std::size_t n_ = 0;
    Vector data_;
};

/// Number of nonzero coordinates of an embedded vector; a complex
/// coordinate counts once if either half is nonzero.
inline std::size_t count_support(FieldTag field, std::size_t n, const Vector& data)
{
    std::size_t count = 0;
    const auto nn = static_cast<Eigen::Index>(n);
    for (Eigen::Index j = 0; j < nn; ++j) {
        const bool nz = field == FieldTag::Real ? data[j] != 0.0 : (data[j] != 0.0 || data[j + nn] != 0.0);
        count += nz ? 1 : 0;
    }
    return count;
}

inline std::size_t Signal::support_size() const { return count_support(field_, n_, data_); }

inline void require_same_shape(const Signal& x, const Signal& y, const char* where)
{
    if (x.field() != y.field() || x.n() != y.n()) {
        throw std::invalid_argument(std::string(where) + ": field or dimension mismatch");
    }
}

/// min over unimodular c of ||x - c y||_2.
inline double dist_up_to_phase(const Signal& x, const Signal& y)
{
    require_same_shape(x, y, "dist_up_to_phase");
    const Vector& a = x.data();
    const Vector& b = y.data();
    if (x.field() == FieldTag::Real) {
        return std::min((a - b).norm(), (a + b).norm());
    }
    const auto n = static_cast<Eigen::Index>(x.n());
    // <x, y> = sum conj(x_j) y_j
    const double re = a.head(n).dot(b.head(n)) + a.tail(n).dot(b.tail(n));
    const double im = a.head(n).dot(b.tail(n)) - a.tail(n).dot(b.head(n));
    const double mag = std::hypot(re, im);
    if (mag == 0.0) return std::sqrt(a.squaredNorm() + b.squaredNorm());
    // Rotate x by the optimal phase e^{i phi} = <x, y> / |<x, y>|, then
    // subtract directly; the expanded form cancels below ~1e-8.
    const double c = re / mag, s = im / mag;
    const Vector rr = c * a.head(n) - s * a.tail(n) - b.head(n);
    const Vector ri = s * a.head(n) + c * a.tail(n) - b.tail(n);
    return std::sqrt(rr.squaredNorm() + ri.squaredNorm());
}

} // namespace phasedc
