#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace phasedc {

/// Second derivatives of a link with respect to (Re t, Im t).
struct LinkCurvature
{
    double rr = 0.0;
    double ri = 0.0;
    double ii = 0.0;
};

/// Scalar link f applied to each measurement inner product.
///
/// The argument is a complex number holding the real embedding of the inner
/// product; for real problems the imaginary part is always zero and only the
/// real-direction derivatives are used. `gradient` returns
/// (df/dRe, df/dIm) packed as a complex number.
///
/// A custom link must be convex, nonnegative, and coercive, and must provide
/// analytic first and second derivatives.
class LinkFunction
{
public:
    enum class Kind { SquareModulus, Custom };

    using ValueFn = std::function<double(std::complex<double>)>;
    using GradientFn = std::function<std::complex<double>(std::complex<double>)>;
    using CurvatureFn = std::function<LinkCurvature(std::complex<double>)>;

    static LinkFunction square_modulus() { return LinkFunction(); }

    static LinkFunction custom(std::string name, ValueFn value, GradientFn gradient, CurvatureFn curvature)
    {
        if (!value || !gradient || !curvature) {
            throw std::invalid_argument("custom link '" + name + "' needs value, gradient and curvature");
        }
        LinkFunction link;
        link.kind_ = Kind::Custom;
        link.name_ = std::move(name);
        link.value_ = std::move(value);
        link.gradient_ = std::move(gradient);
        link.curvature_ = std::move(curvature);
        return link;
    }

    Kind kind() const noexcept { return kind_; }
    bool is_square_modulus() const noexcept { return kind_ == Kind::SquareModulus; }
    const std::string& name() const noexcept { return name_; }

    double value(std::complex<double> t) const
    {
        if (kind_ == Kind::SquareModulus) return std::norm(t);
        return value_(t);
    }

    std::complex<double> gradient(std::complex<double> t) const
    {
        if (kind_ == Kind::SquareModulus) return 2.0 * t;
        return gradient_(t);
    }

    LinkCurvature curvature(std::complex<double> t) const
    {
        if (kind_ == Kind::SquareModulus) return {2.0, 0.0, 2.0};
        return curvature_(t);
    }

private:
    LinkFunction() = default;

    Kind kind_ = Kind::SquareModulus;
    std::string name_ = "square_modulus";
    ValueFn value_;
    GradientFn gradient_;
    CurvatureFn curvature_;
};

} // namespace phasedc
