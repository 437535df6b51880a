#pragma once

// Scalar dispatch used by the templated estimator core. Every overload for
// double has a counted twin for opcount::Real, so one algorithm body serves
// both the production path and the operation-count ledger.

#include "tdipdft/opcount.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <type_traits>

namespace tdipdft {

template <class R>
struct complex_of {
    using type = std::complex<R>;
};

template <>
struct complex_of<opcount::Real> {
    using type = opcount::Complex;
};

template <class R>
using complex_t = typename complex_of<R>::type;

template <class R>
inline constexpr bool is_counted_v = std::is_same_v<R, opcount::Real>;

namespace num {

inline constexpr double pi = std::numbers::pi;

inline double value(double x) { return x; }
inline double value(opcount::Real x) { return x.value(); }
inline std::complex<double> value(std::complex<double> z) { return z; }
inline std::complex<double> value(const opcount::Complex& z)
{
    return {z.real().value(), z.imag().value()};
}

inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double atan2(double y, double x) { return std::atan2(y, x); }
inline double round(double x) { return std::round(x); }
inline double fabs(double x) { return std::fabs(x); }
inline std::complex<double> expj(double t) { return {std::cos(t), std::sin(t)}; }
inline double norm(std::complex<double> z) { return z.real() * z.real() + z.imag() * z.imag(); }
inline double abs(std::complex<double> z) { return std::sqrt(norm(z)); }
inline double arg(std::complex<double> z) { return std::atan2(z.imag(), z.real()); }
inline std::complex<double> conj(std::complex<double> z) { return std::conj(z); }
inline std::complex<double> times_j(std::complex<double> z) { return {-z.imag(), z.real()}; }

inline opcount::Real sin(opcount::Real x)
{
    opcount::record(opcount::Op::Sin);
    return std::sin(x.value());
}
inline opcount::Real cos(opcount::Real x)
{
    opcount::record(opcount::Op::Cos);
    return std::cos(x.value());
}
inline opcount::Real sqrt(opcount::Real x)
{
    opcount::record(opcount::Op::Sqrt);
    return std::sqrt(x.value());
}
inline opcount::Real atan2(opcount::Real y, opcount::Real x)
{
    opcount::record(opcount::Op::Angle);
    return std::atan2(y.value(), x.value());
}
inline opcount::Real round(opcount::Real x)
{
    opcount::record(opcount::Op::Round);
    return std::round(x.value());
}
inline opcount::Real fabs(opcount::Real x) { return std::fabs(x.value()); }
inline opcount::Complex expj(opcount::Real t)
{
    opcount::record(opcount::Op::Exp);
    return {std::cos(t.value()), std::sin(t.value())};
}
inline opcount::Real norm(const opcount::Complex& z)
{
    return z.real() * z.real() + z.imag() * z.imag();
}
inline opcount::Real abs(const opcount::Complex& z) { return num::sqrt(norm(z)); }
inline opcount::Real arg(const opcount::Complex& z) { return num::atan2(z.imag(), z.real()); }
inline opcount::Complex conj(const opcount::Complex& z) { return {z.real(), -z.imag()}; }
inline opcount::Complex times_j(const opcount::Complex& z) { return {-z.imag(), z.real()}; }

// Wraps to (-pi, pi].
template <class R>
R wrap_phase(R phi)
{
    double v = std::remainder(value(phi), 2.0 * pi);
    if (v <= -pi) v += 2.0 * pi;
    return R(v);
}

// Marks an algorithm-level function call in the counted build.
template <class R>
inline void call(std::string_view fn)
{
    if constexpr (is_counted_v<R>) opcount::record_call(fn);
}

// Attributes counts to a named phase in the counted build; no-op otherwise.
template <class R>
class CountPhase {
public:
    explicit CountPhase(const char* name)
    {
        if constexpr (is_counted_v<R>) scope_.emplace(name);
    }

private:
    std::optional<opcount::PhaseScope> scope_;
};

} // namespace num
} // namespace tdipdft
