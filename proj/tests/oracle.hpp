#pragma once

// Brute-force references used by the tests. Everything here is computed by
// direct summation in long double, independent of the recursive pipeline.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

using cld = std::complex<long double>;
using cplx = std::complex<double>;

inline constexpr long double kPi = std::numbers::pi_v<long double>;

inline long double periodic_hann(std::size_t n, std::size_t len)
{
    return 0.5L - 0.5L * std::cos(2.0L * kPi * static_cast<long double>(n) / static_cast<long double>(len));
}

// sum_n w(n) x(n) e^{-j 2 pi k n / N}, n = 0..N-1 window-relative
template <class Sample>
cplx dft(const std::vector<Sample>& x, long double k, bool hann = false)
{
    const std::size_t len = x.size();
    cld acc{0.0L, 0.0L};
    for (std::size_t n = 0; n < len; ++n) {
        const long double ang = -2.0L * kPi * k * static_cast<long double>(n) / static_cast<long double>(len);
        const long double w = hann ? periodic_hann(n, len) : 1.0L;
        const cld xn(static_cast<long double>(std::real(x[n])), static_cast<long double>(std::imag(x[n])));
        acc += w * xn * cld(std::cos(ang), std::sin(ang));
    }
    return {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
}

// Hann-windowed bins 0..K-1 divided by B = N/2.
template <class Sample>
std::vector<cplx> hann_bins(const std::vector<Sample>& x, std::size_t bins)
{
    std::vector<cplx> out(bins);
    const double inv_b = 2.0 / static_cast<double>(x.size());
    for (std::size_t k = 0; k < bins; ++k) out[k] = dft(x, static_cast<long double>(k), true) * inv_b;
    return out;
}

// A cos(2 pi f (start + n)/fs + phi), n = 0..len-1
inline std::vector<double> cosine(double amplitude, double freq, double phase, double fs, long long start,
                                  std::size_t len)
{
    std::vector<double> out(len);
    for (std::size_t n = 0; n < len; ++n) {
        const long double t = static_cast<long double>(start + static_cast<long long>(n)) / fs;
        out[n] = static_cast<double>(amplitude * std::cos(2.0L * kPi * freq * t + phase));
    }
    return out;
}

// (A/2) e^{j(2 pi f n / fs + phi)}: the positive image of a real tone of amplitude A
inline std::vector<cplx> half_exponential(double amplitude, double freq, double phase, double fs, std::size_t len)
{
    std::vector<cplx> out(len);
    for (std::size_t n = 0; n < len; ++n) {
        const long double ang = 2.0L * kPi * freq * static_cast<long double>(n) / fs + phase;
        out[n] = cplx(static_cast<double>(0.5L * amplitude * std::cos(ang)),
                      static_cast<double>(0.5L * amplitude * std::sin(ang)));
    }
    return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(const std::vector<cplx>& a)
{
    double m = 0.0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
}

} // namespace oracle
