#pragma once

// Delayed in-quadrature complex signal x(n) + j x(n - d).
//
// For a tone A cos(w n + phi) the complex signal is
//   (A/2) sigma+ e^{j(w n + phi)} + (A/2) sigma- e^{-j(w n + phi)},
//   sigma+ = 1 + e^{j(pi/2 - theta)},  sigma- = 1 + e^{j(pi/2 + theta)},
// with theta = w d. An IpDFT on the positive image therefore returns
// A+ = A |sigma+| and phi+ = phi + arg(sigma+). Given those, the positive
// image gain is V+ = (A+/2) e^{j phi+} = (A/2) e^{j phi} sigma+, and the
// negative image gain follows as V- = conj(V+ / sigma+) sigma-.

#include "tdipdft/error.hpp"
#include "tdipdft/ipdft.hpp"
#include "tdipdft/num.hpp"
#include "tdipdft/spectral.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace tdipdft {

template <class R>
struct DelayGainsT {
    R theta{};
    complex_t<R> sigma_plus{};
    complex_t<R> sigma_minus{};
    std::size_t delay_samples = 0;
};

using DelayGains = DelayGainsT<double>;

// round(fs / (4 f)) with halves away from zero.
template <class R>
std::size_t nominal_delay(double sample_rate, R frequency)
{
    if (!(num::value(frequency) > 0.0)) throw ConfigError("nominal_delay: frequency must be positive");
    const R quarter = R(sample_rate) / (R(4.0) * frequency);
    return static_cast<std::size_t>(num::value(num::round(quarter)));
}

// sigma+- for a phase shift given in turns (theta / 2 pi). The quarter-turn
// part is applied exactly, so theta = pi/2 gives (2, 0) with no rounding.
template <class R>
DelayGainsT<R> gains_from_turns(R turns)
{
    const R quarters = num::round(R(4.0) * turns);
    const R rest = turns - quarters * R(0.25);
    const complex_t<R> rot = num::expj(R(2.0 * num::pi) * rest); // cos + j sin of the remainder
    R c = rot.real();
    R s = rot.imag();
    long long q = static_cast<long long>(num::value(quarters)) % 4;
    if (q < 0) q += 4;
    for (long long i = 0; i < q; ++i) {
        const R t = c;
        c = -s;
        s = t;
    }
    DelayGainsT<R> g;
    g.theta = R(2.0 * num::pi) * turns;
    // e^{j(pi/2 - theta)} = sin(theta) + j cos(theta); e^{j(pi/2 + theta)} = -sin(theta) + j cos(theta)
    g.sigma_plus = complex_t<R>(R(1.0) + s, c);
    g.sigma_minus = complex_t<R>(R(1.0) - s, c);
    return g;
}

template <class R>
DelayGainsT<R> delay_gains(R frequency, std::size_t delay, double sample_rate)
{
    num::call<R>("sigma");
    const R turns = frequency * R(static_cast<double>(delay) / sample_rate);
    DelayGainsT<R> g = gains_from_turns<R>(turns);
    g.delay_samples = delay;
    return g;
}

// Gains at an explicit phase shift theta (radians).
DelayGains delay_gains_at(double theta);

template <class R>
struct QsgResultT {
    std::vector<complex_t<R>> complex_bins; // normalized X_fH(0..K-1)
    std::size_t refined_delay = 0;          // d_f
    std::size_t coarse_delay = 0;           // d_0
    R coarse_frequency{};                   // f0 from the first pass
};

using QsgResult = QsgResultT<double>;

struct QsgOptions {
    double min_frequency = 40.0; // coarse estimates outside [min, max] fall back to d_0
    double max_frequency = 70.0;
};

template <class R>
std::vector<complex_t<R>> assemble_complex(const std::vector<cplx>& now, const std::vector<cplx>& delayed)
{
    std::vector<complex_t<R>> out(now.size());
    for (std::size_t k = 0; k < now.size(); ++k) {
        const complex_t<R> a(R(now[k].real()), R(now[k].imag()));
        const complex_t<R> b(R(delayed[k].real()), R(delayed[k].imag()));
        out[k] = a + num::times_j(b);
    }
    return out;
}

// Two-pass delayed in-quadrature spectrum: coarse delay from the nominal
// frequency, IpDFT frequency, refined delay, final complex spectrum.
template <class R>
QsgResultT<R> td_qsg(const WindowedHistory& history, const WindowConfig& cfg, const QsgOptions& opt = {})
{
    num::call<R>("TD-QSG");
    const int k_hi = static_cast<int>(cfg.bins) - 2;
    QsgResultT<R> res;
    res.coarse_delay = nominal_delay<double>(cfg.sample_rate, cfg.nominal_frequency);
    const std::vector<cplx> now = history.normalized_windowed(0);
    const auto coarse = assemble_complex<R>(now, history.normalized_windowed(res.coarse_delay));
    const int k_m = find_peak<R>(coarse, 1, k_hi);
    if (num::value(num::norm(coarse[static_cast<std::size_t>(k_m)])) == 0.0) {
        throw NoTone("td_qsg: zero fundamental peak");
    }
    num::call<R>("IpDFT");
    res.coarse_frequency = interpolate_frequency<R>(coarse, k_m, cfg.resolution()).frequency;

    const double f0 = num::value(res.coarse_frequency);
    std::size_t d = res.coarse_delay;
    if (f0 >= opt.min_frequency && f0 <= opt.max_frequency) {
        d = std::min(nominal_delay<R>(cfg.sample_rate, res.coarse_frequency), history.max_delay());
    }
    res.refined_delay = d;
    res.complex_bins = assemble_complex<R>(now, history.normalized_windowed(d));
    return res;
}

template <class R>
struct TdSrResultT {
    std::vector<complex_t<R>> bins; // positive + negative
    std::vector<complex_t<R>> positive;
    std::vector<complex_t<R>> negative;
    DelayGainsT<R> gains;
};

// Spectrum of one tone in the delayed in-quadrature domain over [k_lo, k_hi],
// from the uncorrected positive-image parameters.
template <class R>
TdSrResultT<R> td_sr(R frequency, R amplitude_plus, R phase_plus, std::size_t delay, int k_lo, int k_hi,
                     const WindowConfig& cfg)
{
    num::call<R>("TD-SR");
    TdSrResultT<R> res;
    res.gains = delay_gains<R>(frequency, delay, cfg.sample_rate);
    if (num::value(num::abs(res.gains.sigma_plus)) < 1e-6) {
        throw QuadratureDegenerate("td_sr: |sigma+| vanished");
    }
    const complex_t<R> v_plus = num::expj(phase_plus) * (R(0.5) * amplitude_plus);
    const complex_t<R> v_minus = num::conj(v_plus / res.gains.sigma_plus) * res.gains.sigma_minus;
    res.positive = reconstruct_image<R>(frequency, ImageSign::Positive, v_plus, k_lo, k_hi, cfg);
    res.negative = reconstruct_image<R>(frequency, ImageSign::Negative, v_minus, k_lo, k_hi, cfg);
    res.bins.resize(res.positive.size());
    for (std::size_t i = 0; i < res.bins.size(); ++i) res.bins[i] = res.positive[i] + res.negative[i];
    return res;
}

template <class R>
struct CorrectedT {
    R amplitude{};
    R phase{};
};

// Removes the positive delay gain from IpDFT amplitude and phase.
template <class R>
CorrectedT<R> apply_gain_correction(R amplitude_plus, R phase_plus, const complex_t<R>& sigma_plus)
{
    const R mag = num::abs(sigma_plus);
    if (num::value(mag) < 1e-6) throw QuadratureDegenerate("td_apc: |sigma+| vanished");
    return {amplitude_plus / mag, num::wrap_phase(phase_plus - num::arg(sigma_plus))};
}

template <class R>
CorrectedT<R> td_apc(R frequency, R amplitude_plus, R phase_plus, std::size_t delay, double sample_rate)
{
    num::call<R>("TD-APc");
    const auto g = delay_gains<R>(frequency, delay, sample_rate);
    return apply_gain_correction<R>(amplitude_plus, phase_plus, g.sigma_plus);
}

} // namespace tdipdft
