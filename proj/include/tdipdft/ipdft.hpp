#pragma once

// Three-point interpolated DFT on Hanning-windowed bins and spectral image
// reconstruction. Bin vectors are normalized (divided by B) and indexed from
// bin 0.

#include "tdipdft/error.hpp"
#include "tdipdft/num.hpp"
#include "tdipdft/spectral.hpp"

#include <span>
#include <string>
#include <vector>

namespace tdipdft {

template <class R>
struct ToneEstimateT {
    R frequency{};
    R amplitude{};
    R phase{}; // at window sample 0
    int k_m = 0;
    R delta{};
    int epsilon = 1;
};

using ToneEstimate = ToneEstimateT<double>;

enum class ImageSign { Positive, Negative };

// Index of max |X(k)| over [k_lo, k_hi]; ties resolve to the lower index.
template <class R>
int find_peak(std::span<const complex_t<R>> bins, int k_lo, int k_hi)
{
    if (k_lo > k_hi || k_lo < 0 || k_hi >= static_cast<int>(bins.size())) {
        throw std::out_of_range("find_peak: empty or out-of-range bin interval");
    }
    num::call<R>("peak");
    int best = k_lo;
    R best_mag = num::norm(bins[static_cast<std::size_t>(k_lo)]);
    for (int k = k_lo + 1; k <= k_hi; ++k) {
        const R mag = num::norm(bins[static_cast<std::size_t>(k)]);
        if (mag > best_mag) {
            best_mag = mag;
            best = k;
        }
    }
    return best;
}

// Frequency-only interpolation (delta and f), used where amplitude and phase
// are not needed.
template <class R>
ToneEstimateT<R> interpolate_frequency(std::span<const complex_t<R>> bins, int k_m, double delta_f)
{
    if (k_m < 1 || k_m + 1 >= static_cast<int>(bins.size())) {
        throw InsufficientNeighbors("interpolate: peak bin " + std::to_string(k_m) + " has no two neighbors");
    }
    const auto at = [&](int k) { return bins[static_cast<std::size_t>(k)]; };
    const R below = num::abs(at(k_m - 1));
    const R peak = num::abs(at(k_m));
    const R above = num::abs(at(k_m + 1));
    if (num::value(peak) == 0.0) throw NoTone("interpolate: zero peak bin");

    ToneEstimateT<R> est;
    est.k_m = k_m;
    // |X(k_m+1)| = |X(k_m-1)| resolves to +1; delta is 0 either way
    est.epsilon = (above >= below) ? 1 : -1;
    const R near = est.epsilon > 0 ? above : below;
    const R far = est.epsilon > 0 ? below : above;
    const R twice_eps = R(2.0 * est.epsilon);
    est.delta = twice_eps * (near - far) / (far + R(2.0) * peak + near);
    est.frequency = (R(static_cast<double>(k_m)) + est.delta) * R(delta_f);
    return est;
}

// Full three-point Hanning IpDFT: delta, frequency, amplitude and phase.
template <class R>
ToneEstimateT<R> interpolate(std::span<const complex_t<R>> bins, int k_m, double delta_f)
{
    num::call<R>("IpDFT");
    ToneEstimateT<R> est = interpolate_frequency<R>(bins, k_m, delta_f);
    const complex_t<R> peak = bins[static_cast<std::size_t>(k_m)];
    const R peak_mag = num::abs(peak);
    const R pi_delta = R(num::pi) * est.delta;
    R scallop = R(1.0);
    if (std::fabs(num::value(est.delta)) >= 1e-12) {
        // pi*delta/sin(pi*delta); below 1e-12 the ratio equals 1 to double precision
        scallop = num::fabs(pi_delta / num::sin(pi_delta));
    }
    est.amplitude = R(2.0) * peak_mag * scallop * num::fabs(est.delta * est.delta - R(1.0));
    est.phase = num::wrap_phase(num::arg(peak) - pi_delta);
    return est;
}

// Convenience: peak search followed by interpolation.
template <class R>
ToneEstimateT<R> estimate_tone(std::span<const complex_t<R>> bins, int k_lo, int k_hi, double delta_f)
{
    return interpolate<R>(bins, find_peak<R>(bins, k_lo, k_hi), delta_f);
}

// gain * W_H(k -+ f/delta_f) / B for k in [k_lo, k_hi]. The caller supplies the
// full complex gain of the image.
template <class R>
std::vector<complex_t<R>> reconstruct_image(R frequency, ImageSign sign, complex_t<R> gain, int k_lo, int k_hi,
                                            const WindowConfig& cfg)
{
    num::call<R>("wf");
    const double inv_b = 2.0 / static_cast<double>(cfg.samples);
    const R bin_pos = frequency * R(1.0 / cfg.resolution());
    const complex_t<R> scaled = gain * R(inv_b);
    std::vector<complex_t<R>> out;
    out.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (int k = k_lo; k <= k_hi; ++k) {
        const R offset = sign == ImageSign::Positive ? R(static_cast<double>(k)) - bin_pos
                                                     : R(static_cast<double>(k)) + bin_pos;
        out.push_back(scaled * hann_kernel<R>(offset, cfg.samples));
    }
    return out;
}

// Double-precision conveniences over SpectrumSlice.
int find_peak(const SpectrumSlice& slice, int k_lo, int k_hi);
ToneEstimate interpolate(const SpectrumSlice& slice, int k_m, double delta_f);
std::vector<cplx> reconstruct_image(const ToneEstimate& est, ImageSign sign, cplx gain, int k_lo, int k_hi,
                                    const WindowConfig& cfg);

} // namespace tdipdft
