#pragma once

#include "tdipdft/error.hpp"
#include "tdipdft/num.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace tdipdft {

using cplx = std::complex<double>;

// Analysis window geometry. N = cycles * fs / f_nominal must be an integer.
struct WindowConfig {
    std::size_t samples = 3000; // N
    std::size_t bins = 8;       // K
    double sample_rate = 50e3;  // fs
    double cycles = 3.0;
    double nominal_frequency = 50.0;

    static WindowConfig make(double sample_rate = 50e3, double nominal_frequency = 50.0,
                             double cycles = 3.0, std::size_t bins = 8);

    double resolution() const { return sample_rate / static_cast<double>(samples); } // delta_f
    double window_length() const { return static_cast<double>(samples) / sample_rate; }
    void validate() const;
};

// Bins of one analysis window. Bin indices run from first_bin to
// first_bin + bins.size() - 1; rectangular slices carry -1..K, windowed 0..K-1.
// Values are un-normalized; divide by `normalization` (B) at readout.
struct SpectrumSlice {
    std::vector<cplx> bins;
    int first_bin = 0;
    std::int64_t window_end_sample = -1;
    bool windowed = false;
    double normalization = 1.0;

    int last_bin() const { return first_bin + static_cast<int>(bins.size()) - 1; }
    const cplx& at(int k) const;
    std::vector<cplx> normalized() const;
};

// Dirichlet kernel sin(pi u)/sin(pi u/N), reduced so that the removable
// singularities at u = pN return their exact limit.
template <class R>
R dirichlet_ratio(R sin_pi_r, R r, long long q, std::size_t n)
{
    const long long nn = static_cast<long long>(n);
    const double pi_over_n = num::pi / static_cast<double>(n);
    if (q % nn == 0) {
        const long long p = q / nn;
        const bool flip = ((p * (nn - 1)) % 2) != 0;
        R ratio = (num::value(r) == 0.0) ? R(static_cast<double>(n)) : sin_pi_r / num::sin(pi_over_n * r);
        return flip ? -ratio : ratio;
    }
    const R u = R(static_cast<double>(q)) + r;
    R ratio = sin_pi_r / num::sin(pi_over_n * u);
    return (q % 2 != 0) ? -ratio : ratio;
}

// Rectangular-window DFT evaluated at a real bin offset (analytic continuation).
template <class R>
complex_t<R> dirichlet_kernel(R offset, std::size_t n)
{
    const double nd = static_cast<double>(n);
    const R m = num::round(offset);
    const R r = offset - m;
    const R s = num::sin(num::pi * r);
    const R ratio = dirichlet_ratio(s, r, static_cast<long long>(num::value(m)), n);
    const complex_t<R> phase = num::expj(-(num::pi * (nd - 1.0) / nd) * offset);
    return phase * ratio;
}

// Periodic-Hanning DFT kernel: 0.5 W_R(x) - 0.25 (W_R(x-1) + W_R(x+1)).
// The three Dirichlet terms share sin(pi x) and one phase rotation.
template <class R>
complex_t<R> hann_kernel(R offset, std::size_t n)
{
    const double nd = static_cast<double>(n);
    const R m = num::round(offset);
    const R r = offset - m;
    const auto q = static_cast<long long>(num::value(m));
    const R s = num::sin(num::pi * r);
    const R center = dirichlet_ratio(s, r, q, n);
    const R below = dirichlet_ratio(s, r, q - 1, n);
    const R above = dirichlet_ratio(s, r, q + 1, n);
    // e^{-j pi (x -+ 1)(N-1)/N} = e^{-j pi x (N-1)/N} e^{+-j pi (N-1)/N}
    const std::complex<double> a = std::polar(1.0, num::pi * (nd - 1.0) / nd);
    const complex_t<R> rot_below(R(a.real()), R(a.imag()));
    const complex_t<R> rot_above(R(a.real()), R(-a.imag()));
    const complex_t<R> sum = complex_t<R>(R(0.5) * center) - rot_below * (R(0.25) * below)
                             - rot_above * (R(0.25) * above);
    const complex_t<R> phase = num::expj(-(num::pi * (nd - 1.0) / nd) * offset);
    return phase * sum;
}

// Modulated sliding DFT over a fixed set of consecutive bins. Each push costs
// O(bins); twiddles come from an exact table indexed by (k*n) mod N, so the
// recursion has no accumulating rotation error.
class ModulatedSlidingDft {
public:
    ModulatedSlidingDft(std::size_t samples, int first_bin, int last_bin);

    void push(double x);

    // Rectangular bins of the window ending at the latest sample, with
    // window-relative time indexing (n = 0 is the oldest sample).
    SpectrumSlice rectangular() const;
    void rectangular_into(std::span<cplx> out) const;

    std::size_t samples() const { return n_; }
    int first_bin() const { return first_bin_; }
    std::size_t bin_count() const { return acc_.size(); }
    std::int64_t pushed() const { return pushed_; }
    bool full() const { return pushed_ >= static_cast<std::int64_t>(n_); }

private:
    std::size_t twiddle_index(int k, std::int64_t n) const;

    std::size_t n_;
    int first_bin_;
    std::vector<double> ring_;
    std::vector<cplx> acc_;
    std::vector<cplx> twiddle_; // e^{-j 2 pi m / N}
    std::size_t head_ = 0;
    std::int64_t pushed_ = 0;
};

// Hanning window applied in the frequency domain. Needs rectangular bins
// -1..K so that all K windowed bins are exact; B = N/2.
SpectrumSlice window_in_freq(const SpectrumSlice& rect);

// Per-sample history of windowed bins. Entry at delay d is the slice whose
// window ended d samples before the newest one.
class DelayedBinBuffer {
public:
    DelayedBinBuffer(std::size_t bins, std::size_t capacity);

    void push(std::span<const cplx> windowed, std::int64_t window_end_sample, double normalization);
    // Advances one sample without storing; earlier entries are no longer contiguous and are dropped.
    void skip();

    SpectrumSlice lookup(std::size_t delay) const;
    std::span<const cplx> raw(std::size_t delay) const;

    std::size_t capacity() const { return capacity_; }
    std::size_t stored() const { return stored_; }

private:
    std::size_t slot(std::size_t delay) const;

    std::size_t bins_;
    std::size_t capacity_; // max delay
    std::vector<cplx> data_;
    std::vector<std::int64_t> end_sample_;
    double normalization_ = 1.0;
    std::size_t head_ = 0;
    std::size_t stored_ = 0;
};

SpectrumSlice delayed_spectrum(const DelayedBinBuffer& buffer, std::size_t delay);

// Bin-wise now + j*delayed: spectrum of x(n) + j x(n - d).
SpectrumSlice complex_spectrum(const SpectrumSlice& now, const SpectrumSlice& delayed);

// Buffer capacity for the lowest supported frequency: ceil(fs / (4 f_min)).
std::size_t delay_capacity(double sample_rate, double min_frequency);

// Source of normalized windowed bins at a given delay.
class WindowedHistory {
public:
    virtual ~WindowedHistory() = default;
    virtual std::vector<cplx> normalized_windowed(std::size_t delay) const = 0;
    virtual std::size_t max_delay() const = 0;
};

// mSDFT + frequency-domain Hanning + delayed-bin buffer for one stream.
class SpectralStream final : public WindowedHistory {
public:
    explicit SpectralStream(const WindowConfig& cfg, double min_frequency = 45.0);

    // With record = false the windowed bins of this sample are not kept.
    void push(double x, bool record = true);

    // True once a full window plus `max_delay` history exists.
    bool ready(std::size_t max_delay) const;
    bool ready() const { return ready(buffer_.capacity()); }

    SpectrumSlice rectangular() const { return msdft_.rectangular(); }
    SpectrumSlice windowed(std::size_t delay = 0) const;
    std::vector<cplx> normalized_windowed(std::size_t delay) const override;
    std::size_t max_delay() const override { return buffer_.capacity(); }

    const WindowConfig& config() const { return cfg_; }
    std::int64_t pushed() const { return msdft_.pushed(); }
    std::size_t capacity() const { return buffer_.capacity(); }

private:
    WindowConfig cfg_;
    ModulatedSlidingDft msdft_;
    DelayedBinBuffer buffer_;
    std::vector<cplx> rect_scratch_;
    std::vector<cplx> win_scratch_;
};

// CSV dump: k,re,im,abs of the normalized bins.
void write_spectrum_csv(std::ostream& os, const SpectrumSlice& slice);

} // namespace tdipdft
