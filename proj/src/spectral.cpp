#include "tdipdft/spectral.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace tdipdft {

WindowConfig WindowConfig::make(double sample_rate, double nominal_frequency, double cycles,
                                std::size_t bins)
{
    if (!(sample_rate > 0.0) || !(nominal_frequency > 0.0) || !(cycles > 0.0)) {
        throw ConfigError("window: sample rate, nominal frequency and cycles must be positive");
    }
    const double exact = cycles * sample_rate / nominal_frequency;
    const double rounded = std::round(exact);
    if (std::fabs(exact - rounded) > 1e-9 * exact || rounded < 2.0) {
        throw ConfigError("window: cycles * fs / f_nominal must be an integer >= 2");
    }
    WindowConfig cfg;
    cfg.samples = static_cast<std::size_t>(rounded);
    cfg.bins = bins;
    cfg.sample_rate = sample_rate;
    cfg.cycles = cycles;
    cfg.nominal_frequency = nominal_frequency;
    cfg.validate();
    return cfg;
}

void WindowConfig::validate() const
{
    if (samples < 2) throw ConfigError("window: N must be >= 2");
    if (bins < 8) throw ConfigError("window: K must be >= 8");
    if (bins + 2 > samples) throw ConfigError("window: K + 2 must not exceed N");
    if (!(sample_rate > 0.0)) throw ConfigError("window: fs must be positive");
    const double expected = cycles * sample_rate / nominal_frequency;
    if (std::fabs(expected - static_cast<double>(samples)) > 1e-9 * expected) {
        throw ConfigError("window: N inconsistent with cycles * fs / f_nominal");
    }
}

const cplx& SpectrumSlice::at(int k) const
{
    if (k < first_bin || k > last_bin()) {
        throw std::out_of_range("spectrum slice: bin " + std::to_string(k) + " not stored");
    }
    return bins[static_cast<std::size_t>(k - first_bin)];
}

std::vector<cplx> SpectrumSlice::normalized() const
{
    std::vector<cplx> out(bins.size());
    const double inv = 1.0 / normalization;
    for (std::size_t i = 0; i < bins.size(); ++i) out[i] = bins[i] * inv;
    return out;
}

ModulatedSlidingDft::ModulatedSlidingDft(std::size_t samples, int first_bin, int last_bin)
    : n_(samples),
      first_bin_(first_bin),
      ring_(samples, 0.0),
      acc_(static_cast<std::size_t>(last_bin - first_bin + 1)),
      twiddle_(samples)
{
    if (samples < 2 || last_bin < first_bin) throw ConfigError("mSDFT: invalid geometry");
    for (std::size_t m = 0; m < n_; ++m) {
        twiddle_[m] = std::polar(1.0, -2.0 * num::pi * static_cast<double>(m) / static_cast<double>(n_));
    }
}

std::size_t ModulatedSlidingDft::twiddle_index(int k, std::int64_t n) const
{
    const auto nn = static_cast<std::int64_t>(n_);
    const std::int64_t km = ((k % nn) + nn) % nn;
    const std::int64_t m = ((n % nn) + nn) % nn;
    return static_cast<std::size_t>((km * m) % nn);
}

void ModulatedSlidingDft::push(double x)
{
    const double departing = ring_[head_];
    ring_[head_] = x;
    head_ = (head_ + 1 == n_) ? 0 : head_ + 1;

    // modulate with the absolute sample index; x(n - N) shares the same twiddle
    const double diff = x - departing;
    for (std::size_t i = 0; i < acc_.size(); ++i) {
        const cplx& w = twiddle_[twiddle_index(first_bin_ + static_cast<int>(i), pushed_)];
        acc_[i] += cplx(diff * w.real(), diff * w.imag());
    }
    ++pushed_;
}

void ModulatedSlidingDft::rectangular_into(std::span<cplx> out) const
{
    // demodulate to window-relative indexing: start sample s = pushed - N
    const std::int64_t start = pushed_ - static_cast<std::int64_t>(n_);
    for (std::size_t i = 0; i < acc_.size(); ++i) {
        const cplx& w = twiddle_[twiddle_index(first_bin_ + static_cast<int>(i), start)];
        out[i] = acc_[i] * std::conj(w);
    }
}

SpectrumSlice ModulatedSlidingDft::rectangular() const
{
    SpectrumSlice s;
    s.bins.resize(acc_.size());
    rectangular_into(s.bins);
    s.first_bin = first_bin_;
    s.window_end_sample = pushed_ - 1;
    s.windowed = false;
    s.normalization = static_cast<double>(n_);
    return s;
}

namespace {

void hann_combine(std::span<const cplx> rect, std::span<cplx> out)
{
    // out[i] corresponds to rect[i + 1]
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * rect[i + 1] - 0.25 * (rect[i] + rect[i + 2]);
    }
}

} // namespace

SpectrumSlice window_in_freq(const SpectrumSlice& rect)
{
    if (rect.windowed) throw ConfigError("window_in_freq: slice is already windowed");
    if (rect.bins.size() < 3) throw ConfigError("window_in_freq: need at least three rectangular bins");
    SpectrumSlice out;
    out.bins.resize(rect.bins.size() - 2);
    hann_combine(rect.bins, out.bins);
    out.first_bin = rect.first_bin + 1;
    out.window_end_sample = rect.window_end_sample;
    out.windowed = true;
    out.normalization = rect.normalization / 2.0; // B = N/2
    return out;
}

DelayedBinBuffer::DelayedBinBuffer(std::size_t bins, std::size_t capacity)
    : bins_(bins), capacity_(capacity), data_((capacity + 1) * bins), end_sample_(capacity + 1, -1)
{
}

void DelayedBinBuffer::push(std::span<const cplx> windowed, std::int64_t window_end_sample,
                            double normalization)
{
    std::copy(windowed.begin(), windowed.end(), data_.begin() + static_cast<std::ptrdiff_t>(head_ * bins_));
    end_sample_[head_] = window_end_sample;
    normalization_ = normalization;
    head_ = (head_ + 1) % (capacity_ + 1);
    if (stored_ < capacity_ + 1) ++stored_;
}

void DelayedBinBuffer::skip()
{
    head_ = (head_ + 1) % (capacity_ + 1);
    stored_ = 0;
}

std::size_t DelayedBinBuffer::slot(std::size_t delay) const
{
    if (delay > capacity_) {
        throw InsufficientHistory("delayed bins: delay " + std::to_string(delay) + " exceeds capacity "
                                  + std::to_string(capacity_));
    }
    if (delay >= stored_) {
        throw InsufficientHistory("delayed bins: only " + std::to_string(stored_)
                                  + " windows buffered, delay " + std::to_string(delay) + " requested");
    }
    const std::size_t slots = capacity_ + 1;
    return (head_ + slots - 1 - delay) % slots;
}

std::span<const cplx> DelayedBinBuffer::raw(std::size_t delay) const
{
    return {data_.data() + slot(delay) * bins_, bins_};
}

SpectrumSlice DelayedBinBuffer::lookup(std::size_t delay) const
{
    const std::size_t s = slot(delay);
    SpectrumSlice out;
    out.bins.assign(data_.begin() + static_cast<std::ptrdiff_t>(s * bins_),
                    data_.begin() + static_cast<std::ptrdiff_t>((s + 1) * bins_));
    out.first_bin = 0;
    out.window_end_sample = end_sample_[s];
    out.windowed = true;
    out.normalization = normalization_;
    return out;
}

SpectrumSlice delayed_spectrum(const DelayedBinBuffer& buffer, std::size_t delay)
{
    return buffer.lookup(delay);
}

SpectrumSlice complex_spectrum(const SpectrumSlice& now, const SpectrumSlice& delayed)
{
    if (now.bins.size() != delayed.bins.size() || now.first_bin != delayed.first_bin
        || now.windowed != delayed.windowed || now.normalization != delayed.normalization) {
        throw ConfigError("complex_spectrum: slices have different configurations");
    }
    SpectrumSlice out = now;
    for (std::size_t i = 0; i < out.bins.size(); ++i) out.bins[i] += num::times_j(delayed.bins[i]);
    return out;
}

std::size_t delay_capacity(double sample_rate, double min_frequency)
{
    if (!(min_frequency > 0.0)) throw ConfigError("delay capacity: minimum frequency must be positive");
    return static_cast<std::size_t>(std::ceil(sample_rate / (4.0 * min_frequency) - 1e-9));
}

SpectralStream::SpectralStream(const WindowConfig& cfg, double min_frequency)
    : cfg_(cfg),
      msdft_(cfg.samples, -1, static_cast<int>(cfg.bins)),
      buffer_(cfg.bins, delay_capacity(cfg.sample_rate, min_frequency)),
      rect_scratch_(cfg.bins + 2),
      win_scratch_(cfg.bins)
{
    cfg_.validate();
}

void SpectralStream::push(double x, bool record)
{
    msdft_.push(x);
    if (!msdft_.full()) return;
    if (!record) {
        buffer_.skip();
        return;
    }
    msdft_.rectangular_into(rect_scratch_);
    hann_combine(rect_scratch_, win_scratch_);
    buffer_.push(win_scratch_, msdft_.pushed() - 1, static_cast<double>(cfg_.samples) / 2.0);
}

bool SpectralStream::ready(std::size_t max_delay) const
{
    return max_delay <= buffer_.capacity() && buffer_.stored() > max_delay;
}

SpectrumSlice SpectralStream::windowed(std::size_t delay) const { return buffer_.lookup(delay); }

std::vector<cplx> SpectralStream::normalized_windowed(std::size_t delay) const
{
    const auto raw = buffer_.raw(delay);
    const double inv = 2.0 / static_cast<double>(cfg_.samples);
    std::vector<cplx> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] * inv;
    return out;
}

void write_spectrum_csv(std::ostream& os, const SpectrumSlice& slice)
{
    os << "k,re,im,abs\n";
    const double inv = 1.0 / slice.normalization;
    for (std::size_t i = 0; i < slice.bins.size(); ++i) {
        const cplx v = slice.bins[i] * inv;
        os << slice.first_bin + static_cast<int>(i) << ',' << v.real() << ',' << v.imag() << ','
           << std::abs(v) << '\n';
    }
}

} // namespace tdipdft
