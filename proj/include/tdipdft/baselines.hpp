#pragma once

// Reference estimators on the real-signal Hanning spectrum: e-IpDFT (three
// point, iterative negative-image compensation) and i-IpDFT (e-IpDFT plus
// iterative estimation and removal of one interfering tone).

#include "tdipdft/estimator.hpp"

#include <string>
#include <vector>

namespace tdipdft {

enum class BaselineVariant { EIpdft3p, IIpdft };

struct BaselineConfig {
    BaselineVariant variant = BaselineVariant::IIpdft;
    WindowConfig window = WindowConfig::make();
    int inner_iterations = 1;        // P
    int max_iterations = 37;         // Q
    double energy_threshold = 3.9e-3; // residual / total spectral energy
    double reporting_rate = 50.0;
    double min_frequency = 45.0;

    void validate() const;
};

// Spectrum of a real tone, both images, over bins [k_lo, k_hi].
template <class R>
std::vector<complex_t<R>> real_tone_spectrum(const ToneEstimateT<R>& tone, int k_lo, int k_hi, const WindowConfig& cfg)
{
    num::call<R>("wf");
    const complex_t<R> v = num::expj(tone.phase) * (R(0.5) * tone.amplitude);
    auto pos = reconstruct_image<R>(tone.frequency, ImageSign::Positive, v, k_lo, k_hi, cfg);
    const auto neg = reconstruct_image<R>(tone.frequency, ImageSign::Negative, num::conj(v), k_lo, k_hi, cfg);
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] += neg[i];
    return pos;
}

// Negative-image compensated IpDFT. With a seed, its negative image is removed
// before the first interpolation; each of the P rounds then removes the image
// of the latest estimate from the original bins and re-interpolates.
template <class R>
ToneEstimateT<R> e_ipdft(std::span<const complex_t<R>> bins, int k_lo, int k_hi, int rounds, const WindowConfig& cfg,
                         const ToneEstimateT<R>* seed = nullptr)
{
    num::call<R>("e-IpDFT");
    const double df = cfg.resolution();
    const int k_count = static_cast<int>(bins.size());
    std::vector<complex_t<R>> work(bins.begin(), bins.end());
    const auto compensate = [&](const ToneEstimateT<R>& t) {
        const complex_t<R> v = num::conj(num::expj(t.phase) * (R(0.5) * t.amplitude));
        const auto neg = reconstruct_image<R>(t.frequency, ImageSign::Negative, v, 0, k_count - 1, cfg);
        for (std::size_t k = 0; k < work.size(); ++k) work[k] = bins[k] - neg[k];
    };
    if (seed) compensate(*seed);
    ToneEstimateT<R> est = estimate_tone<R>(std::span<const complex_t<R>>(work), k_lo, k_hi, df);
    for (int p = 0; p < rounds; ++p) {
        compensate(est);
        est = interpolate<R>(std::span<const complex_t<R>>(work), est.k_m, df);
    }
    return est;
}

template <class R>
WindowAnalysisT<R> i_ipdft_spectrum(const std::vector<complex_t<R>>& x, const BaselineConfig& cfg)
{
    using C = complex_t<R>;
    const auto& w = cfg.window;
    const int k_count = static_cast<int>(w.bins);
    const int p = cfg.inner_iterations;

    WindowAnalysisT<R> out;
    ToneEstimateT<R> fund;
    {
        num::CountPhase<R> phase("initial");
        fund = e_ipdft<R>(std::span<const C>(x), 1, k_count - 2, p, w);
    }
    out.frequency_trace.push_back(fund.frequency);
    if (cfg.variant == BaselineVariant::EIpdft3p) {
        out.fundamental = {fund.frequency, fund.amplitude, fund.phase};
        return out;
    }

    std::vector<C> residual(x.size());
    {
        num::CountPhase<R> phase("trigger");
        const auto x0 = real_tone_spectrum<R>(fund, 0, k_count - 1, w);
        R e_x{};
        R e_i{};
        for (std::size_t k = 0; k < x.size(); ++k) {
            residual[k] = x[k] - x0[k];
            e_x = k == 0 ? num::norm(x[k]) : e_x + num::norm(x[k]);
            e_i = k == 0 ? num::norm(residual[k]) : e_i + num::norm(residual[k]);
        }
        if (num::value(e_x) == 0.0) throw NoTone("i-IpDFT: empty spectrum");
        out.energy_ratio = e_i / e_x;
        out.interference_detected = out.energy_ratio > R(cfg.energy_threshold);
    }

    std::optional<ToneEstimateT<R>> interf;
    if (out.interference_detected) {
        for (int q = 1; q <= cfg.max_iterations; ++q) {
            num::CountPhase<R> phase("iteration");
            try {
                const auto ti = e_ipdft<R>(std::span<const C>(residual), 1, k_count - 2, p, w,
                                           interf ? &*interf : nullptr);
                const auto xi = real_tone_spectrum<R>(ti, 0, k_count - 1, w);
                std::vector<C> cleaned(x.size());
                for (std::size_t k = 0; k < x.size(); ++k) cleaned[k] = x[k] - xi[k];
                const auto f = e_ipdft<R>(std::span<const C>(cleaned), 1, k_count - 2, p, w, &fund);
                const auto x0 = real_tone_spectrum<R>(f, 0, k_count - 1, w);
                for (std::size_t k = 0; k < x.size(); ++k) residual[k] = x[k] - x0[k];
                interf = ti;
                fund = f;
            } catch (const NoTone&) {
                break;
            } catch (const InsufficientNeighbors&) {
                break;
            }
            ++out.iterations;
            out.frequency_trace.push_back(fund.frequency);
        }
    }
    out.fundamental = {fund.frequency, fund.amplitude, fund.phase};
    if (interf) out.interference = ToneT<R>{interf->frequency, interf->amplitude, interf->phase};
    return out;
}

class BaselineEstimator final : public StreamingEstimator {
public:
    explicit BaselineEstimator(BaselineConfig cfg = {});
    std::string name() const override;
    const BaselineConfig& config() const { return cfg_; }

private:
    PhasorEstimate analyze(const SpectralStream& stream) override;
    BaselineConfig cfg_;
};

} // namespace tdipdft
