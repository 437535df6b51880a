#pragma once

// TD-IpDFT synchrophasor estimator: IpDFT on the delayed in-quadrature
// spectrum, an energy trigger for out-of-band interference and an iterative
// interference/fundamental refinement stopped on residual-energy variation.

#include "tdipdft/error.hpp"
#include "tdipdft/ipdft.hpp"
#include "tdipdft/num.hpp"
#include "tdipdft/quadrature.hpp"
#include "tdipdft/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tdipdft {

struct EstimatorConfig {
    WindowConfig window = WindowConfig::make();
    double lambda_o_lower = 7.4e-4; // E_c/E_o lower threshold
    double lambda_o_upper = 2.4e-3; // E_c/E_o upper threshold
    double lambda_i = 0.765;        // E_c/E_i concentration threshold
    double lambda_re = 9.5e-10;     // residual-energy variation stop threshold
    int max_iterations = 37;        // Q
    std::vector<int> interference_bins{0, 1, 2, 4, 5, 6, 7};
    double reporting_rate = 50.0;
    double min_frequency = 45.0; // sizes the delayed-bin buffer
    QsgOptions qsg;
    bool stop_rule = true; // false always runs Q iterations once triggered

    void validate() const;
    // interference_bins that have two neighbors inside [0, K-1]
    std::vector<int> interference_search_bins() const;
};

struct ToneParams {
    double frequency = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

struct PhasorEstimate {
    double timestamp = 0.0; // window center, s
    std::int64_t center_sample = 0;
    double frequency = 0.0;
    double amplitude = 0.0;
    double phase = 0.0; // against the nominal-frequency reference, (-pi, pi]
    double rocof = 0.0;
    int iterations_used = 0;
    bool interference_detected = false;
    std::optional<ToneParams> detected_interference;
    std::vector<double> residual_energy_trace;
    std::vector<double> frequency_trace; // initial estimate, then one entry per iteration
    double energy_ratio = 0.0;           // E_c/E_o
    double concentration_ratio = 0.0;    // E_c/E_i
    int k_c = 0;
    std::size_t refined_delay = 0;
};

template <class R>
struct EnergiesT {
    R e_o{};
    R e_i{};
    R e_c{};
    int k_c = 0;
};

using Energies = EnergiesT<double>;

// E_o over X_fH, E_i over the residual, and E_c around its peak k_c taken over
// `candidates` (sorted ascending; ties go to the first).
template <class R>
EnergiesT<R> spectral_energies(std::span<const complex_t<R>> xf, std::span<const complex_t<R>> residual,
                               std::span<const int> candidates)
{
    num::call<R>("energies");
    const int k_count = static_cast<int>(xf.size());
    if (residual.size() != xf.size() || k_count < 3 || candidates.empty()) {
        throw ConfigError("spectral_energies: need matching spectra of at least three bins");
    }
    EnergiesT<R> e;
    std::vector<R> mag(xf.size());
    for (std::size_t k = 0; k < xf.size(); ++k) {
        e.e_o = k == 0 ? num::norm(xf[k]) : e.e_o + num::norm(xf[k]);
        mag[k] = num::norm(residual[k]);
        e.e_i = k == 0 ? mag[k] : e.e_i + mag[k];
    }
    e.k_c = candidates.front();
    R best = mag[static_cast<std::size_t>(e.k_c)];
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const R m = mag[static_cast<std::size_t>(candidates[i])];
        if (m > best) {
            best = m;
            e.k_c = candidates[i];
        }
    }
    int lo = e.k_c - 1;
    if (e.k_c == 0) lo = 0;
    if (e.k_c == k_count - 1) lo = k_count - 3;
    e.e_c = mag[static_cast<std::size_t>(lo)] + mag[static_cast<std::size_t>(lo + 1)]
            + mag[static_cast<std::size_t>(lo + 2)];
    return e;
}

template <class R>
struct TriggerT {
    bool fired = false;
    R energy_ratio{};
    R concentration_ratio{};
};

template <class R>
TriggerT<R> oobi_decision(R e_c, R e_o, R e_i, const EstimatorConfig& cfg)
{
    TriggerT<R> t;
    if (num::value(e_o) == 0.0 || num::value(e_i) == 0.0) return t;
    t.energy_ratio = e_c / e_o;
    if (t.energy_ratio >= R(cfg.lambda_o_upper)) {
        t.fired = true;
        return t;
    }
    if (t.energy_ratio < R(cfg.lambda_o_lower)) return t;
    t.concentration_ratio = e_c / e_i;
    t.fired = t.concentration_ratio >= R(cfg.lambda_i);
    return t;
}

inline bool oobi_decision(double e_c, double e_o, double e_i, const EstimatorConfig& cfg)
{
    return oobi_decision<double>(e_c, e_o, e_i, cfg).fired;
}

inline double rocof(double f_now, double f_prev, double reporting_rate) { return (f_now - f_prev) * reporting_rate; }

template <class R>
int find_peak_among(std::span<const complex_t<R>> bins, std::span<const int> candidates)
{
    num::call<R>("peak");
    int best = candidates.front();
    R best_mag = num::norm(bins[static_cast<std::size_t>(best)]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const R m = num::norm(bins[static_cast<std::size_t>(candidates[i])]);
        if (m > best_mag) {
            best_mag = m;
            best = candidates[i];
        }
    }
    return best;
}

template <class R>
struct ToneT {
    R frequency{};
    R amplitude{};
    R phase{};
};

// Result of one analysis window. Phases refer to window sample 0.
template <class R>
struct WindowAnalysisT {
    ToneT<R> fundamental;
    bool interference_detected = false;
    std::optional<ToneT<R>> interference;
    int iterations = 0;
    std::vector<R> residual_trace;
    std::vector<R> frequency_trace;
    R energy_ratio{};
    R concentration_ratio{};
    int k_c = 0;
    std::size_t refined_delay = 0;
};

using WindowAnalysis = WindowAnalysisT<double>;

// Interference loop on a delayed in-quadrature spectrum built with delay d.
template <class R>
WindowAnalysisT<R> td_ipdft_spectrum(const std::vector<complex_t<R>>& xf, std::size_t delay,
                                     const EstimatorConfig& cfg)
{
    using C = complex_t<R>;
    const auto& w = cfg.window;
    const int k_count = static_cast<int>(w.bins);
    const double df = w.resolution();
    const std::vector<int> search = cfg.interference_search_bins();

    WindowAnalysisT<R> out;
    out.refined_delay = delay;

    ToneEstimateT<R> fund;
    {
        num::CountPhase<R> phase("initial");
        fund = estimate_tone<R>(std::span<const C>(xf), 1, k_count - 2, df);
    }
    out.frequency_trace.push_back(fund.frequency);

    std::vector<C> xi(xf.size());
    std::vector<C> xi_neg(xf.size());
    std::vector<C> residual(xf.size());
    std::optional<ToneEstimateT<R>> interf;
    complex_t<R> fund_sigma_plus{};
    R re_prev = R(0.0);

    for (int q = 1; q <= cfg.max_iterations; ++q) {
        num::CountPhase<R> phase(q == 1 ? "first-pass" : "iteration");
        const auto x0 = td_sr<R>(fund.frequency, fund.amplitude, fund.phase, delay, 0, k_count - 1, w);
        fund_sigma_plus = x0.gains.sigma_plus;
        for (std::size_t k = 0; k < xf.size(); ++k) residual[k] = xf[k] - x0.bins[k] - xi_neg[k];

        if (q == 1) {
            num::CountPhase<R> trig("trigger");
            const auto e = spectral_energies<R>(xf, residual, cfg.interference_bins);
            const auto t = oobi_decision<R>(e.e_c, e.e_o, e.e_i, cfg);
            out.k_c = e.k_c;
            out.energy_ratio = t.energy_ratio;
            // diagnostic only, kept out of the counted arithmetic
            out.concentration_ratio = num::value(e.e_i) == 0.0 ? R(0.0) : R(num::value(e.e_c) / num::value(e.e_i));
            out.interference_detected = t.fired;
            if (!t.fired) break;
        }

        num::CountPhase<R> loop("iteration");
        R re{};
        for (std::size_t k = 0; k < xf.size(); ++k) {
            const R n = num::norm(xf[k] - x0.bins[k] - xi[k]);
            re = k == 0 ? n : re + n;
        }
        out.residual_trace.push_back(re);
        if (cfg.stop_rule && num::fabs(re - re_prev) < R(cfg.lambda_re)) break;
        re_prev = re;

        try {
            const int k_i = find_peak_among<R>(std::span<const C>(residual), search);
            interf = interpolate<R>(std::span<const C>(residual), k_i, df);
            const auto sr = td_sr<R>(interf->frequency, interf->amplitude, interf->phase, delay, 0, k_count - 1, w);
            std::vector<C> cleaned(xf.size());
            for (std::size_t k = 0; k < xf.size(); ++k) cleaned[k] = xf[k] - sr.bins[k];
            const auto refined = estimate_tone<R>(std::span<const C>(cleaned), 1, k_count - 2, df);
            xi = sr.bins;
            xi_neg = sr.negative;
            fund = refined;
        } catch (const NoTone&) {
            break;
        } catch (const InsufficientNeighbors&) {
            break;
        } catch (const QuadratureDegenerate&) {
            break;
        }
        ++out.iterations;
        out.frequency_trace.push_back(fund.frequency);
    }

    num::CountPhase<R> phase("correction");
    CorrectedT<R> corrected;
    if (!out.interference_detected) {
        corrected = apply_gain_correction<R>(fund.amplitude, fund.phase, fund_sigma_plus);
    } else {
        corrected = td_apc<R>(fund.frequency, fund.amplitude, fund.phase, delay, w.sample_rate);
    }
    out.fundamental = {fund.frequency, corrected.amplitude, corrected.phase};
    if (out.interference_detected && interf) {
        try {
            const auto ci = td_apc<R>(interf->frequency, interf->amplitude, interf->phase, delay, w.sample_rate);
            out.interference = ToneT<R>{interf->frequency, ci.amplitude, ci.phase};
        } catch (const QuadratureDegenerate&) {
        }
    }
    return out;
}

// Full window: TD-QSG followed by the interference loop.
template <class R>
WindowAnalysisT<R> td_ipdft_window(const WindowedHistory& history, const EstimatorConfig& cfg)
{
    QsgResultT<R> q;
    {
        num::CountPhase<R> phase("TD-QSG");
        q = td_qsg<R>(history, cfg.window, cfg.qsg);
    }
    return td_ipdft_spectrum<R>(q.complex_bins, q.refined_delay, cfg);
}

// Streaming estimator interface shared by TD-IpDFT and the baselines.
class PhasorEstimator {
public:
    virtual ~PhasorEstimator() = default;
    // Feeds one sample; returns a report when one falls due.
    virtual std::optional<PhasorEstimate> push(double sample) = 0;
    virtual std::string name() const = 0;
};

// Owns the spectral stream and the reporting schedule. Reports fall on window
// centers that are multiples of fs/Fr once the delayed-bin history is full.
class StreamingEstimator : public PhasorEstimator {
public:
    std::optional<PhasorEstimate> push(double sample) final;

    const SpectralStream& stream() const { return stream_; }
    const WindowConfig& window() const { return window_; }
    double reporting_rate() const { return reporting_rate_; }

protected:
    StreamingEstimator(const WindowConfig& window, double reporting_rate, double min_frequency);

    // Frequency, amplitude and phase at window sample 0 plus diagnostics;
    // timestamp, reference phase and ROCOF are filled in by the caller.
    virtual PhasorEstimate analyze(const SpectralStream& stream) = 0;

private:
    WindowConfig window_;
    double reporting_rate_;
    std::int64_t report_interval_;
    SpectralStream stream_;
    std::optional<double> previous_frequency_;
};

class TdIpdftEstimator final : public StreamingEstimator {
public:
    explicit TdIpdftEstimator(EstimatorConfig cfg = {});
    std::string name() const override { return "td-ipdft"; }
    const EstimatorConfig& config() const { return cfg_; }

private:
    PhasorEstimate analyze(const SpectralStream& stream) override;
    EstimatorConfig cfg_;
};

// Window-start phase to synchrophasor phase at the window center.
double reference_phase(double window_start_phase, double frequency, std::int64_t center_sample,
                       const WindowConfig& window);

std::vector<PhasorEstimate> run_estimator(PhasorEstimator& estimator, std::span<const double> samples);

// timestamp,frequency,amplitude,phase,rocof,iterations,interference
void write_estimates_csv(std::ostream& os, std::span<const PhasorEstimate> estimates);

} // namespace tdipdft
