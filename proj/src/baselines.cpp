#include "tdipdft/baselines.hpp"

namespace tdipdft {

void BaselineConfig::validate() const
{
    window.validate();
    if (inner_iterations < 0) throw ConfigError("baseline: P must be non-negative");
    if (max_iterations < 1) throw ConfigError("baseline: Q must be at least 1");
    if (!(energy_threshold > 0.0)) throw ConfigError("baseline: energy threshold must be positive");
    if (window.bins < 4) throw ConfigError("baseline: need at least four bins");
}

BaselineEstimator::BaselineEstimator(BaselineConfig cfg)
    : StreamingEstimator(cfg.window, cfg.reporting_rate, cfg.min_frequency), cfg_(std::move(cfg))
{
    cfg_.validate();
}

std::string BaselineEstimator::name() const
{
    return cfg_.variant == BaselineVariant::IIpdft ? "i-ipdft" : "e-ipdft";
}

PhasorEstimate BaselineEstimator::analyze(const SpectralStream& stream)
{
    const auto a = i_ipdft_spectrum<double>(stream.normalized_windowed(0), cfg_);
    PhasorEstimate est;
    est.frequency = a.fundamental.frequency;
    est.amplitude = a.fundamental.amplitude;
    est.phase = a.fundamental.phase;
    est.iterations_used = a.iterations;
    est.interference_detected = a.interference_detected;
    if (a.interference) {
        est.detected_interference = ToneParams{a.interference->frequency, a.interference->amplitude,
                                               a.interference->phase};
    }
    est.frequency_trace = a.frequency_trace;
    est.energy_ratio = a.energy_ratio;
    return est;
}

} // namespace tdipdft
