#include "tdipdft/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace tdipdft {

void EstimatorConfig::validate() const
{
    window.validate();
    if (!(lambda_o_lower > 0.0) || !(lambda_o_lower < lambda_o_upper)) {
        throw ConfigError("estimator: need 0 < lambda_o_lower < lambda_o_upper");
    }
    if (!(lambda_i > 0.0) || lambda_i > 1.0) throw ConfigError("estimator: lambda_i must lie in (0, 1]");
    if (!(lambda_re >= 0.0)) throw ConfigError("estimator: lambda_re must be non-negative");
    if (max_iterations < 1) throw ConfigError("estimator: Q must be >= 1");
    if (!(reporting_rate > 0.0)) throw ConfigError("estimator: reporting rate must be positive");
    if (interference_bins.empty()) throw ConfigError("estimator: interference bin set is empty");
    const int k_count = static_cast<int>(window.bins);
    for (std::size_t i = 0; i < interference_bins.size(); ++i) {
        const int k = interference_bins[i];
        if (k < 0 || k >= k_count) throw ConfigError("estimator: interference bin outside [0, K-1]");
        if (i > 0 && k <= interference_bins[i - 1]) throw ConfigError("estimator: interference bins must ascend");
    }
    if (interference_search_bins().empty()) throw ConfigError("estimator: no interference bin has two neighbors");
}

std::vector<int> EstimatorConfig::interference_search_bins() const
{
    std::vector<int> out;
    const int k_count = static_cast<int>(window.bins);
    for (int k : interference_bins) {
        if (k >= 1 && k <= k_count - 2) out.push_back(k);
    }
    return out;
}

double reference_phase(double window_start_phase, double frequency, std::int64_t center_sample,
                       const WindowConfig& window)
{
    // advance N/2 samples to the center, then remove the nominal rotation up to that sample
    const double to_center = num::pi * frequency / window.resolution();
    const double cycles = std::fmod(window.nominal_frequency * static_cast<double>(center_sample), window.sample_rate)
                          / window.sample_rate;
    return num::wrap_phase(window_start_phase + to_center - 2.0 * num::pi * cycles);
}

StreamingEstimator::StreamingEstimator(const WindowConfig& window, double reporting_rate, double min_frequency)
    : window_(window), reporting_rate_(reporting_rate), report_interval_(0), stream_(window, min_frequency)
{
    window_.validate();
    if (window_.samples % 2 != 0) throw ConfigError("estimator: window length must be even");
    const double interval = window_.sample_rate / reporting_rate;
    if (!(reporting_rate > 0.0) || std::fabs(interval - std::round(interval)) > 1e-9 * interval) {
        throw ConfigError("estimator: fs / Fr must be an integer");
    }
    report_interval_ = static_cast<std::int64_t>(std::llround(interval));
}

std::optional<PhasorEstimate> StreamingEstimator::push(double sample)
{
    // only the samples within the delay horizon of the next report need windowed bins
    const std::int64_t half = static_cast<std::int64_t>(window_.samples / 2);
    const std::int64_t next = stream_.pushed() + 1;
    const std::int64_t until_report = ((half - next) % report_interval_ + report_interval_) % report_interval_;
    stream_.push(sample, until_report <= static_cast<std::int64_t>(stream_.capacity()));
    const std::int64_t center = stream_.pushed() - static_cast<std::int64_t>(window_.samples / 2);
    if (center % report_interval_ != 0 || !stream_.ready()) return std::nullopt;

    PhasorEstimate est = analyze(stream_);
    est.center_sample = center;
    est.timestamp = static_cast<double>(center) / window_.sample_rate;
    est.phase = reference_phase(est.phase, est.frequency, center, window_);
    est.rocof = previous_frequency_ ? rocof(est.frequency, *previous_frequency_, reporting_rate_) : 0.0;
    previous_frequency_ = est.frequency;
    return est;
}

TdIpdftEstimator::TdIpdftEstimator(EstimatorConfig cfg)
    : StreamingEstimator(cfg.window, cfg.reporting_rate, cfg.min_frequency), cfg_(std::move(cfg))
{
    cfg_.validate();
}

PhasorEstimate TdIpdftEstimator::analyze(const SpectralStream& stream)
{
    const auto a = td_ipdft_window<double>(stream, cfg_);
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
    est.residual_energy_trace = a.residual_trace;
    est.frequency_trace = a.frequency_trace;
    est.energy_ratio = a.energy_ratio;
    est.concentration_ratio = a.concentration_ratio;
    est.k_c = a.k_c;
    est.refined_delay = a.refined_delay;
    return est;
}

std::vector<PhasorEstimate> run_estimator(PhasorEstimator& estimator, std::span<const double> samples)
{
    std::vector<PhasorEstimate> out;
    for (double x : samples) {
        if (auto est = estimator.push(x)) out.push_back(std::move(*est));
    }
    return out;
}

void write_estimates_csv(std::ostream& os, std::span<const PhasorEstimate> estimates)
{
    os << "timestamp,frequency,amplitude,phase,rocof,iterations,interference\n";
    const auto precision = os.precision(12);
    for (const auto& e : estimates) {
        os << e.timestamp << ',' << e.frequency << ',' << e.amplitude << ',' << e.phase << ',' << e.rocof << ','
           << e.iterations_used << ',' << (e.interference_detected ? 1 : 0) << '\n';
    }
    os.precision(precision);
}

} // namespace tdipdft
