#pragma once

// Test waveforms for the PMU compliance conditions and their closed-form
// synchrophasor trajectories.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdipdft {

enum class TestKind {
    SteadyFrequency,
    Harmonic,
    OOBInterference,
    AmplitudeMod,
    PhaseMod,
    FrequencyRamp,
    AmplitudeStep,
    PhaseStep,
    Composite,
};

std::string_view kind_name(TestKind kind);
TestKind kind_from_name(std::string_view name);

struct TestSignalSpec {
    TestKind kind = TestKind::SteadyFrequency;
    double amplitude = 1.0; // A0, per-unit
    double frequency = 50.0;
    double phase = 0.0;
    double nominal_frequency = 50.0;

    // Harmonic / OOBInterference: extra tone, amplitude relative to A0.
    // A positive order places it at order * frequency, otherwise at distortion_frequency.
    int distortion_order = 0;
    double distortion_frequency = 0.0;
    double distortion_amplitude = 0.0;
    double distortion_phase = 0.0;

    // AmplitudeMod: depth kx; PhaseMod: depth ka in rad
    double modulation_depth = 0.0;
    double modulation_frequency = 0.0;

    // FrequencyRamp: f = frequency + rate (t - start) for start <= t <= stop
    double ramp_rate = 0.0;
    double ramp_start = 0.0;
    double ramp_stop = std::numeric_limits<double>::infinity();

    // AmplitudeStep: relative (0.1 = +10%); PhaseStep: rad
    double step_magnitude = 0.0;
    double step_time = 0.0;

    // Composite: `base` plus a multiplicative amplitude modulation overlay
    TestKind base = TestKind::SteadyFrequency;
    double overlay_depth = 0.1;
    double overlay_frequency = 5.0;

    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t noise_seed = 0;

    // Kind that drives the waveform (base for Composite).
    TestKind effective_kind() const { return kind == TestKind::Composite ? base : kind; }
    double distortion_tone_frequency() const;
    void validate() const;
};

struct PhasorTruth {
    double time = 0.0;
    double amplitude = 0.0;
    double phase = 0.0; // against the nominal-frequency reference, (-pi, pi]
    double frequency = 0.0;
    double rocof = 0.0;
};

// round(duration * fs) samples; sample n is the waveform at t = n / fs plus
// seeded white Gaussian noise with variance A0^2/2 * 10^(-SNR/10).
std::vector<double> synthesize(const TestSignalSpec& spec, double sample_rate, double duration);

PhasorTruth ground_truth_at(const TestSignalSpec& spec, double t);

// Sample index where a step takes effect (nearest sample to step_time).
std::int64_t step_sample(const TestSignalSpec& spec, double sample_rate);

// JSON object form of a spec; unknown keys are rejected.
std::string spec_to_json(const TestSignalSpec& spec);
TestSignalSpec spec_from_json(std::string_view text);
std::vector<TestSignalSpec> specs_from_json(std::string_view text); // object or array

void write_samples_binary(std::ostream& os, std::span<const double> samples); // little-endian float64
std::vector<double> read_samples_binary(std::istream& is);
void write_samples_csv(std::ostream& os, std::span<const double> samples, double sample_rate);

} // namespace tdipdft
