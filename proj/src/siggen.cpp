#include "tdipdft/siggen.hpp"

#include "tdipdft/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

namespace tdipdft {

namespace {

using json = nlohmann::json;
using ld = long double;

constexpr ld kTwoPi = 2.0L * std::numbers::pi_v<long double>;
constexpr double kWindowCycles = 3.0;

constexpr std::array<std::pair<TestKind, std::string_view>, 9> kKindNames{{
    {TestKind::SteadyFrequency, "steady-frequency"},
    {TestKind::Harmonic, "harmonic"},
    {TestKind::OOBInterference, "oobi"},
    {TestKind::AmplitudeMod, "amplitude-mod"},
    {TestKind::PhaseMod, "phase-mod"},
    {TestKind::FrequencyRamp, "frequency-ramp"},
    {TestKind::AmplitudeStep, "amplitude-step"},
    {TestKind::PhaseStep, "phase-step"},
    {TestKind::Composite, "composite"},
}};

bool is_step(TestKind k) { return k == TestKind::AmplitudeStep || k == TestKind::PhaseStep; }

// long double argument reduction, double-precision evaluation
ld cosr(ld arg) { return std::cos(static_cast<double>(std::remainder(arg, kTwoPi))); }
ld sinr(ld arg) { return std::sin(static_cast<double>(std::remainder(arg, kTwoPi))); }

double wrap(ld phi)
{
    double v = static_cast<double>(std::remainder(phi, kTwoPi));
    if (v <= -std::numbers::pi) v += 2.0 * std::numbers::pi;
    return v;
}

// Fundamental envelope and phase pieces; `stepped` says whether the step is in effect.
struct Fundamental {
    ld amplitude;
    ld offset_phase; // psi(t) - 2 pi f t, i.e. everything beyond the carrier
    ld frequency;
    ld rocof;
};

Fundamental fundamental_at(const TestSignalSpec& s, ld t, bool stepped)
{
    const TestKind k = s.effective_kind();
    Fundamental f{s.amplitude, s.phase, s.frequency, 0.0L};
    const ld wm = kTwoPi * s.modulation_frequency;
    switch (k) {
    case TestKind::AmplitudeMod:
        f.amplitude *= 1.0L + s.modulation_depth * cosr(wm * t);
        break;
    case TestKind::PhaseMod:
        f.offset_phase += s.modulation_depth * cosr(wm * t - std::numbers::pi_v<long double>);
        f.frequency -= s.modulation_depth * s.modulation_frequency * sinr(wm * t - std::numbers::pi_v<long double>);
        f.rocof = -s.modulation_depth * s.modulation_frequency * wm * cosr(wm * t - std::numbers::pi_v<long double>);
        break;
    case TestKind::FrequencyRamp: {
        const ld rate = s.ramp_rate;
        if (t >= s.ramp_start) {
            const ld span = std::min<ld>(t, s.ramp_stop) - s.ramp_start;
            f.offset_phase += std::numbers::pi_v<long double> * rate * span * span;
            f.frequency += rate * span;
            if (t > s.ramp_stop) f.offset_phase += kTwoPi * rate * span * (t - s.ramp_stop);
            else f.rocof = rate;
        }
        break;
    }
    case TestKind::AmplitudeStep:
        if (stepped) f.amplitude *= 1.0L + s.step_magnitude;
        break;
    case TestKind::PhaseStep:
        if (stepped) f.offset_phase += s.step_magnitude;
        break;
    default:
        break;
    }
    return f;
}

ld overlay(const TestSignalSpec& s, ld t)
{
    if (s.kind != TestKind::Composite) return 1.0L;
    return 1.0L + s.overlay_depth * cosr(kTwoPi * s.overlay_frequency * t);
}

double optional_number(const json& j, const char* key, double fallback)
{
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
        return std::numeric_limits<double>::infinity();
    }
    return v.get<double>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

std::string_view kind_name(TestKind kind)
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "?";
}

TestKind kind_from_name(std::string_view name)
{
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw ConfigError("unknown test kind '" + std::string(name) + "'");
}

double TestSignalSpec::distortion_tone_frequency() const
{
    return distortion_order > 0 ? distortion_order * frequency : distortion_frequency;
}

void TestSignalSpec::validate() const
{
    if (!(amplitude >= 0.0)) throw ConfigError("spec: negative amplitude");
    if (!(frequency > 0.0)) throw ConfigError("spec: fundamental frequency must be positive");
    if (!(nominal_frequency > 0.0)) throw ConfigError("spec: nominal frequency must be positive");
    if (base == TestKind::Composite) throw ConfigError("spec: composite base cannot be composite");
    const TestKind k = effective_kind();
    if (k == TestKind::Harmonic || k == TestKind::OOBInterference) {
        if (!(distortion_amplitude >= 0.0 && distortion_amplitude <= 1.0)) {
            throw ConfigError("spec: relative distortion amplitude must lie in [0, 1]");
        }
        if (!(distortion_tone_frequency() > 0.0)) throw ConfigError("spec: distortion tone frequency must be positive");
    }
    if (k == TestKind::AmplitudeMod || k == TestKind::PhaseMod) {
        if (!(modulation_frequency >= 0.1 && modulation_frequency <= 5.0)) {
            throw ConfigError("spec: modulation frequency must lie in [0.1, 5] Hz");
        }
        if (!(modulation_depth >= 0.0)) throw ConfigError("spec: negative modulation depth");
        if (k == TestKind::AmplitudeMod && modulation_depth > 1.0) {
            throw ConfigError("spec: amplitude modulation depth above 1");
        }
    }
    if (k == TestKind::FrequencyRamp && !(ramp_stop >= ramp_start)) throw ConfigError("spec: ramp stops before it starts");
    if (k == TestKind::AmplitudeStep && !(step_magnitude > -1.0)) throw ConfigError("spec: amplitude step below -100%");
    if (kind == TestKind::Composite) {
        if (!(overlay_depth >= 0.0 && overlay_depth <= 1.0)) throw ConfigError("spec: overlay depth must lie in [0, 1]");
        if (!(overlay_frequency > 0.0)) throw ConfigError("spec: overlay frequency must be positive");
    }
    if (std::isnan(snr_db)) throw ConfigError("spec: SNR is NaN");
}

std::int64_t step_sample(const TestSignalSpec& spec, double sample_rate)
{
    return static_cast<std::int64_t>(std::llround(spec.step_time * sample_rate));
}

std::vector<double> synthesize(const TestSignalSpec& spec, double sample_rate, double duration)
{
    spec.validate();
    if (!(sample_rate > 0.0)) throw ConfigError("synthesize: sample rate must be positive");
    if (!(duration >= 2.0 * kWindowCycles / spec.nominal_frequency)) {
        throw ConfigError("synthesize: duration shorter than two analysis windows");
    }
    const TestKind k = spec.effective_kind();
    double highest = spec.frequency;
    if (k == TestKind::FrequencyRamp) {
        const double end = std::min(duration, spec.ramp_stop);
        highest = std::max(highest, spec.frequency + spec.ramp_rate * std::max(0.0, end - spec.ramp_start));
    }
    if (k == TestKind::Harmonic || k == TestKind::OOBInterference) highest = std::max(highest, spec.distortion_tone_frequency());
    if (sample_rate < 10.0 * highest) throw ConfigError("synthesize: fs below 10x the highest tone frequency");
    if (is_step(k) && !(spec.step_time >= 0.0 && spec.step_time <= duration)) {
        throw ConfigError("synthesize: step instant outside the signal duration");
    }

    const auto count = static_cast<std::size_t>(std::llround(duration * sample_rate));
    const std::int64_t n_step = step_sample(spec, sample_rate);
    const bool has_tone = (k == TestKind::Harmonic || k == TestKind::OOBInterference) && spec.distortion_amplitude > 0.0;
    const ld f_tone = spec.distortion_tone_frequency();
    std::vector<double> x(count);
    for (std::size_t n = 0; n < count; ++n) {
        const ld t = static_cast<ld>(n) / sample_rate;
        const auto f = fundamental_at(spec, t, static_cast<std::int64_t>(n) >= n_step);
        ld v = f.amplitude * cosr(kTwoPi * spec.frequency * t + f.offset_phase);
        if (has_tone) v += spec.amplitude * spec.distortion_amplitude * cosr(kTwoPi * f_tone * t + spec.distortion_phase);
        x[n] = static_cast<double>(v * overlay(spec, t));
    }
    if (std::isfinite(spec.snr_db)) {
        const double sigma = std::sqrt(spec.amplitude * spec.amplitude / 2.0 * std::pow(10.0, -spec.snr_db / 10.0));
        std::mt19937_64 rng(spec.noise_seed);
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& v : x) v += noise(rng);
    }
    return x;
}

PhasorTruth ground_truth_at(const TestSignalSpec& spec, double t)
{
    spec.validate();
    if (!(t >= 0.0)) throw ConfigError("ground truth: negative time");
    const bool stepped = t >= spec.step_time;
    const auto f = fundamental_at(spec, t, stepped);
    PhasorTruth p;
    p.time = t;
    p.amplitude = static_cast<double>(f.amplitude * overlay(spec, t));
    p.phase = wrap(kTwoPi * (static_cast<ld>(spec.frequency) - spec.nominal_frequency) * static_cast<ld>(t) + f.offset_phase);
    p.frequency = static_cast<double>(f.frequency);
    p.rocof = static_cast<double>(f.rocof);
    return p;
}

std::string spec_to_json(const TestSignalSpec& s)
{
    json j;
    j["kind"] = kind_name(s.kind);
    j["amplitude"] = s.amplitude;
    j["frequency"] = s.frequency;
    j["phase"] = s.phase;
    j["nominal_frequency"] = s.nominal_frequency;
    j["distortion_order"] = s.distortion_order;
    j["distortion_frequency"] = s.distortion_frequency;
    j["distortion_amplitude"] = s.distortion_amplitude;
    j["distortion_phase"] = s.distortion_phase;
    j["modulation_depth"] = s.modulation_depth;
    j["modulation_frequency"] = s.modulation_frequency;
    j["ramp_rate"] = s.ramp_rate;
    j["ramp_start"] = s.ramp_start;
    j["ramp_stop"] = finite_or_null(s.ramp_stop);
    j["step_magnitude"] = s.step_magnitude;
    j["step_time"] = s.step_time;
    j["base"] = kind_name(s.base);
    j["overlay_depth"] = s.overlay_depth;
    j["overlay_frequency"] = s.overlay_frequency;
    j["snr_db"] = finite_or_null(s.snr_db);
    j["noise_seed"] = s.noise_seed;
    return j.dump(2);
}

namespace {

TestSignalSpec spec_from(const json& j)
{
    static const std::array<std::string_view, 21> known{
        "kind", "amplitude", "frequency", "phase", "nominal_frequency", "distortion_order", "distortion_frequency",
        "distortion_amplitude", "distortion_phase", "modulation_depth", "modulation_frequency", "ramp_rate",
        "ramp_start", "ramp_stop", "step_magnitude", "step_time", "base", "overlay_depth", "overlay_frequency",
        "snr_db", "noise_seed"};
    if (!j.is_object()) throw ConfigError("spec: expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("spec: unknown key '" + key + "'");
    }
    TestSignalSpec s;
    try {
        if (!j.contains("kind")) throw ConfigError("spec: missing 'kind'");
        s.kind = kind_from_name(j.at("kind").get<std::string>());
        s.amplitude = j.value("amplitude", s.amplitude);
        s.frequency = j.value("frequency", s.frequency);
        s.phase = j.value("phase", s.phase);
        s.nominal_frequency = j.value("nominal_frequency", s.nominal_frequency);
        s.distortion_order = j.value("distortion_order", s.distortion_order);
        s.distortion_frequency = j.value("distortion_frequency", s.distortion_frequency);
        s.distortion_amplitude = j.value("distortion_amplitude", s.distortion_amplitude);
        s.distortion_phase = j.value("distortion_phase", s.distortion_phase);
        s.modulation_depth = j.value("modulation_depth", s.modulation_depth);
        s.modulation_frequency = j.value("modulation_frequency", s.modulation_frequency);
        s.ramp_rate = j.value("ramp_rate", s.ramp_rate);
        s.ramp_start = j.value("ramp_start", s.ramp_start);
        s.ramp_stop = optional_number(j, "ramp_stop", s.ramp_stop);
        s.step_magnitude = j.value("step_magnitude", s.step_magnitude);
        s.step_time = j.value("step_time", s.step_time);
        if (j.contains("base")) s.base = kind_from_name(j.at("base").get<std::string>());
        s.overlay_depth = j.value("overlay_depth", s.overlay_depth);
        s.overlay_frequency = j.value("overlay_frequency", s.overlay_frequency);
        s.snr_db = optional_number(j, "snr_db", s.snr_db);
        s.noise_seed = j.value("noise_seed", s.noise_seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("spec: ") + e.what());
    }
    s.validate();
    return s;
}

json parse(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("spec: ") + e.what());
    }
}

} // namespace

TestSignalSpec spec_from_json(std::string_view text) { return spec_from(parse(text)); }

std::vector<TestSignalSpec> specs_from_json(std::string_view text)
{
    const json j = parse(text);
    std::vector<TestSignalSpec> out;
    if (j.is_array()) {
        for (const auto& item : j) out.push_back(spec_from(item));
    } else {
        out.push_back(spec_from(j));
    }
    return out;
}

void write_samples_binary(std::ostream& os, std::span<const double> samples)
{
    for (double v : samples) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        std::array<char, 8> bytes;
        for (auto& b : bytes) {
            b = static_cast<char>(bits & 0xffu);
            bits >>= 8;
        }
        os.write(bytes.data(), bytes.size());
    }
}

std::vector<double> read_samples_binary(std::istream& is)
{
    std::vector<double> out;
    std::array<char, 8> bytes;
    while (is.read(bytes.data(), bytes.size())) {
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
        out.push_back(std::bit_cast<double>(bits));
    }
    if (is.gcount() != 0) throw ConfigError("samples: trailing partial float64");
    return out;
}

void write_samples_csv(std::ostream& os, std::span<const double> samples, double sample_rate)
{
    os << "n,t,x\n";
    const auto precision = os.precision(17);
    for (std::size_t n = 0; n < samples.size(); ++n) {
        os << n << ',' << static_cast<double>(n) / sample_rate << ',' << samples[n] << '\n';
    }
    os.precision(precision);
}

} // namespace tdipdft
