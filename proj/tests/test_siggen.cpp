#include "oracle.hpp"
#include "tdipdft/error.hpp"
#include "tdipdft/siggen.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace tdipdft;

namespace {

constexpr double kFs = 50e3;

TestSignalSpec phase_mod(double fm)
{
    TestSignalSpec s;
    s.kind = TestKind::PhaseMod;
    s.modulation_depth = oracle::kPi / 18.0;
    s.modulation_frequency = fm;
    return s;
}

// frequency implied by the truth phase, by central difference
double implied_frequency(const TestSignalSpec& s, double t, double h = 1e-6)
{
    const double d = std::remainder(ground_truth_at(s, t + h).phase - ground_truth_at(s, t - h).phase,
                                    2.0 * std::numbers::pi);
    return s.nominal_frequency + d / (2.0 * h * 2.0 * std::numbers::pi);
}

} // namespace

TEST(Siggen, SteadyMatchesCosine)
{
    TestSignalSpec s;
    s.frequency = 50.5;
    s.phase = 0.3;
    const auto x = synthesize(s, kFs, 0.2);
    ASSERT_EQ(x.size(), 10000u);
    const auto ref = oracle::cosine(1.0, 50.5, 0.3, kFs, 0, x.size());
    EXPECT_LT(oracle::max_abs_diff(x, ref), 1e-12);
    EXPECT_DOUBLE_EQ(synthesize(TestSignalSpec{}, kFs, 0.2)[0], 1.0);
}

TEST(Siggen, HarmonicAddsTone)
{
    TestSignalSpec s;
    s.kind = TestKind::OOBInterference;
    s.distortion_frequency = 25.0;
    s.distortion_amplitude = 0.35;
    const auto x = synthesize(s, kFs, 0.2);
    EXPECT_NEAR(x[0], 1.35, 1e-15);
    auto ref = oracle::cosine(1.0, 50.0, 0.0, kFs, 0, x.size());
    const auto tone = oracle::cosine(0.35, 25.0, 0.0, kFs, 0, x.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += tone[i];
    EXPECT_LT(oracle::max_abs_diff(x, ref), 1e-12);

    s.kind = TestKind::Harmonic;
    s.distortion_order = 3;
    EXPECT_DOUBLE_EQ(s.distortion_tone_frequency(), 150.0);
}

TEST(Siggen, NoiseVarianceFollowsSnr)
{
    TestSignalSpec clean;
    TestSignalSpec noisy = clean;
    noisy.snr_db = 20.0;
    noisy.noise_seed = 7;
    const auto a = synthesize(clean, kFs, 20.0);
    const auto b = synthesize(noisy, kFs, 20.0);
    ASSERT_EQ(a.size(), 1000000u);
    long double sum = 0.0L, sum2 = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double e = b[i] - a[i];
        sum += e;
        sum2 += e * e;
    }
    const double mean = static_cast<double>(sum / a.size());
    const double var = static_cast<double>(sum2 / a.size()) - mean * mean;
    EXPECT_NEAR(var, 0.005, 0.005 * 0.05);
}

TEST(Siggen, Deterministic)
{
    TestSignalSpec s;
    s.snr_db = 60.0;
    s.noise_seed = 42;
    EXPECT_EQ(synthesize(s, kFs, 0.2), synthesize(s, kFs, 0.2));
    auto other = s;
    other.noise_seed = 43;
    EXPECT_NE(synthesize(s, kFs, 0.2), synthesize(other, kFs, 0.2));
}

TEST(Siggen, PhaseModPeakDeviation)
{
    const auto s = phase_mod(2.0);
    double peak = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const auto p = ground_truth_at(s, i * 0.5 / 2000.0);
        peak = std::max(peak, std::fabs(p.frequency - 50.0));
    }
    EXPECT_NEAR(peak, 0.349066, 1e-5);
}

TEST(Siggen, TruthFrequencyMatchesPhaseSlope)
{
    auto pm = phase_mod(3.0);
    pm.frequency = 50.4;
    TestSignalSpec ramp;
    ramp.kind = TestKind::FrequencyRamp;
    ramp.ramp_rate = 1.0;
    ramp.ramp_start = 0.1;
    ramp.ramp_stop = 0.9;
    for (double t : {0.05, 0.2, 0.37, 0.61, 0.95}) {
        EXPECT_NEAR(implied_frequency(pm, t), ground_truth_at(pm, t).frequency, 1e-6) << t;
        EXPECT_NEAR(implied_frequency(ramp, t), ground_truth_at(ramp, t).frequency, 1e-6) << t;
    }
    // rocof as the derivative of frequency
    const double h = 1e-5;
    for (double t : {0.2, 0.45}) {
        const double d = (ground_truth_at(pm, t + h).frequency - ground_truth_at(pm, t - h).frequency) / (2 * h);
        EXPECT_NEAR(d, ground_truth_at(pm, t).rocof, 1e-5);
    }
    EXPECT_DOUBLE_EQ(ground_truth_at(ramp, 0.5).rocof, 1.0);
    EXPECT_DOUBLE_EQ(ground_truth_at(ramp, 0.95).rocof, 0.0);
    EXPECT_NEAR(ground_truth_at(ramp, 0.95).frequency, 50.8, 1e-12);
}

TEST(Siggen, SynthesisMatchesTruthPhasor)
{
    // x(n) = Re{A e^{j(2 pi f0 t + phase)}} for every kind without an overlay tone
    std::vector<TestSignalSpec> specs;
    specs.push_back(phase_mod(1.0));
    TestSignalSpec am;
    am.kind = TestKind::AmplitudeMod;
    am.modulation_depth = 0.1;
    am.modulation_frequency = 2.0;
    specs.push_back(am);
    TestSignalSpec ramp;
    ramp.kind = TestKind::FrequencyRamp;
    ramp.ramp_rate = -1.0;
    ramp.ramp_start = 0.05;
    specs.push_back(ramp);
    TestSignalSpec step;
    step.kind = TestKind::PhaseStep;
    step.step_magnitude = std::numbers::pi / 18.0;
    step.step_time = 0.1;
    specs.push_back(step);
    TestSignalSpec comp;
    comp.kind = TestKind::Composite;
    comp.base = TestKind::AmplitudeStep;
    comp.step_magnitude = 0.1;
    comp.step_time = 0.1;
    specs.push_back(comp);
    for (const auto& s : specs) {
        const auto x = synthesize(s, kFs, 0.2);
        for (std::size_t n = 0; n < x.size(); n += 37) {
            const double t = n / kFs;
            const auto p = ground_truth_at(s, t);
            const double v = p.amplitude * std::cos(2.0 * std::numbers::pi * 50.0 * t + p.phase);
            ASSERT_NEAR(x[n], v, 1e-9) << kind_name(s.kind) << " n=" << n;
        }
    }
}

TEST(Siggen, StepTakesEffectAtSample)
{
    TestSignalSpec s;
    s.kind = TestKind::AmplitudeStep;
    s.step_magnitude = 0.1;
    s.step_time = 0.1;
    EXPECT_EQ(step_sample(s, kFs), 5000);
    const auto x = synthesize(s, kFs, 0.2);
    EXPECT_NEAR(x[4999], std::cos(2.0 * std::numbers::pi * 50.0 * 4999 / kFs), 1e-12);
    EXPECT_NEAR(x[5000], 1.1, 1e-12);
    EXPECT_DOUBLE_EQ(ground_truth_at(s, 0.0999).amplitude, 1.0);
    EXPECT_DOUBLE_EQ(ground_truth_at(s, 0.1).amplitude, 1.1);
}

TEST(Siggen, RejectsBadInput)
{
    TestSignalSpec s;
    EXPECT_THROW(synthesize(s, 0.0, 1.0), ConfigError);
    EXPECT_THROW(synthesize(s, kFs, 0.1), ConfigError);
    EXPECT_THROW(synthesize(s, 400.0, 1.0), ConfigError);
    s.kind = TestKind::PhaseStep;
    s.step_time = 2.0;
    EXPECT_THROW(synthesize(s, kFs, 1.0), ConfigError);
    auto pm = phase_mod(6.0);
    EXPECT_THROW(pm.validate(), ConfigError);
    EXPECT_THROW(kind_from_name("square"), ConfigError);
}

TEST(Siggen, JsonRoundTrip)
{
    TestSignalSpec s;
    s.kind = TestKind::Composite;
    s.base = TestKind::FrequencyRamp;
    s.ramp_rate = 0.5;
    s.snr_db = 60.0;
    s.noise_seed = 99;
    const auto back = spec_from_json(spec_to_json(s));
    EXPECT_EQ(back.kind, s.kind);
    EXPECT_EQ(back.base, s.base);
    EXPECT_DOUBLE_EQ(back.ramp_rate, 0.5);
    EXPECT_TRUE(std::isinf(back.ramp_stop));
    EXPECT_DOUBLE_EQ(back.snr_db, 60.0);
    EXPECT_EQ(back.noise_seed, 99u);
    EXPECT_EQ(spec_to_json(back), spec_to_json(s));

    EXPECT_THROW(spec_from_json(R"({"kind":"harmonic","distortion_order":2,"bogus":1})"), ConfigError);
    EXPECT_EQ(specs_from_json(R"([{"kind":"harmonic","distortion_order":2},{"kind":"oobi","distortion_frequency":10}])").size(), 2u);
}

TEST(Siggen, SampleFilesRoundTrip)
{
    const std::vector<double> x{1.0, -0.5, 3.25e-7, 0.0};
    std::stringstream ss;
    write_samples_binary(ss, x);
    EXPECT_EQ(ss.str().size(), 32u);
    EXPECT_EQ(read_samples_binary(ss), x);
    std::ostringstream csv;
    write_samples_csv(csv, x, 4.0);
    EXPECT_EQ(csv.str().substr(0, 8), "n,t,x\n0,");
}
