#include "oracle.hpp"
#include "tdipdft/baselines.hpp"

#include <gtest/gtest.h>

using namespace tdipdft;
using oracle::cplx;

namespace {

constexpr double kFs = 50e3;
const WindowConfig kCfg = WindowConfig::make();

std::vector<cplx> real_bins(const std::vector<double>& x) { return oracle::hann_bins(x, kCfg.bins); }

std::vector<double> two_tones(double f0, double fi, double ai, std::size_t len = 3000)
{
    auto x = oracle::cosine(1.0, f0, 0.3, kFs, 0, len);
    if (ai > 0.0) {
        const auto y = oracle::cosine(ai, fi, -1.1, kFs, 0, len);
        for (std::size_t i = 0; i < len; ++i) x[i] += y[i];
    }
    return x;
}

BaselineConfig config(int p, BaselineVariant v = BaselineVariant::IIpdft)
{
    BaselineConfig c;
    c.inner_iterations = p;
    c.variant = v;
    return c;
}

} // namespace

TEST(EIpdft, CoherentToneIsExact)
{
    const auto bins = real_bins(two_tones(50.0, 0.0, 0.0));
    const auto est = e_ipdft<double>(std::span<const cplx>(bins), 1, 6, 1, kCfg);
    EXPECT_NEAR(est.frequency, 50.0, 1e-6);
    EXPECT_NEAR(est.amplitude, 1.0, 1e-6);
    EXPECT_NEAR(est.phase, 0.3, 1e-6);
}

TEST(EIpdft, CompensationShrinksSelfInterference)
{
    const auto bins = real_bins(two_tones(47.3, 0.0, 0.0));
    const double e0 = std::fabs(e_ipdft<double>(std::span<const cplx>(bins), 1, 6, 0, kCfg).frequency - 47.3);
    const double e2 = std::fabs(e_ipdft<double>(std::span<const cplx>(bins), 1, 6, 2, kCfg).frequency - 47.3);
    EXPECT_GT(e0, 1e-4);
    EXPECT_LT(e2, e0 / 10.0);
}

TEST(EIpdft, SilenceHasNoTone)
{
    const std::vector<cplx> zero(8);
    EXPECT_THROW(e_ipdft<double>(std::span<const cplx>(zero), 1, 6, 1, kCfg), NoTone);
    EXPECT_THROW(i_ipdft_spectrum<double>(zero, config(1)), NoTone);
}

TEST(RealToneSpectrum, MatchesDirectDft)
{
    const auto bins = real_bins(two_tones(48.7, 0.0, 0.0));
    ToneEstimateT<double> t;
    t.frequency = 48.7;
    t.amplitude = 1.0;
    t.phase = 0.3;
    const auto model = real_tone_spectrum<double>(t, 0, 7, kCfg);
    EXPECT_LT(oracle::max_abs_diff(model, bins), 1e-10);
}

TEST(IIpdft, CleanToneDoesNotTrigger)
{
    const auto a = i_ipdft_spectrum<double>(real_bins(two_tones(49.2, 0.0, 0.0)), config(1));
    EXPECT_FALSE(a.interference_detected);
    EXPECT_EQ(a.iterations, 0);
    EXPECT_LT(a.energy_ratio, 1e-6);
}

TEST(IIpdft, RemovesTenPercentInterharmonic)
{
    const auto bins = real_bins(two_tones(50.0, 20.0, 0.1));
    const auto plain = i_ipdft_spectrum<double>(bins, config(1, BaselineVariant::EIpdft3p));
    const auto full = i_ipdft_spectrum<double>(bins, config(1));
    ASSERT_TRUE(full.interference_detected);
    ASSERT_TRUE(full.interference.has_value());
    EXPECT_NEAR(full.interference->frequency, 20.0, 0.05);
    EXPECT_GT(std::fabs(plain.fundamental.frequency - 50.0), 0.05);
    EXPECT_LT(std::fabs(full.fundamental.frequency - 50.0), 1e-3);
    EXPECT_EQ(full.frequency_trace.size(), static_cast<std::size_t>(full.iterations) + 1);
}

TEST(BaselineEstimator, MatchesTdIpdftOnSteadyTone)
{
    const auto x = two_tones(50.0, 0.0, 0.0, 20000);
    BaselineEstimator b;
    TdIpdftEstimator td;
    const auto rb = run_estimator(b, x);
    const auto rt = run_estimator(td, x);
    ASSERT_EQ(rb.size(), rt.size());
    ASSERT_FALSE(rb.empty());
    for (std::size_t i = 0; i < rb.size(); ++i) {
        EXPECT_EQ(rb[i].center_sample, rt[i].center_sample);
        EXPECT_NEAR(rb[i].frequency, rt[i].frequency, 1e-6);
        EXPECT_NEAR(rb[i].amplitude, rt[i].amplitude, 1e-6);
        EXPECT_NEAR(std::remainder(rb[i].phase - rt[i].phase, 2.0 * oracle::kPi), 0.0, 1e-6);
    }
    EXPECT_EQ(b.name(), "i-ipdft");
    EXPECT_EQ(BaselineEstimator(config(1, BaselineVariant::EIpdft3p)).name(), "e-ipdft");
}

TEST(BaselineConfig, Validation)
{
    auto c = config(1);
    c.max_iterations = 0;
    EXPECT_THROW(BaselineEstimator{c}, ConfigError);
    c = config(-1);
    EXPECT_THROW(c.validate(), ConfigError);
    c = config(1);
    c.energy_threshold = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
