#include "oracle.hpp"
#include "tdipdft/estimator.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tdipdft;
using oracle::cplx;

namespace {

constexpr double kFs = 50e3;

std::vector<double> tones(std::initializer_list<std::array<double, 3>> parts, std::size_t len)
{
    std::vector<double> x(len, 0.0);
    for (const auto& p : parts) {
        const auto t = oracle::cosine(p[0], p[1], p[2], kFs, 0, len);
        for (std::size_t i = 0; i < len; ++i) x[i] += t[i];
    }
    return x;
}

std::vector<PhasorEstimate> run(const std::vector<double>& x, EstimatorConfig cfg = {})
{
    TdIpdftEstimator est(std::move(cfg));
    return run_estimator(est, x);
}

// truth synchrophasor phase of A cos(2 pi f t + phi) at sample c
double truth_phase(double f, double phi, std::int64_t c)
{
    const long double t = static_cast<long double>(c) / kFs;
    return static_cast<double>(std::remainder(2.0L * oracle::kPi * (f - 50.0) * t + phi, 2.0L * oracle::kPi));
}

double tve(const PhasorEstimate& e, double a, double phi)
{
    return std::abs(std::polar(e.amplitude, e.phase) - std::polar(a, phi)) / a;
}

} // namespace

TEST(SpectralEnergies, ZeroResidual)
{
    const std::vector<cplx> xf{0.1, 0.2, 0.3, 1.0, 0.3, 0.2, 0.1, 0.05};
    const std::vector<cplx> zero(8);
    const std::vector<int> bins{0, 1, 2, 4, 5, 6, 7};
    const auto e = spectral_energies<double>(xf, zero, bins);
    EXPECT_EQ(e.k_c, 0);
    EXPECT_EQ(e.e_c, 0.0);
    EXPECT_EQ(e.e_i, 0.0);
    EXPECT_NEAR(e.e_o, 0.01 + 0.04 + 0.09 + 1.0 + 0.09 + 0.04 + 0.01 + 0.0025, 1e-15);
    EXPECT_FALSE(oobi_decision(e.e_c, e.e_o, e.e_i, EstimatorConfig{}));
}

TEST(SpectralEnergies, EdgeRules)
{
    const std::vector<cplx> xf(8, cplx(1.0, 0.0));
    const std::vector<int> bins{0, 1, 2, 4, 5, 6, 7};
    std::vector<cplx> r{0.1, 0.01, 0.02, 0.0, 0.01, 0.03, 0.04, 0.5};
    auto e = spectral_energies<double>(xf, r, bins);
    EXPECT_EQ(e.k_c, 7);
    EXPECT_NEAR(e.e_c, 0.03 * 0.03 + 0.04 * 0.04 + 0.25, 1e-15);
    r = {0.5, 0.01, 0.02, 0.0, 0.01, 0.03, 0.04, 0.1};
    e = spectral_energies<double>(xf, r, bins);
    EXPECT_EQ(e.k_c, 0);
    EXPECT_NEAR(e.e_c, 0.25 + 0.0001 + 0.0004, 1e-15);
    // bin 3 is never a candidate but does count as a neighbor of 4
    r = {0.0, 0.0, 0.0, 9.0, 0.5, 0.0, 0.0, 0.0};
    e = spectral_energies<double>(xf, r, bins);
    EXPECT_EQ(e.k_c, 4);
    EXPECT_NEAR(e.e_c, 81.25, 1e-12);
}

TEST(OobiDecision, Thresholds)
{
    const EstimatorConfig cfg;
    EXPECT_FALSE(oobi_decision(1e-5, 1.0, 1e-5, cfg));
    EXPECT_TRUE(oobi_decision(3e-3, 1.0, 1.0, cfg));
    EXPECT_FALSE(oobi_decision(1e-3, 1.0, 1e-3 / 0.70, cfg));
    EXPECT_TRUE(oobi_decision(1e-3, 1.0, 1e-3 / 0.80, cfg));
    EXPECT_FALSE(oobi_decision(1.0, 0.0, 1.0, cfg));
    EXPECT_FALSE(oobi_decision(1.0, 1.0, 0.0, cfg));
}

TEST(Rocof, BackwardDifference)
{
    EXPECT_EQ(rocof(50.0, 50.0, 50.0), 0.0);
    EXPECT_NEAR(rocof(50.1, 50.0, 50.0), 5.0, 1e-12);
}

TEST(EstimatorConfig, Validation)
{
    EstimatorConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.lambda_o_lower = 3e-3;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_iterations = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.interference_bins = {0, 8};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lambda_i = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_EQ(EstimatorConfig{}.interference_search_bins(), (std::vector<int>{1, 2, 4, 5, 6}));
}

TEST(TdIpdft, SteadyNominalTone)
{
    const auto out = run(tones({{1.0, 50.0, 0.0}}, 20000));
    ASSERT_FALSE(out.empty());
    for (const auto& e : out) {
        EXPECT_EQ(e.center_sample % 1000, 0);
        EXPECT_NEAR(e.frequency, 50.0, 1e-6);
        EXPECT_LT(tve(e, 1.0, truth_phase(50.0, 0.0, e.center_sample)), 1e-8);
        EXPECT_EQ(e.iterations_used, 0);
        EXPECT_FALSE(e.interference_detected);
        EXPECT_EQ(e.refined_delay, 250u);
    }
    EXPECT_EQ(out.front().rocof, 0.0);
}

TEST(TdIpdft, OffNominalToneAccuracy)
{
    for (double f : {45.0, 47.3, 49.3, 52.5, 55.0}) {
        const auto out = run(tones({{1.0, f, 0.4}}, 15000));
        ASSERT_FALSE(out.empty());
        for (const auto& e : out) {
            EXPECT_NEAR(e.frequency, f, 1e-4) << f;
            EXPECT_LT(tve(e, 1.0, truth_phase(f, 0.4, e.center_sample)), 1e-4) << f;
            EXPECT_FALSE(e.interference_detected) << f;
        }
    }
}

TEST(TdIpdft, DetectsStrongInterharmonic)
{
    const auto out = run(tones({{1.0, 45.0, 0.0}, {0.35, 100.0, 0.0}}, 15000));
    ASSERT_FALSE(out.empty());
    for (const auto& e : out) {
        EXPECT_TRUE(e.interference_detected);
        ASSERT_TRUE(e.detected_interference.has_value());
        EXPECT_NEAR(e.detected_interference->frequency, 100.0, 0.05);
        EXPECT_NEAR(e.frequency, 45.0, 1e-3);
        EXPECT_LE(e.iterations_used, 37);
    }
}

TEST(TdIpdft, ReportsAtFixedCenters)
{
    const auto out = run(tones({{1.0, 50.0, 0.0}}, 12000));
    // history is full after N + 278 samples; center 2000 is the first due report after that
    ASSERT_GE(out.size(), 2u);
    EXPECT_EQ(out.front().center_sample, 2000);
    EXPECT_DOUBLE_EQ(out.front().timestamp, 0.04);
}
