#include "oracle.hpp"
#include "tdipdft/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace tdipdft;

namespace {

constexpr double kFs = 50e3;

std::vector<double> interfered(double f0, double fi, double ai, std::size_t len)
{
    auto x = oracle::cosine(1.0, f0, 0.4, kFs, 0, len);
    const auto y = oracle::cosine(ai, fi, 1.3, kFs, 0, len);
    for (std::size_t i = 0; i < len; ++i) x[i] += y[i];
    return x;
}

std::vector<PhasorEstimate> run_td(const std::vector<double>& x, EstimatorConfig cfg)
{
    TdIpdftEstimator est(std::move(cfg));
    return run_estimator(est, x);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST(StopReplay, MatchesRealStopRule)
{
    const auto x = interfered(50.0, 22.0, 0.1, 15000);
    EstimatorConfig off;
    off.stop_rule = false;
    off.max_iterations = 60;
    const auto full = run_td(x, off);
    for (double lambda : {9.5e-10, 1e-8}) {
        for (int q : {37, 5}) {
            EstimatorConfig on;
            on.lambda_re = lambda;
            on.max_iterations = q;
            const auto real = run_td(x, on);
            ASSERT_EQ(real.size(), full.size());
            for (std::size_t i = 0; i < real.size(); ++i) {
                ASSERT_TRUE(full[i].interference_detected);
                const auto rep = replay_stop_rule(full[i].residual_energy_trace, full[i].frequency_trace, lambda, q);
                EXPECT_EQ(rep.frequency, real[i].frequency) << lambda << " " << q << " " << i;
                EXPECT_EQ(rep.iterations, real[i].iterations_used) << lambda << " " << q << " " << i;
            }
        }
    }
}

TEST(StopReplay, EdgeCases)
{
    const std::vector<double> none;
    const std::vector<double> f0{50.1};
    auto r = replay_stop_rule(none, f0, 1e-9, 37);
    EXPECT_EQ(r.frequency, 50.1);
    EXPECT_EQ(r.iterations, 0);

    // stops when the second variation is small: frequency before that iteration
    const std::vector<double> re{1e-3, 1e-3 + 1e-12, 5.0};
    const std::vector<double> ft{50.0, 50.2, 50.3, 50.4};
    r = replay_stop_rule(re, ft, 1e-9, 37);
    EXPECT_EQ(r.frequency, 50.2);
    EXPECT_EQ(r.iterations, 1);
    r = replay_stop_rule(re, ft, 1e-15, 2);
    EXPECT_EQ(r.frequency, 50.3);
    EXPECT_EQ(r.iterations, 2);
    EXPECT_THROW(replay_stop_rule(re, none, 1e-9, 5), ConfigError);
}

TEST(Suites, OobiTones)
{
    const auto t = oobi_tones();
    ASSERT_EQ(t.size(), 42u);
    EXPECT_EQ(t.front(), 10.0);
    EXPECT_EQ(t[15], 25.0);
    EXPECT_EQ(t[16], 75.0);
    EXPECT_EQ(t.back(), 100.0);
}

TEST(Suites, SizesAndClasses)
{
    EXPECT_EQ(standard_suite("signal-frequency").size(), 21u);
    EXPECT_EQ(standard_suite("harmonic").size(), 98u);
    EXPECT_EQ(standard_suite("oobi").size(), 126u);
    EXPECT_EQ(standard_suite("ramp").size(), 4u);
    EXPECT_EQ(standard_suite("step").size(), 4u);
    EXPECT_THROW(standard_suite("nope"), ConfigError);

    std::set<std::string> names;
    for (const auto& c : standard_suite("std-full")) {
        EXPECT_TRUE(names.insert(c.name).second) << c.name;
        EXPECT_FALSE(c.classes.empty()) << c.name;
        if (c.name.starts_with("oobi/") || c.name.starts_with("harmonic/10pct")) {
            EXPECT_EQ(c.classes, std::vector<PerfClass>{PerfClass::M}) << c.name;
        }
        if (c.name.find("-step/") != std::string::npos) EXPECT_EQ(c.ets_offsets, 20) << c.name;
    }
    for (const auto& c : standard_suite("signal-frequency")) {
        const bool p = std::find(c.classes.begin(), c.classes.end(), PerfClass::P) != c.classes.end();
        EXPECT_EQ(p, c.spec.frequency >= 48.0 && c.spec.frequency <= 52.0) << c.name;
    }
}

TEST(SuiteConfig, Json)
{
    const auto cfg = suite_config_from_json(R"({"suite": "step", "snr_db": [70], "runs": 3,
                                               "estimator": "i-ipdft"})");
    EXPECT_EQ(cfg.suite, "step");
    EXPECT_EQ(cfg.snr_db, std::vector<double>{70.0});
    EXPECT_EQ(cfg.seeds.size(), 3u);
    EXPECT_EQ(cfg.estimator.kind, EstimatorKind::IIpdft);
    const auto back = suite_config_from_json(suite_config_to_json(cfg));
    EXPECT_EQ(back.seeds, cfg.seeds);
    EXPECT_EQ(back.suite, cfg.suite);

    EXPECT_THROW(suite_config_from_json(R"({"bogus": 1})"), ConfigError);
    EXPECT_THROW(suite_config_from_json(R"({"suite": "std-full", "include": ["zzz"]})").cases(), ConfigError);
    EXPECT_THROW(suite_config_from_json("{"), ConfigError);
}

TEST(RunSuite, DeterministicOutputs)
{
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "tdipdft_det";
    SuiteConfig cfg;
    cfg.suite = "signal-frequency";
    cfg.include = {"signal-frequency/f=49"};
    cfg.snr_db = {60.0};
    cfg.seeds = {1, 2};
    std::string csv[2], json[2];
    for (int k = 0; k < 2; ++k) {
        cfg.output_dir = (base / std::to_string(k)).string();
        cfg.threads = k == 0 ? 1u : 4u;
        const auto rep = run_suite(cfg);
        EXPECT_EQ(rep.runs.size(), 4u);
        EXPECT_TRUE(rep.passed());
        write_suite_outputs(rep, cfg);
        csv[k] = slurp(fs::path(cfg.output_dir) / "runs.csv");
        json[k] = slurp(fs::path(cfg.output_dir) / "summary.json");
    }
    EXPECT_FALSE(csv[0].empty());
    EXPECT_EQ(csv[0], csv[1]);
    EXPECT_EQ(json[0].size(), json[1].size());
    fs::remove_all(base);
}

TEST(RunSuite, NoiseSeedsAreDistinct)
{
    std::set<std::uint64_t> seen;
    for (const char* name : {"a", "b", "signal-frequency/f=50.0"}) {
        for (double snr : {60.0, 80.0}) {
            for (std::uint64_t s = 1; s <= 3; ++s) {
                for (int off = 0; off < 3; ++off) EXPECT_TRUE(seen.insert(noise_seed(name, snr, s, off)).second);
            }
        }
    }
    EXPECT_EQ(noise_seed("x", 60.0, 1), noise_seed("x", 60.0, 1));
}

TEST(Helpers, FitLine)
{
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{5, 7, 9, 11};
    const auto f = fit_line(x, y);
    EXPECT_NEAR(f.intercept, 3.0, 1e-12);
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.max_residual, 0.0, 1e-12);
}

TEST(Helpers, ReachIteration)
{
    const std::vector<double> c{1.0, 0.5, 0.104, 0.2, 0.104, 0.1, 0.1};
    EXPECT_EQ(reach_iteration(c, 0.1, 0.05), 4);
    EXPECT_EQ(reach_iteration(c, 0.1, 1.0), 2);
    EXPECT_EQ(reach_iteration(c, 0.01, 0.05), -1);
}

TEST(Helpers, ParallelFor)
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(100, 4,
                              [](std::size_t i) {
                                  if (i == 57) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}

TEST(OpCount, LinearInQAndK)
{
    OpCountConfig cfg;
    const auto r = count_ops(cfg);
    ASSERT_EQ(r.oobi.size(), cfg.q_values.size());
    EXPECT_NEAR(r.oobi_simple.max_residual, 0.0, 1e-9);
    EXPECT_NEAR(r.oobi_complex.max_residual, 0.0, 1e-9);
    EXPECT_GT(r.oobi_simple.slope, 0.0);
    EXPECT_NEAR(r.simplified_simple.max_residual, 0.0, 1e-9);
    EXPECT_NEAR(r.e_ipdft_simple.max_residual, 0.0, 1e-9);
    EXPECT_NEAR(r.i_ipdft_simple.max_residual, 0.0, 1e-9);
    EXPECT_GT(r.i_ipdft_simple.slope, 0.0);
    const auto clean = summarize_ops(r.no_interference);
    EXPECT_LT(clean.simple, summarize_ops(r.oobi.front().second).simple);
}

TEST(Calibration, Summary)
{
    std::vector<CalibrationRow> rows(4);
    rows[0] = {"a", "oobi-5", 60, 1, 0.1, 3e-3, 0.9, true};
    rows[1] = {"b", "oobi-10", 60, 1, 0.1, 2e-2, 0.95, true};
    rows[2] = {"c", "oobi-5", 60, 1, 0.1, 5e-4, 0.8, false};
    rows[3] = {"d", "steady-frequency", 60, 1, 0.1, 1e-5, 0.1, true};
    const auto s = summarize_calibration(rows);
    EXPECT_EQ(s.min_ratio_oobi5, 5e-4);
    EXPECT_EQ(s.min_ratio_oobi9, 2e-2);
    EXPECT_EQ(s.min_concentration_oobi, 0.8);
    EXPECT_EQ(s.max_ratio_clean, 1e-5);
    EXPECT_EQ(s.oobi_missed, 1u);
    EXPECT_EQ(s.false_triggers, 1u);
    EXPECT_EQ(s.oobi_windows, 3u);
    EXPECT_EQ(s.clean_windows, 1u);
}

// The delayed quadrature sees the ramp d samples late, which shows up as a
// frequency offset of -rate d / (2 fs).
TEST(Ramp, FrequencyBiasFollowsDelay)
{
    for (double rate : {1.0, -1.0, 0.5}) {
        TestSignalSpec s;
        s.kind = TestKind::FrequencyRamp;
        s.frequency = 48.0;
        s.ramp_rate = rate;
        const auto r = run_td(synthesize(s, kFs, 1.2), {});
        ASSERT_GT(r.size(), 30u);
        for (std::size_t i = 10; i < r.size(); ++i) {
            const double truth = ground_truth_at(s, r[i].timestamp).frequency;
            const double bias = -rate * static_cast<double>(r[i].refined_delay) / (2.0 * kFs);
            EXPECT_NEAR(r[i].frequency - truth, bias, 3e-5) << rate << " " << i;
        }
    }
}
