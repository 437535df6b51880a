#pragma once

// Compliance runner: standard test suites, trigger and stop-rule calibration
// sweeps, the TD-IpDFT / i-IpDFT convergence comparison and operation counts.

#include "tdipdft/baselines.hpp"
#include "tdipdft/estimator.hpp"
#include "tdipdft/metrics.hpp"
#include "tdipdft/opcount.hpp"
#include "tdipdft/siggen.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tdipdft {

enum class EstimatorKind { TdIpdft, IIpdft, EIpdft };

std::string_view estimator_kind_name(EstimatorKind kind);
EstimatorKind estimator_kind_from_name(std::string_view name);

struct EstimatorSetup {
    EstimatorKind kind = EstimatorKind::TdIpdft;
    EstimatorConfig td;
    BaselineConfig baseline;

    std::unique_ptr<StreamingEstimator> make() const;
    double reporting_rate() const;
};

// One test condition. Noise level and seed are filled in per run.
struct SuiteCase {
    std::string name;
    TestSignalSpec spec;
    double duration = 1.0; // s
    std::vector<PerfClass> classes{PerfClass::P, PerfClass::M};
    // Steps: the run is repeated with the step instant moved by ets_spacing,
    // and the reports are merged on a time axis relative to the step.
    int ets_offsets = 1;
    double ets_spacing = 0.0;
};

struct SuiteOptions {
    double nominal_frequency = 50.0;
    double reporting_rate = 50.0;
    double static_duration = 0.5; // s, steady-state, harmonic and OOBI tests
    int ets_offsets = 20;
};

// Named suites: std-full, signal-frequency, harmonic, harmonic-10, oobi,
// oobi-5, modulation, ramp, step.
std::vector<SuiteCase> standard_suite(std::string_view name, const SuiteOptions& opt = {});
std::vector<std::string> standard_suite_names();

// Interfering tones of the OOBI test: 1 Hz grid below f_nom - Fr/2 and above
// f_nom + Fr/2, from 10 Hz up to 2 f_nom.
std::vector<double> oobi_tones(double nominal_frequency = 50.0, double reporting_rate = 50.0, double step = 1.0);

struct SuiteConfig {
    std::string suite = "std-full";
    std::vector<std::string> include; // case-name prefixes; empty keeps all
    std::vector<SuiteCase> tests;     // explicit cases, used instead of `suite` when non-empty
    SuiteOptions options;
    std::vector<double> snr_db{60.0, 80.0};
    std::vector<std::uint64_t> seeds{1};
    EstimatorSetup estimator;
    double sample_rate = 50e3;
    unsigned threads = 0; // 0: hardware concurrency
    std::string limits_file; // empty: shipped table
    std::string output_dir;  // empty: nothing written
    bool write_reports = false;
    bool keep_samples = false;

    void validate() const;
    std::vector<SuiteCase> cases() const; // resolved and filtered; throws when empty
    LimitTable limits() const;
};

// JSON config merged over the defaults; unknown keys are rejected.
SuiteConfig suite_config_from_json(std::string_view text);
std::string suite_config_to_json(const SuiteConfig& cfg);

struct ClassResult {
    PerfClass cls = PerfClass::P;
    ErrorReport report;
    LimitCheck check;
    std::vector<Interval> exclusions;
};

struct CaseRun {
    std::string name;
    TestKind kind = TestKind::SteadyFrequency;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::size_t reports = 0;
    std::size_t detected = 0; // reports flagged as interfered
    int max_iterations = 0;
    std::vector<ClassResult> classes;
    std::vector<PhasorEstimate> estimates; // only with keep_samples / write_reports

    bool passed() const;
};

struct SuiteReport {
    std::vector<CaseRun> runs;
    std::size_t violations() const; // failing (run, class) pairs
    bool passed() const { return violations() == 0; }
};

std::uint64_t noise_seed(std::string_view case_name, double snr_db, std::uint64_t seed, int offset = 0);

CaseRun run_case(const SuiteCase& test, double snr_db, std::uint64_t seed, const SuiteConfig& cfg,
                 const LimitTable& limits);
SuiteReport run_suite(const SuiteConfig& cfg);

// runs.csv (one row per run and class), summary.json and, when enabled,
// reports/<case>.csv with the raw estimates.
void write_suite_outputs(const SuiteReport& report, const SuiteConfig& cfg);
void write_runs_csv(std::ostream& os, const SuiteReport& report);
std::string suite_summary_json(const SuiteReport& report, const SuiteConfig& cfg);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---- trigger calibration

struct CalibrationConfig {
    std::vector<double> snr_db{60.0, 80.0};
    std::vector<std::uint64_t> seeds{1};
    EstimatorConfig estimator;
    SuiteOptions options;
    double sample_rate = 50e3;
    std::vector<double> oobi_levels{0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
    double composite_depth = 0.1;
    double composite_frequency = 5.0;
    unsigned threads = 0;
};

struct CalibrationRow {
    std::string test;
    std::string group; // oobi-5..oobi-10 or the test kind
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    double time = 0.0;
    double energy_ratio = 0.0;        // E_c/E_o
    double concentration_ratio = 0.0; // E_c/E_i
    bool triggered = false;
};

struct CalibrationSummary {
    double min_ratio_oobi5 = 0.0;          // over 5% OOBI, E_c/E_o
    double min_ratio_oobi9 = 0.0;          // over >= 9% OOBI, E_c/E_o
    double min_concentration_oobi = 0.0;   // over 5-9% OOBI, E_c/E_i
    double max_ratio_clean = 0.0;          // over all non-OOBI windows, E_c/E_o
    std::size_t oobi_missed = 0;           // OOBI windows (>= 5%) not triggered
    std::size_t false_triggers = 0;        // non-OOBI windows triggered
    std::size_t oobi_windows = 0;
    std::size_t clean_windows = 0;
};

std::vector<CalibrationRow> calibrate_thresholds(const CalibrationConfig& cfg);
CalibrationSummary summarize_calibration(std::span<const CalibrationRow> rows);
void write_calibration_csv(std::ostream& os, std::span<const CalibrationRow> rows);

// ---- stop-rule sweep

// Frequency and iteration count the stop rule would have produced on a window
// analysed without it (traces from a stop_rule = false run).
struct StopReplay {
    double frequency = 0.0;
    int iterations = 0;
};

StopReplay replay_stop_rule(std::span<const double> residual_trace, std::span<const double> frequency_trace,
                            double lambda_re, int max_iterations);

std::vector<double> default_lambda_re_grid(); // 23 values over [1e-11, 1e-8]

struct SweepConfig {
    std::vector<double> lambdas = default_lambda_re_grid();
    std::vector<int> q_values{37, 200};
    std::vector<double> snr_db{60.0, 80.0};
    int runs = 200;
    std::vector<double> fundamentals{50.0};
    std::vector<double> tones = oobi_tones();
    double interference_amplitude = 0.1;
    int windows = 43; // reports per tone and run
    EstimatorConfig estimator;
    double sample_rate = 50e3;
    std::uint64_t seed_base = 0;
    unsigned threads = 0;
};

struct SweepRow {
    double lambda_re = 0.0;
    int q = 0;
    double snr_db = 0.0;
    int run = 0;
    double max_delta_error = 0.0; // |f - f0| / delta_f, max over tones and windows
    int max_iterations = 0;
    double mean_iterations = 0.0;
};

std::vector<SweepRow> sweep_lambda_re(const SweepConfig& cfg);
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

// ---- convergence comparison

struct CompareConfig {
    std::vector<double> snr_db{60.0, 80.0};
    int runs = 10;
    std::vector<double> fundamentals{50.0};
    std::vector<double> tones = oobi_tones();
    double interference_amplitude = 0.1;
    double duration = 0.3;
    int max_iterations = 40;
    double reach_tolerance = 0.05; // relative slack on the converged level
    EstimatorConfig td;
    BaselineConfig baseline;
    double sample_rate = 50e3;
    std::uint64_t seed_base = 0;
    unsigned threads = 0;
};

struct ConvergenceCurve {
    double snr_db = 0.0;
    std::vector<double> td;  // max delta error after q iterations, q = 0..Q
    std::vector<double> iip;
    double converged_level = 0.0; // i-IpDFT at Q
    int td_reach = -1;            // first q from which the curve stays within tolerance of the level
    int iip_reach = -1;
    int advantage() const { return iip_reach - td_reach; }
};

struct ToneError {
    double snr_db = 0.0;
    double tone = 0.0;
    double td = 0.0; // max delta error at Q, stop rule on for TD
    double iip = 0.0;
};

struct CompareResult {
    std::vector<ConvergenceCurve> curves;
    std::vector<ToneError> tones;
};

CompareResult compare_convergence(const CompareConfig& cfg);
int reach_iteration(std::span<const double> curve, double level, double tolerance);
void write_convergence_csv(std::ostream& os, const CompareResult& result);
void write_tone_errors_csv(std::ostream& os, const CompareResult& result);

// ---- operation counts

struct OpSummary {
    std::uint64_t simple = 0;  // + - x
    std::uint64_t complex = 0; // / sqrt sin cos exp angle
    std::uint64_t compare = 0;
    std::uint64_t round = 0;
    std::uint64_t calls = 0;
};

OpSummary summarize_ops(const opcount::Tally& tally);
OpSummary summarize_ops(const opcount::Ledger& ledger);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_residual = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct OpCountConfig {
    double sample_rate = 50e3;
    std::vector<int> q_values{1, 2, 3, 4, 5};
    std::vector<int> k_values{8, 10, 12, 16};
    double interference_frequency = 25.0;
    double interference_amplitude = 0.1;
    int baseline_inner_iterations = 1;
};

struct OpCountResult {
    opcount::Ledger no_interference;
    std::vector<std::pair<int, opcount::Ledger>> oobi; // per Q, stop rule off
    LinearFit oobi_simple, oobi_complex;                // vs Q
    std::vector<std::pair<int, OpSummary>> simplified_td; // per K
    std::vector<std::pair<int, OpSummary>> e_ipdft;       // per K
    LinearFit simplified_simple, simplified_complex;       // vs K
    LinearFit e_ipdft_simple, e_ipdft_complex;             // vs K
    std::vector<std::pair<int, OpSummary>> i_ipdft;        // per Q
    LinearFit i_ipdft_simple, i_ipdft_complex;
};

OpCountResult count_ops(const OpCountConfig& cfg);
std::string op_count_json(const OpCountResult& result);

} // namespace tdipdft
