#include "tdipdft/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace tdipdft;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    return os;
}

std::vector<std::uint64_t> seed_range(int runs)
{
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= runs; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return s;
}

struct SuiteFlags {
    std::string config;
    std::string suite;
    std::vector<std::string> include;
    std::vector<double> snr;
    std::vector<std::uint64_t> seeds;
    int runs = 0;
    std::string estimator;
    double lambda_re = -1.0;
    int max_iterations = 0;
    bool no_stop_rule = false;
    double threshold = -1.0;
    unsigned threads = 0;
    std::string out;
    std::string limits;
    bool write_reports = false;
};

void add_suite_flags(CLI::App* cmd, SuiteFlags& f)
{
    cmd->add_option("-c,--config", f.config, "JSON suite config; flags below override it")->check(CLI::ExistingFile);
    cmd->add_option("--suite", f.suite, "named suite")->check(CLI::IsMember(standard_suite_names()));
    cmd->add_option("--include", f.include, "keep only cases whose name starts with one of these prefixes");
    cmd->add_option("--snr", f.snr, "SNR levels in dB");
    cmd->add_option("--seeds", f.seeds, "noise seeds");
    cmd->add_option("--runs", f.runs, "use seeds 1..runs")->check(CLI::PositiveNumber);
    cmd->add_option("--estimator", f.estimator, "td-ipdft, i-ipdft or e-ipdft");
    cmd->add_option("--lambda-re", f.lambda_re, "stop-rule threshold");
    cmd->add_option("-Q,--max-iterations", f.max_iterations, "iteration cap")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-stop-rule", f.no_stop_rule, "always run Q iterations");
    cmd->add_option("--energy-threshold", f.threshold, "i-IpDFT trigger threshold");
    cmd->add_option("-j,--threads", f.threads, "worker threads (0: all cores)");
    cmd->add_option("-o,--out", f.out, "output directory");
    cmd->add_option("--limits", f.limits, "limit table JSON")->check(CLI::ExistingFile);
    cmd->add_flag("--write-reports", f.write_reports, "also write raw estimates and per-report errors");
}

SuiteConfig suite_config(const SuiteFlags& f)
{
    SuiteConfig cfg = f.config.empty() ? SuiteConfig{} : suite_config_from_json(read_file(f.config));
    if (!f.suite.empty()) {
        cfg.suite = f.suite;
        cfg.tests.clear();
    }
    if (!f.include.empty()) cfg.include = f.include;
    if (!f.snr.empty()) cfg.snr_db = f.snr;
    if (!f.seeds.empty()) cfg.seeds = f.seeds;
    if (f.runs > 0) cfg.seeds = seed_range(f.runs);
    if (!f.estimator.empty()) cfg.estimator.kind = estimator_kind_from_name(f.estimator);
    if (f.lambda_re >= 0.0) cfg.estimator.td.lambda_re = f.lambda_re;
    if (f.max_iterations > 0) {
        cfg.estimator.td.max_iterations = f.max_iterations;
        cfg.estimator.baseline.max_iterations = f.max_iterations;
    }
    if (f.no_stop_rule) cfg.estimator.td.stop_rule = false;
    if (f.threshold > 0.0) cfg.estimator.baseline.energy_threshold = f.threshold;
    if (f.threads > 0) cfg.threads = f.threads;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (!f.limits.empty()) cfg.limits_file = f.limits;
    if (f.write_reports) cfg.write_reports = true;
    cfg.validate();
    return cfg;
}

int cmd_run_suite(const SuiteFlags& f)
{
    const auto cfg = suite_config(f);
    const auto report = run_suite(cfg);
    write_suite_outputs(report, cfg);
    const auto summary = nlohmann::json::parse(suite_summary_json(report, cfg));
    std::cout << std::left << std::setw(34) << "group" << std::setw(12) << "violations" << "worst\n";
    for (const auto& [key, g] : summary["groups"].items()) {
        std::cout << std::setw(34) << key << std::setw(12) << g["violations"].get<std::size_t>();
        for (const auto& [name, v] : g.items()) {
            if (name != "violations") std::cout << name << '=' << v["value"].get<double>() << ' ';
        }
        std::cout << '\n';
    }
    for (const auto& fail : summary["failing"]) {
        std::cout << "FAIL " << fail["case"].get<std::string>() << " class " << fail["class"].get<std::string>()
                  << " snr " << fail["snr_db"].get<double>() << " seed " << fail["seed"].get<std::uint64_t>() << '\n';
    }
    std::cout << report.runs.size() << " runs, " << report.violations() << " violations\n";
    return report.passed() ? 0 : 1;
}

TestSignalSpec load_spec(const std::string& path, const std::string& inline_json)
{
    if (!inline_json.empty()) return spec_from_json(inline_json);
    if (!path.empty()) return spec_from_json(read_file(path));
    return TestSignalSpec{};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"TD-IpDFT synchrophasor estimator and compliance harness"};
    app.require_subcommand(1);

    SuiteFlags suite_flags;
    auto* run = app.add_subcommand("run-suite", "run a compliance suite; exit 0 iff every limit passes");
    add_suite_flags(run, suite_flags);

    std::vector<double> cal_snr{60.0, 80.0};
    int cal_runs = 1;
    unsigned cal_threads = 0;
    std::string cal_out = "calibration";
    auto* cal = app.add_subcommand("calibrate", "E_c/E_o and E_c/E_i per window over all test conditions");
    cal->add_option("--snr", cal_snr, "SNR levels in dB");
    cal->add_option("--runs", cal_runs, "seeds per condition")->check(CLI::PositiveNumber);
    cal->add_option("-j,--threads", cal_threads, "worker threads");
    cal->add_option("-o,--out", cal_out, "output directory");

    SweepConfig sweep;
    std::string sweep_out = "sweep";
    auto* sw = app.add_subcommand("sweep-stop-rule", "max delta error and iterations per lambda_Re and Q");
    sw->add_option("--lambda", sweep.lambdas, "lambda_Re values");
    sw->add_option("-Q,--q", sweep.q_values, "iteration caps");
    sw->add_option("--snr", sweep.snr_db, "SNR levels in dB");
    sw->add_option("--runs", sweep.runs, "runs per SNR")->check(CLI::PositiveNumber);
    sw->add_option("--f0", sweep.fundamentals, "fundamental frequencies");
    sw->add_option("--windows", sweep.windows, "reports per tone and run")->check(CLI::PositiveNumber);
    sw->add_option("--amplitude", sweep.interference_amplitude, "interference amplitude (relative)");
    sw->add_option("-j,--threads", sweep.threads, "worker threads");
    sw->add_option("-o,--out", sweep_out, "output directory");

    CompareConfig cmp;
    std::string cmp_out = "compare";
    auto* cm = app.add_subcommand("compare", "TD-IpDFT vs i-IpDFT convergence on shared noise realizations");
    cm->add_option("--snr", cmp.snr_db, "SNR levels in dB");
    cm->add_option("--runs", cmp.runs, "runs per SNR")->check(CLI::PositiveNumber);
    cm->add_option("--f0", cmp.fundamentals, "fundamental frequencies");
    cm->add_option("--duration", cmp.duration, "signal length, s");
    cm->add_option("-Q,--max-iterations", cmp.max_iterations, "iterations on the curves")->check(CLI::PositiveNumber);
    cm->add_option("--energy-threshold", cmp.baseline.energy_threshold, "i-IpDFT trigger threshold");
    cm->add_option("--inner-iterations", cmp.baseline.inner_iterations, "i-IpDFT P");
    cm->add_option("-j,--threads", cmp.threads, "worker threads");
    cm->add_option("-o,--out", cmp_out, "output directory");

    OpCountConfig ops;
    std::string ops_out;
    auto* co = app.add_subcommand("count-ops", "instrumented operation counts per window");
    co->add_option("-Q,--q", ops.q_values, "iteration counts to fit against");
    co->add_option("-K,--k", ops.k_values, "bin counts to fit against");
    co->add_option("--inner-iterations", ops.baseline_inner_iterations, "e-IpDFT / i-IpDFT P");
    co->add_option("-o,--out", ops_out, "JSON output file");

    std::string ds_spec_file, ds_spec, ds_out;
    std::int64_t ds_at = 10000;
    std::size_t ds_delay = 0;
    bool ds_raw = false;
    auto* ds = app.add_subcommand("dump-spectrum", "normalized spectrum bins of one analysis window");
    ds->add_option("--spec-file", ds_spec_file, "signal spec JSON file")->check(CLI::ExistingFile);
    ds->add_option("--spec", ds_spec, "signal spec JSON text");
    ds->add_option("--at", ds_at, "window end sample");
    ds->add_option("--delay", ds_delay, "delay in samples");
    ds->add_flag("--rectangular", ds_raw, "rectangular-window bins instead of Hann");
    ds->add_option("-o,--out", ds_out, "CSV output (default stdout)");

    std::string sy_spec_file, sy_spec, sy_out, sy_truth, sy_format = "csv";
    double sy_duration = 1.0, sy_fs = 50e3, sy_rate = 50.0;
    auto* sy = app.add_subcommand("synth", "synthesize a test waveform and its reference phasors");
    sy->add_option("--spec-file", sy_spec_file, "signal spec JSON file")->check(CLI::ExistingFile);
    sy->add_option("--spec", sy_spec, "signal spec JSON text");
    sy->add_option("--duration", sy_duration, "s");
    sy->add_option("--fs", sy_fs, "sample rate, Hz");
    sy->add_option("--format", sy_format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
    sy->add_option("-o,--out", sy_out, "sample output file")->required();
    sy->add_option("--truth", sy_truth, "reference phasors at the reporting instants, CSV");
    sy->add_option("--reporting-rate", sy_rate, "reports per second for --truth");

    std::string es_in, es_out, es_estimator = "td-ipdft";
    auto* es = app.add_subcommand("estimate", "run an estimator over a float64 sample file");
    es->add_option("-i,--in", es_in, "little-endian float64 samples")->required()->check(CLI::ExistingFile);
    es->add_option("--estimator", es_estimator, "td-ipdft, i-ipdft or e-ipdft");
    es->add_option("-o,--out", es_out, "CSV output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run_suite(suite_flags);

        if (cal->parsed()) {
            CalibrationConfig cfg;
            cfg.snr_db = cal_snr;
            cfg.seeds = seed_range(cal_runs);
            cfg.threads = cal_threads;
            const auto rows = calibrate_thresholds(cfg);
            auto os = open_out(std::filesystem::path(cal_out) / "calibration.csv");
            write_calibration_csv(os, rows);
            const auto s = summarize_calibration(rows);
            const EstimatorConfig ec;
            std::cout << "min E_c/E_o, 5% OOBI:       " << s.min_ratio_oobi5 << "  (lambda_o_lower " << ec.lambda_o_lower << ")\n"
                      << "min E_c/E_o, >=9% OOBI:     " << s.min_ratio_oobi9 << "  (lambda_o_upper " << ec.lambda_o_upper << ")\n"
                      << "min E_c/E_i, 5-9% OOBI:     " << s.min_concentration_oobi << "  (lambda_i " << ec.lambda_i << ")\n"
                      << "max E_c/E_o, no OOBI:       " << s.max_ratio_clean << '\n'
                      << "OOBI windows missed:        " << s.oobi_missed << " of " << s.oobi_windows << '\n'
                      << "false triggers:             " << s.false_triggers << " of " << s.clean_windows << '\n';
            return 0;
        }

        if (sw->parsed()) {
            const auto rows = sweep_lambda_re(sweep);
            auto os = open_out(std::filesystem::path(sweep_out) / "sweep.csv");
            write_sweep_csv(os, rows);
            std::cout << "lambda_re    Q    snr  max_delta_error  max_iterations\n";
            for (std::size_t i = 0; i < rows.size();) {
                double md = 0.0;
                int mi = 0;
                std::size_t j = i;
                for (; j < rows.size() && rows[j].lambda_re == rows[i].lambda_re && rows[j].q == rows[i].q
                       && rows[j].snr_db == rows[i].snr_db;
                     ++j) {
                    md = std::max(md, rows[j].max_delta_error);
                    mi = std::max(mi, rows[j].max_iterations);
                }
                std::cout << std::setw(9) << rows[i].lambda_re << std::setw(5) << rows[i].q << std::setw(7)
                          << rows[i].snr_db << std::setw(17) << md << std::setw(16) << mi << '\n';
                i = j;
            }
            return 0;
        }

        if (cm->parsed()) {
            const auto res = compare_convergence(cmp);
            const std::filesystem::path dir(cmp_out);
            auto a = open_out(dir / "convergence.csv");
            write_convergence_csv(a, res);
            auto b = open_out(dir / "tone_errors.csv");
            write_tone_errors_csv(b, res);
            for (const auto& c : res.curves) {
                std::cout << "snr " << c.snr_db << " dB: i-IpDFT level " << c.converged_level << ", reached by TD-IpDFT at q="
                          << c.td_reach << ", by i-IpDFT at q=" << c.iip_reach << " (advantage " << c.advantage()
                          << ")\n";
            }
            return 0;
        }

        if (co->parsed()) {
            const auto res = count_ops(ops);
            const std::string text = op_count_json(res);
            if (!ops_out.empty()) {
                auto os = open_out(ops_out);
                os << text << '\n';
            }
            const auto s = summarize_ops(res.no_interference);
            std::cout << "no interference: simple " << s.simple << ", complex " << s.complex << '\n'
                      << "OOBI path: simple " << res.oobi_simple.intercept << " + " << res.oobi_simple.slope
                      << " Q, complex " << res.oobi_complex.intercept << " + " << res.oobi_complex.slope << " Q\n"
                      << "simplified TD: simple " << res.simplified_simple.intercept << " + "
                      << res.simplified_simple.slope << " K, complex " << res.simplified_complex.intercept << " + "
                      << res.simplified_complex.slope << " K\n"
                      << "e-IpDFT: simple " << res.e_ipdft_simple.intercept << " + " << res.e_ipdft_simple.slope
                      << " K, complex " << res.e_ipdft_complex.intercept << " + " << res.e_ipdft_complex.slope
                      << " K\n"
                      << "i-IpDFT: simple " << res.i_ipdft_simple.intercept << " + " << res.i_ipdft_simple.slope
                      << " Q, complex " << res.i_ipdft_complex.intercept << " + " << res.i_ipdft_complex.slope
                      << " Q\n";
            if (ops_out.empty()) std::cout << text << '\n';
            return 0;
        }

        if (ds->parsed()) {
            const auto spec = load_spec(ds_spec_file, ds_spec);
            const auto w = WindowConfig::make(50e3, spec.nominal_frequency);
            const auto x = synthesize(spec, w.sample_rate, static_cast<double>(ds_at + 1) / w.sample_rate);
            SpectralStream st(w);
            for (std::int64_t n = 0; n < ds_at && n < static_cast<std::int64_t>(x.size()); ++n) st.push(x[static_cast<std::size_t>(n)]);
            const auto slice = ds_raw ? st.rectangular() : st.windowed(ds_delay);
            if (ds_out.empty()) {
                write_spectrum_csv(std::cout, slice);
            } else {
                auto os = open_out(ds_out);
                write_spectrum_csv(os, slice);
            }
            return 0;
        }

        if (sy->parsed()) {
            const auto spec = load_spec(sy_spec_file, sy_spec);
            const auto x = synthesize(spec, sy_fs, sy_duration);
            {
                auto os = open_out(sy_out);
                if (sy_format == "bin") {
                    os.close();
                    std::ofstream bin(sy_out, std::ios::binary);
                    write_samples_binary(bin, x);
                } else {
                    write_samples_csv(os, x, sy_fs);
                }
            }
            if (!sy_truth.empty()) {
                auto os = open_out(sy_truth);
                os << "time,amplitude,phase,frequency,rocof\n" << std::setprecision(12);
                for (int m = 0; m / sy_rate <= sy_duration; ++m) {
                    const auto t = ground_truth_at(spec, m / sy_rate);
                    os << t.time << ',' << t.amplitude << ',' << t.phase << ',' << t.frequency << ',' << t.rocof << '\n';
                }
            }
            return 0;
        }

        if (es->parsed()) {
            std::ifstream in(es_in, std::ios::binary);
            const auto x = read_samples_binary(in);
            EstimatorSetup setup;
            setup.kind = estimator_kind_from_name(es_estimator);
            auto est = setup.make();
            const auto reports = run_estimator(*est, x);
            if (es_out.empty()) {
                write_estimates_csv(std::cout, reports);
            } else {
                auto os = open_out(es_out);
                write_estimates_csv(os, reports);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
