#include "tdipdft/harness.hpp"

#include "tdipdft/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace tdipdft {

namespace {

using json = nlohmann::json;

std::string fmt(double v, int precision = 6)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

std::string fixed(double v, int decimals)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double delta_error(double f, double f0, double resolution) { return std::fabs(f - f0) / resolution; }

std::string oobi_name(int pct, double f0, double fi)
{
    return "oobi/" + std::to_string(pct) + "pct/f0=" + fmt(f0) + "/fi=" + fmt(fi);
}

TestSignalSpec oobi_spec(double f0, double fi, double level, double nominal)
{
    TestSignalSpec s;
    s.kind = TestKind::OOBInterference;
    s.nominal_frequency = nominal;
    s.frequency = f0;
    s.distortion_frequency = fi;
    s.distortion_amplitude = level;
    return s;
}

void append(std::vector<SuiteCase>& out, std::vector<SuiteCase> more)
{
    out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

std::vector<SuiteCase> signal_frequency_cases(const SuiteOptions& o)
{
    std::vector<SuiteCase> out;
    for (int i = -10; i <= 10; ++i) {
        const double f = o.nominal_frequency + 0.5 * i;
        SuiteCase c;
        c.name = "signal-frequency/f=" + fixed(f, 1);
        c.spec.nominal_frequency = o.nominal_frequency;
        c.spec.frequency = f;
        c.duration = o.static_duration;
        c.classes = std::abs(i) <= 4 ? std::vector{PerfClass::P, PerfClass::M} : std::vector{PerfClass::M};
        out.push_back(c);
    }
    return out;
}

std::vector<SuiteCase> harmonic_cases(const SuiteOptions& o, bool one_pct, bool ten_pct)
{
    std::vector<SuiteCase> out;
    for (int pct : {1, 10}) {
        if ((pct == 1 && !one_pct) || (pct == 10 && !ten_pct)) continue;
        for (int h = 2; h <= 50; ++h) {
            SuiteCase c;
            std::ostringstream name;
            name << "harmonic/" << pct << "pct/h" << std::setw(2) << std::setfill('0') << h;
            c.name = name.str();
            c.spec.kind = TestKind::Harmonic;
            c.spec.nominal_frequency = o.nominal_frequency;
            c.spec.frequency = o.nominal_frequency;
            c.spec.distortion_order = h;
            c.spec.distortion_amplitude = pct / 100.0;
            c.duration = o.static_duration;
            c.classes = pct == 1 ? std::vector{PerfClass::P, PerfClass::M} : std::vector{PerfClass::M};
            out.push_back(c);
        }
    }
    return out;
}

std::vector<SuiteCase> oobi_cases(const SuiteOptions& o, int pct)
{
    std::vector<SuiteCase> out;
    const double shift = 0.1 * o.reporting_rate / 2.0;
    for (double f0 : {o.nominal_frequency - shift, o.nominal_frequency, o.nominal_frequency + shift}) {
        for (double fi : oobi_tones(o.nominal_frequency, o.reporting_rate)) {
            SuiteCase c;
            c.name = oobi_name(pct, f0, fi);
            c.spec = oobi_spec(f0, fi, pct / 100.0, o.nominal_frequency);
            c.duration = o.static_duration;
            c.classes = {PerfClass::M};
            out.push_back(c);
        }
    }
    return out;
}

std::vector<SuiteCase> modulation_cases(const SuiteOptions& o)
{
    const double p_max = std::min(2.0, o.reporting_rate / 10.0);
    const double m_max = std::min(5.0, o.reporting_rate / 5.0);
    const std::vector<double> rates{0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    std::vector<SuiteCase> out;
    for (TestKind kind : {TestKind::AmplitudeMod, TestKind::PhaseMod}) {
        for (double fm : rates) {
            if (fm > m_max + 1e-12) continue;
            SuiteCase c;
            c.name = std::string(kind_name(kind)) + "/fm=" + fixed(fm, 1);
            c.spec.kind = kind;
            c.spec.nominal_frequency = o.nominal_frequency;
            c.spec.frequency = o.nominal_frequency;
            c.spec.modulation_frequency = fm;
            c.spec.modulation_depth = kind == TestKind::AmplitudeMod ? 0.1 : std::numbers::pi / 18.0;
            // one full modulation period after warm-up
            c.duration = std::max(1.0, 1.0 / fm + 0.2);
            c.classes = fm <= p_max + 1e-12 ? std::vector{PerfClass::P, PerfClass::M} : std::vector{PerfClass::M};
            out.push_back(c);
        }
    }
    return out;
}

std::vector<SuiteCase> ramp_cases(const SuiteOptions& o)
{
    std::vector<SuiteCase> out;
    const double lead = 0.5;
    for (PerfClass cls : {PerfClass::P, PerfClass::M}) {
        const double span = cls == PerfClass::P ? 2.0 : 5.0;
        for (double rate : {1.0, -1.0}) {
            SuiteCase c;
            c.name = std::string("frequency-ramp/") + std::string(class_name(cls)) + (rate > 0 ? "/+1" : "/-1");
            c.spec.kind = TestKind::FrequencyRamp;
            c.spec.nominal_frequency = o.nominal_frequency;
            c.spec.frequency = o.nominal_frequency - rate * span;
            c.spec.ramp_rate = rate;
            c.spec.ramp_start = lead;
            c.spec.ramp_stop = lead + 2.0 * span / std::fabs(rate);
            c.duration = c.spec.ramp_stop + lead;
            c.classes = {cls};
            out.push_back(c);
        }
    }
    return out;
}

std::vector<SuiteCase> step_cases(const SuiteOptions& o)
{
    std::vector<SuiteCase> out;
    const struct {
        TestKind kind;
        double magnitude;
        const char* label;
    } steps[] = {
        {TestKind::AmplitudeStep, 0.1, "amplitude-step/+10pct"},
        {TestKind::AmplitudeStep, -0.1, "amplitude-step/-10pct"},
        {TestKind::PhaseStep, std::numbers::pi / 18.0, "phase-step/+10deg"},
        {TestKind::PhaseStep, -std::numbers::pi / 18.0, "phase-step/-10deg"},
    };
    for (const auto& s : steps) {
        SuiteCase c;
        c.name = s.label;
        c.spec.kind = s.kind;
        c.spec.nominal_frequency = o.nominal_frequency;
        c.spec.frequency = o.nominal_frequency;
        c.spec.step_magnitude = s.magnitude;
        c.spec.step_time = 0.5;
        c.duration = 1.0;
        c.ets_offsets = o.ets_offsets;
        c.ets_spacing = 1.0 / (o.reporting_rate * o.ets_offsets);
        out.push_back(c);
    }
    return out;
}

std::string sanitize(std::string s)
{
    for (char& ch : s) {
        if (ch == '/' || ch == '=' || ch == ' ') ch = '_';
    }
    return s;
}

double get_double(const json& j, const char* key, double fallback)
{
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where)
{
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return k == x; }) == keys.end()) {
            throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
        }
    }
}

PerfClass class_from_name(const std::string& s)
{
    if (s == "P") return PerfClass::P;
    if (s == "M") return PerfClass::M;
    throw ConfigError("class must be P or M, got '" + s + "'");
}

std::vector<Interval> ramp_exclusions(const TestSignalSpec& spec, double exclusion)
{
    if (spec.effective_kind() != TestKind::FrequencyRamp || exclusion <= 0.0) return {};
    std::vector<Interval> out{{spec.ramp_start - exclusion, spec.ramp_start + exclusion}};
    if (std::isfinite(spec.ramp_stop)) out.push_back({spec.ramp_stop - exclusion, spec.ramp_stop + exclusion});
    return out;
}

std::vector<PhasorEstimate> estimate(const EstimatorSetup& setup, const TestSignalSpec& spec, double fs,
                                     double duration)
{
    const auto x = synthesize(spec, fs, duration);
    auto est = setup.make();
    auto reports = run_estimator(*est, x);
    if (reports.empty()) throw ConfigError("test duration shorter than the estimator warm-up");
    return reports;
}

// First `count` reports, pushing only as many samples as they need.
std::vector<PhasorEstimate> first_reports(PhasorEstimator& est, std::span<const double> x, int count)
{
    std::vector<PhasorEstimate> out;
    for (double v : x) {
        if (auto r = est.push(v)) {
            out.push_back(std::move(*r));
            if (static_cast<int>(out.size()) == count) return out;
        }
    }
    throw ConfigError("signal too short for the requested number of windows");
}

double samples_for_windows(const WindowConfig& w, double reporting_rate, double min_frequency, int windows)
{
    const double interval = w.sample_rate / reporting_rate;
    const double warmup = static_cast<double>(w.samples + delay_capacity(w.sample_rate, min_frequency));
    return (warmup + interval * (windows + 1) + static_cast<double>(w.samples)) / w.sample_rate;
}

json estimator_config_json(const EstimatorConfig& c)
{
    return {{"lambda_o_lower", c.lambda_o_lower}, {"lambda_o_upper", c.lambda_o_upper}, {"lambda_i", c.lambda_i},
            {"lambda_re", c.lambda_re},           {"max_iterations", c.max_iterations}, {"stop_rule", c.stop_rule},
            {"interference_bins", c.interference_bins}};
}

} // namespace

std::string_view estimator_kind_name(EstimatorKind kind)
{
    switch (kind) {
    case EstimatorKind::TdIpdft: return "td-ipdft";
    case EstimatorKind::IIpdft: return "i-ipdft";
    case EstimatorKind::EIpdft: return "e-ipdft";
    }
    return "?";
}

EstimatorKind estimator_kind_from_name(std::string_view name)
{
    for (auto k : {EstimatorKind::TdIpdft, EstimatorKind::IIpdft, EstimatorKind::EIpdft}) {
        if (estimator_kind_name(k) == name) return k;
    }
    throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::unique_ptr<StreamingEstimator> EstimatorSetup::make() const
{
    if (kind == EstimatorKind::TdIpdft) return std::make_unique<TdIpdftEstimator>(td);
    BaselineConfig b = baseline;
    b.variant = kind == EstimatorKind::IIpdft ? BaselineVariant::IIpdft : BaselineVariant::EIpdft3p;
    return std::make_unique<BaselineEstimator>(b);
}

double EstimatorSetup::reporting_rate() const
{
    return kind == EstimatorKind::TdIpdft ? td.reporting_rate : baseline.reporting_rate;
}

std::vector<double> oobi_tones(double nominal_frequency, double reporting_rate, double step)
{
    if (!(step > 0.0)) throw ConfigError("oobi tones: step must be positive");
    std::vector<double> out;
    const double lo_end = nominal_frequency - reporting_rate / 2.0;
    const double hi_start = nominal_frequency + reporting_rate / 2.0;
    const int n_lo = static_cast<int>(std::floor((lo_end - 10.0) / step + 1e-9));
    for (int i = 0; i <= n_lo; ++i) out.push_back(10.0 + i * step);
    const int n_hi = static_cast<int>(std::floor((2.0 * nominal_frequency - hi_start) / step + 1e-9));
    for (int i = 0; i <= n_hi; ++i) out.push_back(hi_start + i * step);
    return out;
}

std::vector<std::string> standard_suite_names()
{
    return {"std-full", "signal-frequency", "harmonic", "harmonic-10", "oobi", "oobi-5", "modulation", "ramp", "step"};
}

std::vector<SuiteCase> standard_suite(std::string_view name, const SuiteOptions& o)
{
    if (name == "signal-frequency") return signal_frequency_cases(o);
    if (name == "harmonic") return harmonic_cases(o, true, true);
    if (name == "harmonic-10") return harmonic_cases(o, false, true);
    if (name == "oobi") return oobi_cases(o, 10);
    if (name == "oobi-5") return oobi_cases(o, 5);
    if (name == "modulation") return modulation_cases(o);
    if (name == "ramp") return ramp_cases(o);
    if (name == "step") return step_cases(o);
    if (name == "std-full") {
        std::vector<SuiteCase> out;
        append(out, signal_frequency_cases(o));
        append(out, harmonic_cases(o, true, true));
        append(out, oobi_cases(o, 10));
        append(out, modulation_cases(o));
        append(out, ramp_cases(o));
        append(out, step_cases(o));
        return out;
    }
    throw ConfigError("unknown suite '" + std::string(name) + "'");
}

void SuiteConfig::validate() const
{
    if (snr_db.empty()) throw ConfigError("suite: no SNR levels");
    if (seeds.empty()) throw ConfigError("suite: no seeds");
    if (!(sample_rate > 0.0)) throw ConfigError("suite: sample rate must be positive");
    if (estimator.kind == EstimatorKind::TdIpdft) {
        estimator.td.validate();
        if (estimator.td.window.sample_rate != sample_rate) throw ConfigError("suite: estimator window fs differs");
    } else {
        estimator.baseline.validate();
        if (estimator.baseline.window.sample_rate != sample_rate) {
            throw ConfigError("suite: baseline window fs differs");
        }
    }
    for (const auto& c : cases()) {
        c.spec.validate();
        if (!(c.duration > 0.0)) throw ConfigError("suite: test '" + c.name + "' has no duration");
        if (c.classes.empty()) throw ConfigError("suite: test '" + c.name + "' has no class");
        if (c.ets_offsets < 1) throw ConfigError("suite: ets_offsets must be >= 1");
    }
}

std::vector<SuiteCase> SuiteConfig::cases() const
{
    std::vector<SuiteCase> all = tests.empty() ? standard_suite(suite, options) : tests;
    if (!include.empty()) {
        std::erase_if(all, [&](const SuiteCase& c) {
            return std::none_of(include.begin(), include.end(),
                                [&](const std::string& p) { return c.name.rfind(p, 0) == 0; });
        });
    }
    if (all.empty()) throw ConfigError("suite: empty test list");
    return all;
}

LimitTable SuiteConfig::limits() const
{
    if (limits_file.empty()) return LimitTable::standard();
    std::ifstream in(limits_file);
    if (!in) throw ConfigError("suite: cannot open limits file " + limits_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return LimitTable::from_json(ss.str());
}

SuiteConfig suite_config_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("suite config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("suite config: expected an object");
    SuiteConfig cfg;
    try {
        reject_unknown(j,
                       {"suite", "include", "tests", "options", "snr_db", "seeds", "runs", "estimator", "td",
                        "baseline", "sample_rate", "threads", "limits_file", "output_dir", "write_reports"},
                       "suite config");
        cfg.suite = j.value("suite", cfg.suite);
        if (j.contains("include")) cfg.include = j.at("include").get<std::vector<std::string>>();
        if (j.contains("options")) {
            const auto& o = j.at("options");
            reject_unknown(o, {"nominal_frequency", "reporting_rate", "static_duration", "ets_offsets"}, "options");
            cfg.options.nominal_frequency = get_double(o, "nominal_frequency", cfg.options.nominal_frequency);
            cfg.options.reporting_rate = get_double(o, "reporting_rate", cfg.options.reporting_rate);
            cfg.options.static_duration = get_double(o, "static_duration", cfg.options.static_duration);
            cfg.options.ets_offsets = o.value("ets_offsets", cfg.options.ets_offsets);
        }
        if (j.contains("snr_db")) cfg.snr_db = j.at("snr_db").get<std::vector<double>>();
        if (j.contains("seeds") && j.contains("runs")) throw ConfigError("suite config: give seeds or runs, not both");
        if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("runs")) {
            const int runs = j.at("runs").get<int>();
            if (runs < 1) throw ConfigError("suite config: runs must be >= 1");
            cfg.seeds.clear();
            for (int i = 1; i <= runs; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
        }
        cfg.sample_rate = get_double(j, "sample_rate", cfg.sample_rate);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.limits_file = j.value("limits_file", cfg.limits_file);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.write_reports = j.value("write_reports", cfg.write_reports);

        auto& est = cfg.estimator;
        if (j.contains("estimator")) est.kind = estimator_kind_from_name(j.at("estimator").get<std::string>());
        const auto window = WindowConfig::make(cfg.sample_rate, cfg.options.nominal_frequency);
        est.td.window = window;
        est.td.reporting_rate = cfg.options.reporting_rate;
        est.baseline.window = window;
        est.baseline.reporting_rate = cfg.options.reporting_rate;
        if (j.contains("td")) {
            const auto& t = j.at("td");
            reject_unknown(t,
                           {"lambda_o_lower", "lambda_o_upper", "lambda_i", "lambda_re", "max_iterations",
                            "stop_rule", "interference_bins"},
                           "td");
            est.td.lambda_o_lower = get_double(t, "lambda_o_lower", est.td.lambda_o_lower);
            est.td.lambda_o_upper = get_double(t, "lambda_o_upper", est.td.lambda_o_upper);
            est.td.lambda_i = get_double(t, "lambda_i", est.td.lambda_i);
            est.td.lambda_re = get_double(t, "lambda_re", est.td.lambda_re);
            est.td.max_iterations = t.value("max_iterations", est.td.max_iterations);
            est.td.stop_rule = t.value("stop_rule", est.td.stop_rule);
            if (t.contains("interference_bins")) est.td.interference_bins = t.at("interference_bins").get<std::vector<int>>();
        }
        if (j.contains("baseline")) {
            const auto& b = j.at("baseline");
            reject_unknown(b, {"inner_iterations", "max_iterations", "energy_threshold"}, "baseline");
            est.baseline.inner_iterations = b.value("inner_iterations", est.baseline.inner_iterations);
            est.baseline.max_iterations = b.value("max_iterations", est.baseline.max_iterations);
            est.baseline.energy_threshold = get_double(b, "energy_threshold", est.baseline.energy_threshold);
        }
        if (j.contains("tests")) {
            for (const auto& t : j.at("tests")) {
                reject_unknown(t, {"name", "spec", "duration", "classes", "ets_offsets", "ets_spacing"}, "test");
                SuiteCase c;
                c.spec = spec_from_json(t.at("spec").dump());
                c.name = t.value("name", std::string(kind_name(c.spec.kind)) + "/" + std::to_string(cfg.tests.size()));
                c.duration = get_double(t, "duration", c.duration);
                if (t.contains("classes")) {
                    c.classes.clear();
                    for (const auto& s : t.at("classes")) c.classes.push_back(class_from_name(s.get<std::string>()));
                }
                c.ets_offsets = t.value("ets_offsets", c.ets_offsets);
                c.ets_spacing = get_double(t, "ets_spacing", c.ets_spacing);
                cfg.tests.push_back(std::move(c));
            }
            if (cfg.tests.empty()) throw ConfigError("suite config: empty test list");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("suite config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string suite_config_to_json(const SuiteConfig& cfg)
{
    json j;
    j["suite"] = cfg.tests.empty() ? cfg.suite : "custom";
    j["include"] = cfg.include;
    j["snr_db"] = cfg.snr_db;
    j["seeds"] = cfg.seeds;
    j["estimator"] = estimator_kind_name(cfg.estimator.kind);
    j["td"] = estimator_config_json(cfg.estimator.td);
    j["baseline"] = {{"inner_iterations", cfg.estimator.baseline.inner_iterations},
                     {"max_iterations", cfg.estimator.baseline.max_iterations},
                     {"energy_threshold", cfg.estimator.baseline.energy_threshold}};
    j["sample_rate"] = cfg.sample_rate;
    j["options"] = {{"nominal_frequency", cfg.options.nominal_frequency},
                    {"reporting_rate", cfg.options.reporting_rate},
                    {"static_duration", cfg.options.static_duration},
                    {"ets_offsets", cfg.options.ets_offsets}};
    j["limits_file"] = cfg.limits_file;
    return j.dump(2);
}

bool CaseRun::passed() const
{
    return std::all_of(classes.begin(), classes.end(), [](const ClassResult& c) { return c.check.all(); });
}

std::size_t SuiteReport::violations() const
{
    std::size_t n = 0;
    for (const auto& r : runs) {
        for (const auto& c : r.classes) n += c.check.all() ? 0 : 1;
    }
    return n;
}

std::uint64_t noise_seed(std::string_view case_name, double snr_db, std::uint64_t seed, int offset)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : case_name) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(snr_db * 1000.0)));
    h = splitmix64(h ^ seed);
    return splitmix64(h ^ static_cast<std::uint64_t>(offset));
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    pool.clear();
    if (error) std::rethrow_exception(error);
}

CaseRun run_case(const SuiteCase& test, double snr_db, std::uint64_t seed, const SuiteConfig& cfg,
                 const LimitTable& limits)
{
    CaseRun run;
    run.name = test.name;
    run.kind = test.spec.effective_kind();
    run.snr_db = snr_db;
    run.seed = seed;
    const double fs = cfg.sample_rate;
    const bool keep = cfg.keep_samples || cfg.write_reports;
    const bool is_step = run.kind == TestKind::AmplitudeStep || run.kind == TestKind::PhaseStep;

    if (!is_step) {
        TestSignalSpec spec = test.spec;
        spec.snr_db = snr_db;
        spec.noise_seed = noise_seed(test.name, snr_db, seed);
        auto reports = estimate(cfg.estimator, spec, fs, test.duration);
        run.reports = reports.size();
        for (const auto& r : reports) {
            run.detected += r.interference_detected ? 1 : 0;
            run.max_iterations = std::max(run.max_iterations, r.iterations_used);
        }
        for (PerfClass cls : test.classes) {
            const Limits& l = limits.at(run.kind, cls);
            ClassResult cr;
            cr.cls = cls;
            cr.exclusions = ramp_exclusions(spec, l.exclusion);
            cr.report = evaluate(reports, spec, cr.exclusions);
            cr.check = check(cr.report, l);
            if (!keep) cr.report.samples.clear();
            run.classes.push_back(std::move(cr));
        }
        if (keep) run.estimates = std::move(reports);
        return run;
    }

    // equivalent-time sampling: merge the runs on a time axis relative to the step
    ErrorReport merged;
    StepSeries series;
    const double before = test.spec.kind == TestKind::AmplitudeStep ? test.spec.amplitude : test.spec.phase;
    const double after = test.spec.kind == TestKind::AmplitudeStep
                             ? test.spec.amplitude * (1.0 + test.spec.step_magnitude)
                             : test.spec.phase + test.spec.step_magnitude;
    std::vector<ErrorSample> samples;
    for (int i = 0; i < test.ets_offsets; ++i) {
        TestSignalSpec spec = test.spec;
        spec.snr_db = snr_db;
        spec.noise_seed = noise_seed(test.name, snr_db, seed, i);
        spec.step_time = test.spec.step_time + i * test.ets_spacing;
        const double t_step = static_cast<double>(step_sample(spec, fs)) / fs;
        auto reports = estimate(cfg.estimator, spec, fs, test.duration);
        run.reports += reports.size();
        for (const auto& r : reports) {
            run.detected += r.interference_detected ? 1 : 0;
            run.max_iterations = std::max(run.max_iterations, r.iterations_used);
        }
        auto rep = evaluate(reports, spec);
        for (auto s : rep.samples) {
            s.time -= t_step;
            samples.push_back(s);
        }
        if (keep && i == 0) run.estimates = std::move(reports);
    }
    std::stable_sort(samples.begin(), samples.end(),
                     [](const ErrorSample& a, const ErrorSample& b) { return a.time < b.time; });
    for (const auto& s : samples) {
        series.time.push_back(s.time);
        if (test.spec.kind == TestKind::AmplitudeStep) {
            series.value.push_back(s.amplitude);
        } else {
            series.value.push_back(before + std::remainder(s.phase - before, 2.0 * std::numbers::pi));
        }
        series.tve.push_back(s.tve);
        series.fe.push_back(s.fe);
        series.rfe.push_back(s.rfe_valid ? s.rfe : 0.0);
        merged.max_tve = std::max(merged.max_tve, s.tve);
        merged.max_fe = std::max(merged.max_fe, s.fe);
        if (s.rfe_valid) merged.max_rfe = std::max(merged.max_rfe, s.rfe);
    }
    merged.evaluated = samples.size();
    for (PerfClass cls : test.classes) {
        const Limits& l = limits.at(run.kind, cls);
        ClassResult cr;
        cr.cls = cls;
        cr.report = merged;
        try {
            cr.report.step = step_metrics(series, before, after, l, 1.0 / cfg.estimator.reporting_rate());
        } catch (const UndefinedDelay&) {
            StepMetrics m;
            m.delay = std::numeric_limits<double>::quiet_NaN();
            cr.report.step = m;
        }
        cr.check = check(cr.report, l);
        if (keep) cr.report.samples = samples;
        run.classes.push_back(std::move(cr));
    }
    return run;
}

SuiteReport run_suite(const SuiteConfig& cfg)
{
    cfg.validate();
    const auto cases = cfg.cases();
    const auto limits = cfg.limits();
    struct Task {
        std::size_t c;
        double snr;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cases.size(); ++c) {
        for (double snr : cfg.snr_db) {
            for (auto seed : cfg.seeds) tasks.push_back({c, snr, seed});
        }
    }
    SuiteReport report;
    report.runs.resize(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const auto& t = tasks[i];
        report.runs[i] = run_case(cases[t.c], t.snr, t.seed, cfg, limits);
    });
    return report;
}

void write_runs_csv(std::ostream& os, const SuiteReport& report)
{
    os << "row,case,kind,snr_db,seed,class,reports,detected,max_iterations,evaluated,excluded,max_tve,max_fe,"
          "max_rfe,response_tve,response_fe,response_rfe,delay,overshoot,pass\n";
    std::size_t row = 0;
    for (const auto& r : report.runs) {
        for (const auto& c : r.classes) {
            const auto& e = c.report;
            os << row++ << ',' << r.name << ',' << kind_name(r.kind) << ',' << fmt(r.snr_db) << ',' << r.seed << ','
               << class_name(c.cls) << ',' << r.reports << ',' << r.detected << ',' << r.max_iterations << ','
               << e.evaluated << ',' << e.excluded << ',' << fmt(e.max_tve, 10) << ',' << fmt(e.max_fe, 10) << ','
               << fmt(e.max_rfe, 10) << ',';
            if (e.step) {
                os << fmt(e.step->response_tve, 10) << ',' << fmt(e.step->response_fe, 10) << ','
                   << fmt(e.step->response_rfe, 10) << ',' << fmt(e.step->delay, 10) << ','
                   << fmt(e.step->overshoot, 10);
            } else {
                os << ",,,,";
            }
            os << ',' << (c.check.all() ? 1 : 0) << '\n';
        }
    }
}

std::string suite_summary_json(const SuiteReport& report, const SuiteConfig& cfg)
{
    // worst values per kind, class and SNR, each pointing at its runs.csv row
    struct Worst {
        double value = -1.0;
        std::size_t row = 0;
    };
    std::map<std::string, std::map<std::string, Worst>> groups;
    std::map<std::string, std::size_t> violations;
    json failing = json::array();
    std::size_t row = 0;
    for (const auto& r : report.runs) {
        for (const auto& c : r.classes) {
            const std::string key = std::string(kind_name(r.kind)) + "/" + std::string(class_name(c.cls)) + "/"
                                    + fmt(r.snr_db) + "dB";
            auto& g = groups[key];
            auto upd = [&](const char* name, double v) {
                auto& w = g[name];
                if (v > w.value) w = {v, row};
            };
            const auto& e = c.report;
            if (e.step) {
                upd("response_tve", e.step->response_tve);
                upd("response_fe", e.step->response_fe);
                upd("response_rfe", e.step->response_rfe);
                upd("abs_delay", std::fabs(e.step->delay));
                upd("overshoot", e.step->overshoot);
            } else {
                upd("max_tve", e.max_tve);
                upd("max_fe", e.max_fe);
                upd("max_rfe", e.max_rfe);
            }
            violations[key] += c.check.all() ? 0 : 1;
            if (!c.check.all()) {
                failing.push_back({{"row", row}, {"case", r.name}, {"class", class_name(c.cls)},
                                   {"snr_db", r.snr_db}, {"seed", r.seed}});
            }
            ++row;
        }
    }
    json j;
    j["config"] = json::parse(suite_config_to_json(cfg));
    j["runs"] = report.runs.size();
    j["violations"] = report.violations();
    j["passed"] = report.passed();
    j["failing"] = failing;
    for (const auto& [key, metrics] : groups) {
        json g;
        for (const auto& [name, w] : metrics) g[name] = {{"value", w.value}, {"row", w.row}};
        g["violations"] = violations[key];
        j["groups"][key] = g;
    }
    return j.dump(2);
}

void write_suite_outputs(const SuiteReport& report, const SuiteConfig& cfg)
{
    if (cfg.output_dir.empty()) return;
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "runs.csv");
        write_runs_csv(os, report);
    }
    {
        std::ofstream os(dir / "summary.json");
        os << suite_summary_json(report, cfg) << '\n';
    }
    if (!cfg.write_reports) return;
    fs::create_directories(dir / "reports");
    for (const auto& r : report.runs) {
        const std::string stem = sanitize(r.name) + "_snr" + fmt(r.snr_db) + "_seed" + std::to_string(r.seed);
        std::ofstream os(dir / "reports" / (stem + ".csv"));
        write_estimates_csv(os, r.estimates);
        for (const auto& c : r.classes) {
            std::ofstream es(dir / "reports" / (stem + "_errors_" + std::string(class_name(c.cls)) + ".csv"));
            write_error_csv(es, c.report);
        }
    }
}

// ---- trigger calibration

std::vector<CalibrationRow> calibrate_thresholds(const CalibrationConfig& cfg)
{
    cfg.estimator.validate();
    struct Item {
        std::string test;
        std::string group;
        TestSignalSpec spec;
        double duration;
    };
    std::vector<Item> items;
    for (const auto& c : standard_suite("std-full", cfg.options)) {
        if (c.spec.kind == TestKind::OOBInterference) continue;
        items.push_back({c.name, std::string(kind_name(c.spec.kind)), c.spec, c.duration});
        const bool modulated = c.spec.kind == TestKind::AmplitudeMod || c.spec.kind == TestKind::PhaseMod;
        if (!modulated) {
            Item star{c.name + "*", std::string(kind_name(c.spec.kind)) + "*", c.spec, c.duration};
            star.spec.base = c.spec.kind;
            star.spec.kind = TestKind::Composite;
            star.spec.overlay_depth = cfg.composite_depth;
            star.spec.overlay_frequency = cfg.composite_frequency;
            items.push_back(star);
        }
    }
    const double shift = 0.1 * cfg.options.reporting_rate / 2.0;
    const double fn = cfg.options.nominal_frequency;
    for (double level : cfg.oobi_levels) {
        const int pct = static_cast<int>(std::lround(level * 100.0));
        for (double f0 : {fn - shift, fn, fn + shift}) {
            for (double fi : oobi_tones(fn, cfg.options.reporting_rate)) {
                items.push_back({oobi_name(pct, f0, fi), "oobi-" + std::to_string(pct), oobi_spec(f0, fi, level, fn),
                                 cfg.options.static_duration});
            }
        }
    }
    struct Task {
        std::size_t item;
        double snr;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (double snr : cfg.snr_db) {
            for (auto seed : cfg.seeds) tasks.push_back({i, snr, seed});
        }
    }
    std::vector<std::vector<CalibrationRow>> out(tasks.size());
    EstimatorSetup setup;
    setup.td = cfg.estimator;
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t t) {
        const auto& task = tasks[t];
        const auto& item = items[task.item];
        TestSignalSpec spec = item.spec;
        spec.snr_db = task.snr;
        spec.noise_seed = noise_seed("calibrate/" + item.test, task.snr, task.seed);
        for (const auto& r : estimate(setup, spec, cfg.sample_rate, item.duration)) {
            out[t].push_back({item.test, item.group, task.snr, task.seed, r.timestamp, r.energy_ratio,
                              r.concentration_ratio, r.interference_detected});
        }
    });
    std::vector<CalibrationRow> rows;
    for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

CalibrationSummary summarize_calibration(std::span<const CalibrationRow> rows)
{
    CalibrationSummary s;
    s.min_ratio_oobi5 = s.min_ratio_oobi9 = s.min_concentration_oobi = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.group.rfind("oobi-", 0) == 0) {
            const int pct = std::stoi(r.group.substr(5));
            ++s.oobi_windows;
            if (pct >= 5 && !r.triggered) ++s.oobi_missed;
            if (pct == 5) s.min_ratio_oobi5 = std::min(s.min_ratio_oobi5, r.energy_ratio);
            if (pct >= 9) s.min_ratio_oobi9 = std::min(s.min_ratio_oobi9, r.energy_ratio);
            if (pct >= 5 && pct <= 9) s.min_concentration_oobi = std::min(s.min_concentration_oobi, r.concentration_ratio);
        } else {
            ++s.clean_windows;
            if (r.triggered) ++s.false_triggers;
            s.max_ratio_clean = std::max(s.max_ratio_clean, r.energy_ratio);
        }
    }
    return s;
}

void write_calibration_csv(std::ostream& os, std::span<const CalibrationRow> rows)
{
    os << "test,group,snr_db,seed,time,ec_eo,ec_ei,triggered\n";
    for (const auto& r : rows) {
        os << r.test << ',' << r.group << ',' << fmt(r.snr_db) << ',' << r.seed << ',' << fmt(r.time, 10) << ','
           << fmt(r.energy_ratio, 10) << ',' << fmt(r.concentration_ratio, 10) << ',' << (r.triggered ? 1 : 0)
           << '\n';
    }
}

// ---- stop-rule sweep

StopReplay replay_stop_rule(std::span<const double> residual_trace, std::span<const double> frequency_trace,
                            double lambda_re, int max_iterations)
{
    if (frequency_trace.empty()) throw ConfigError("replay: empty frequency trace");
    if (frequency_trace.size() < residual_trace.size()) throw ConfigError("replay: traces do not match");
    const std::size_t q_max = std::min<std::size_t>(static_cast<std::size_t>(std::max(max_iterations, 0)),
                                                    residual_trace.size());
    double prev = 0.0;
    for (std::size_t q = 1; q <= q_max; ++q) {
        const double re = residual_trace[q - 1];
        if (std::fabs(re - prev) < lambda_re) return {frequency_trace[q - 1], static_cast<int>(q - 1)};
        prev = re;
    }
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(max_iterations, 0)),
                                                frequency_trace.size() - 1);
    return {frequency_trace[n], static_cast<int>(n)};
}

std::vector<double> default_lambda_re_grid()
{
    return {1e-8,    5e-9,    2.5e-9, 1e-9,  9.5e-10, 9e-10, 8e-10, 7e-10, 6e-10, 5e-10, 4e-10, 3e-10,
            2e-10,   1e-10,   9e-11,  8e-11, 7e-11,   6e-11, 5e-11, 4e-11, 3e-11, 2e-11, 1e-11};
}

std::vector<SweepRow> sweep_lambda_re(const SweepConfig& cfg)
{
    if (cfg.lambdas.empty() || cfg.q_values.empty() || cfg.snr_db.empty() || cfg.runs < 1 || cfg.tones.empty()
        || cfg.fundamentals.empty() || cfg.windows < 1) {
        throw ConfigError("sweep: empty dimension");
    }
    // a run stopped at the smallest threshold carries the traces every larger one needs
    EstimatorConfig ec = cfg.estimator;
    ec.stop_rule = true;
    ec.lambda_re = *std::min_element(cfg.lambdas.begin(), cfg.lambdas.end());
    ec.max_iterations = *std::max_element(cfg.q_values.begin(), cfg.q_values.end());
    ec.validate();
    const double df = ec.window.resolution();
    const double duration = samples_for_windows(ec.window, ec.reporting_rate, ec.min_frequency, cfg.windows);

    const std::size_t n_lq = cfg.lambdas.size() * cfg.q_values.size();
    struct Acc {
        double max_delta = 0.0;
        int max_it = 0;
        double sum_it = 0.0;
        std::size_t n = 0;
    };
    const std::size_t per_run = cfg.fundamentals.size() * cfg.tones.size();
    const std::size_t n_tasks = cfg.snr_db.size() * static_cast<std::size_t>(cfg.runs) * per_run;
    std::vector<std::vector<Acc>> acc(n_tasks, std::vector<Acc>(n_lq));
    parallel_for(n_tasks, cfg.threads, [&](std::size_t t) {
        const std::size_t tone = t % per_run;
        const std::size_t run = (t / per_run) % static_cast<std::size_t>(cfg.runs);
        const std::size_t snr = t / (per_run * static_cast<std::size_t>(cfg.runs));
        const double f0 = cfg.fundamentals[tone / cfg.tones.size()];
        const double fi = cfg.tones[tone % cfg.tones.size()];
        TestSignalSpec spec = oobi_spec(f0, fi, cfg.interference_amplitude, ec.window.nominal_frequency);
        spec.snr_db = cfg.snr_db[snr];
        spec.noise_seed = noise_seed(oobi_name(static_cast<int>(std::lround(cfg.interference_amplitude * 100)), f0, fi),
                                     spec.snr_db, cfg.seed_base + run);
        const auto x = synthesize(spec, cfg.sample_rate, duration);
        TdIpdftEstimator est(ec);
        const auto reports = first_reports(est, x, cfg.windows);
        for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
            for (std::size_t qi = 0; qi < cfg.q_values.size(); ++qi) {
                auto& a = acc[t][li * cfg.q_values.size() + qi];
                for (const auto& r : reports) {
                    const auto rep = replay_stop_rule(r.residual_energy_trace, r.frequency_trace, cfg.lambdas[li],
                                                      cfg.q_values[qi]);
                    a.max_delta = std::max(a.max_delta, delta_error(rep.frequency, f0, df));
                    a.max_it = std::max(a.max_it, rep.iterations);
                    a.sum_it += rep.iterations;
                    ++a.n;
                }
            }
        }
    });
    std::vector<SweepRow> rows;
    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        for (std::size_t qi = 0; qi < cfg.q_values.size(); ++qi) {
            for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
                for (int run = 0; run < cfg.runs; ++run) {
                    Acc total;
                    const std::size_t base = (s * static_cast<std::size_t>(cfg.runs) + static_cast<std::size_t>(run)) * per_run;
                    for (std::size_t k = 0; k < per_run; ++k) {
                        const auto& a = acc[base + k][li * cfg.q_values.size() + qi];
                        total.max_delta = std::max(total.max_delta, a.max_delta);
                        total.max_it = std::max(total.max_it, a.max_it);
                        total.sum_it += a.sum_it;
                        total.n += a.n;
                    }
                    rows.push_back({cfg.lambdas[li], cfg.q_values[qi], cfg.snr_db[s], run, total.max_delta,
                                    total.max_it, total.n ? total.sum_it / static_cast<double>(total.n) : 0.0});
                }
            }
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows)
{
    os << "lambda_re,q,snr_db,run,max_delta_error,max_iterations,mean_iterations\n";
    for (const auto& r : rows) {
        os << fmt(r.lambda_re) << ',' << r.q << ',' << fmt(r.snr_db) << ',' << r.run << ','
           << fmt(r.max_delta_error, 10) << ',' << r.max_iterations << ',' << fmt(r.mean_iterations, 8) << '\n';
    }
}

// ---- convergence comparison

int reach_iteration(std::span<const double> curve, double level, double tolerance)
{
    const double bound = level * (1.0 + tolerance);
    int reach = -1;
    for (int q = static_cast<int>(curve.size()) - 1; q >= 0; --q) {
        if (curve[static_cast<std::size_t>(q)] > bound) break;
        reach = q;
    }
    return reach;
}

CompareResult compare_convergence(const CompareConfig& cfg)
{
    if (cfg.snr_db.empty() || cfg.runs < 1 || cfg.tones.empty() || cfg.fundamentals.empty() || cfg.max_iterations < 1) {
        throw ConfigError("compare: empty dimension");
    }
    EstimatorConfig tc = cfg.td;
    tc.stop_rule = false;
    tc.max_iterations = std::max(cfg.max_iterations, cfg.td.max_iterations);
    tc.validate();
    BaselineConfig bc = cfg.baseline;
    bc.variant = BaselineVariant::IIpdft;
    bc.max_iterations = std::max(cfg.max_iterations, cfg.baseline.max_iterations);
    bc.validate();
    const double df = tc.window.resolution();
    const std::size_t q_len = static_cast<std::size_t>(cfg.max_iterations) + 1;

    struct Partial {
        std::vector<double> td, iip;
        double td_final = 0.0;
        double iip_final = 0.0;
    };
    const std::size_t per_run = cfg.fundamentals.size() * cfg.tones.size();
    const std::size_t n_tasks = cfg.snr_db.size() * static_cast<std::size_t>(cfg.runs) * per_run;
    std::vector<Partial> parts(n_tasks);
    parallel_for(n_tasks, cfg.threads, [&](std::size_t t) {
        const std::size_t tone = t % per_run;
        const std::size_t run = (t / per_run) % static_cast<std::size_t>(cfg.runs);
        const std::size_t snr = t / (per_run * static_cast<std::size_t>(cfg.runs));
        const double f0 = cfg.fundamentals[tone / cfg.tones.size()];
        const double fi = cfg.tones[tone % cfg.tones.size()];
        TestSignalSpec spec = oobi_spec(f0, fi, cfg.interference_amplitude, tc.window.nominal_frequency);
        spec.snr_db = cfg.snr_db[snr];
        spec.noise_seed = noise_seed("compare/" + oobi_name(static_cast<int>(std::lround(cfg.interference_amplitude * 100)), f0, fi),
                                     spec.snr_db, cfg.seed_base + run);
        const auto x = synthesize(spec, cfg.sample_rate, cfg.duration);
        TdIpdftEstimator td(tc);
        BaselineEstimator iip(bc);
        const auto ra = run_estimator(td, x);
        const auto rb = run_estimator(iip, x);
        if (ra.empty() || rb.empty()) throw ConfigError("compare: duration shorter than the estimator warm-up");
        auto& p = parts[t];
        p.td.assign(q_len, 0.0);
        p.iip.assign(q_len, 0.0);
        const auto curve = [&](const std::vector<PhasorEstimate>& rs, std::vector<double>& c) {
            for (const auto& r : rs) {
                for (std::size_t q = 0; q < q_len; ++q) {
                    const double f = r.frequency_trace[std::min(q, r.frequency_trace.size() - 1)];
                    c[q] = std::max(c[q], delta_error(f, f0, df));
                }
            }
        };
        curve(ra, p.td);
        curve(rb, p.iip);
        for (const auto& r : ra) {
            const auto rep = replay_stop_rule(r.residual_energy_trace, r.frequency_trace, cfg.td.lambda_re,
                                              cfg.td.max_iterations);
            p.td_final = std::max(p.td_final, delta_error(rep.frequency, f0, df));
        }
        for (const auto& r : rb) {
            const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.baseline.max_iterations),
                                                 r.frequency_trace.size() - 1);
            p.iip_final = std::max(p.iip_final, delta_error(r.frequency_trace[n], f0, df));
        }
    });

    CompareResult out;
    for (std::size_t s = 0; s < cfg.snr_db.size(); ++s) {
        ConvergenceCurve c;
        c.snr_db = cfg.snr_db[s];
        c.td.assign(q_len, 0.0);
        c.iip.assign(q_len, 0.0);
        std::vector<ToneError> tones(per_run);
        for (int run = 0; run < cfg.runs; ++run) {
            for (std::size_t k = 0; k < per_run; ++k) {
                const auto& p = parts[(s * static_cast<std::size_t>(cfg.runs) + static_cast<std::size_t>(run)) * per_run + k];
                for (std::size_t q = 0; q < q_len; ++q) {
                    c.td[q] = std::max(c.td[q], p.td[q]);
                    c.iip[q] = std::max(c.iip[q], p.iip[q]);
                }
                tones[k].snr_db = c.snr_db;
                tones[k].tone = cfg.tones[k % cfg.tones.size()];
                tones[k].td = std::max(tones[k].td, p.td_final);
                tones[k].iip = std::max(tones[k].iip, p.iip_final);
            }
        }
        c.converged_level = c.iip.back();
        c.td_reach = reach_iteration(c.td, c.converged_level, cfg.reach_tolerance);
        c.iip_reach = reach_iteration(c.iip, c.converged_level, cfg.reach_tolerance);
        out.curves.push_back(std::move(c));
        out.tones.insert(out.tones.end(), tones.begin(), tones.end());
    }
    return out;
}

void write_convergence_csv(std::ostream& os, const CompareResult& result)
{
    os << "snr_db,iteration,td_ipdft,i_ipdft\n";
    for (const auto& c : result.curves) {
        for (std::size_t q = 0; q < c.td.size(); ++q) {
            os << fmt(c.snr_db) << ',' << q << ',' << fmt(c.td[q], 10) << ',' << fmt(c.iip[q], 10) << '\n';
        }
    }
}

void write_tone_errors_csv(std::ostream& os, const CompareResult& result)
{
    os << "snr_db,tone,td_ipdft,i_ipdft\n";
    for (const auto& t : result.tones) {
        os << fmt(t.snr_db) << ',' << fmt(t.tone) << ',' << fmt(t.td, 10) << ',' << fmt(t.iip, 10) << '\n';
    }
}

// ---- operation counts

OpSummary summarize_ops(const opcount::Tally& t)
{
    using opcount::Op;
    OpSummary s;
    s.simple = t[Op::Add] + t[Op::Sub] + t[Op::Mul];
    s.complex = t[Op::Div] + t[Op::Sqrt] + t[Op::Sin] + t[Op::Cos] + t[Op::Exp] + t[Op::Angle];
    s.compare = t[Op::Compare];
    s.round = t[Op::Round];
    for (const auto& [fn, n] : t.calls) s.calls += n;
    return s;
}

OpSummary summarize_ops(const opcount::Ledger& ledger) { return summarize_ops(ledger.total()); }

LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit: need at least two matching points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw ConfigError("fit: abscissae are all equal");
    LinearFit f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        f.max_residual = std::max(f.max_residual, std::fabs(y[i] - f.intercept - f.slope * x[i]));
    }
    return f;
}

namespace {

SpectralStream primed_stream(const WindowConfig& w, const TestSignalSpec& spec)
{
    SpectralStream st(w);
    const auto x = synthesize(spec, w.sample_rate, 0.2);
    for (double v : x) st.push(v);
    return st;
}

std::vector<opcount::Complex> to_counted(const std::vector<cplx>& v)
{
    std::vector<opcount::Complex> out;
    out.reserve(v.size());
    for (const auto& c : v) out.emplace_back(c.real(), c.imag());
    return out;
}

void fit_pair(const std::vector<std::pair<int, OpSummary>>& pts, LinearFit& simple, LinearFit& complex)
{
    std::vector<double> x, ys, yc;
    for (const auto& [k, s] : pts) {
        x.push_back(k);
        ys.push_back(static_cast<double>(s.simple));
        yc.push_back(static_cast<double>(s.complex));
    }
    simple = fit_line(x, ys);
    complex = fit_line(x, yc);
}

json summary_json(const OpSummary& s)
{
    return {{"simple", s.simple}, {"complex", s.complex}, {"compare", s.compare}, {"round", s.round},
            {"calls", s.calls}};
}

json ledger_json(const opcount::Ledger& l)
{
    json j;
    for (const auto& [phase, t] : l.phases()) {
        json raw;
        for (std::size_t i = 0; i < opcount::kOpKinds; ++i) {
            raw[std::string(opcount::op_name(static_cast<opcount::Op>(i)))] = t.ops[i];
        }
        j[phase] = {{"raw", raw}, {"mapped", summary_json(summarize_ops(t))}, {"calls", t.calls}};
    }
    j["total"] = summary_json(summarize_ops(l));
    return j;
}

json fit_json(const LinearFit& f)
{
    return {{"intercept", f.intercept}, {"slope", f.slope}, {"max_residual", f.max_residual}};
}

} // namespace

OpCountResult count_ops(const OpCountConfig& cfg)
{
    using R = opcount::Real;
    if (cfg.q_values.size() < 2 || cfg.k_values.size() < 2) throw ConfigError("count-ops: need two Q and two K values");
    OpCountResult out;
    const auto w = WindowConfig::make(cfg.sample_rate);

    TestSignalSpec clean;
    clean.frequency = 50.3;
    {
        EstimatorConfig ec;
        ec.window = w;
        const auto st = primed_stream(w, clean);
        opcount::LedgerScope scope(out.no_interference);
        const auto a = td_ipdft_window<R>(st, ec);
        if (a.interference_detected) throw ConfigError("count-ops: clean tone triggered the interference path");
    }

    const auto oobi = oobi_spec(50.0, cfg.interference_frequency, cfg.interference_amplitude, 50.0);
    const auto oobi_stream = primed_stream(w, oobi);
    std::vector<std::pair<int, OpSummary>> oobi_pts;
    for (int q : cfg.q_values) {
        EstimatorConfig ec;
        ec.window = w;
        ec.stop_rule = false;
        ec.max_iterations = q;
        opcount::Ledger l;
        {
            opcount::LedgerScope scope(l);
            const auto a = td_ipdft_window<R>(oobi_stream, ec);
            if (a.iterations != q) throw ConfigError("count-ops: OOBI window did not run all iterations");
        }
        oobi_pts.emplace_back(q, summarize_ops(l));
        out.oobi.emplace_back(q, std::move(l));
    }
    fit_pair(oobi_pts, out.oobi_simple, out.oobi_complex);

    for (int k : cfg.k_values) {
        const auto wk = WindowConfig::make(cfg.sample_rate, 50.0, 3.0, static_cast<std::size_t>(k));
        const auto st = primed_stream(wk, clean);
        opcount::Ledger l;
        {
            opcount::LedgerScope scope(l);
            const auto q = td_qsg<R>(st, wk);
            const auto t = estimate_tone<R>(std::span<const complex_t<R>>(q.complex_bins), 1, k - 2, wk.resolution());
            (void)td_apc<R>(t.frequency, t.amplitude, t.phase, q.refined_delay, wk.sample_rate);
        }
        out.simplified_td.emplace_back(k, summarize_ops(l));

        const auto bins = to_counted(st.normalized_windowed(0));
        opcount::Ledger le;
        {
            opcount::LedgerScope scope(le);
            (void)e_ipdft<R>(std::span<const complex_t<R>>(bins), 1, k - 2, cfg.baseline_inner_iterations, wk);
        }
        out.e_ipdft.emplace_back(k, summarize_ops(le));
    }
    fit_pair(out.simplified_td, out.simplified_simple, out.simplified_complex);
    fit_pair(out.e_ipdft, out.e_ipdft_simple, out.e_ipdft_complex);

    const auto oobi_bins = to_counted(oobi_stream.normalized_windowed(0));
    for (int q : cfg.q_values) {
        BaselineConfig bc;
        bc.window = w;
        bc.inner_iterations = cfg.baseline_inner_iterations;
        bc.max_iterations = q;
        bc.energy_threshold = 1e-12;
        opcount::Ledger l;
        {
            opcount::LedgerScope scope(l);
            (void)i_ipdft_spectrum<R>(oobi_bins, bc);
        }
        out.i_ipdft.emplace_back(q, summarize_ops(l));
    }
    fit_pair(out.i_ipdft, out.i_ipdft_simple, out.i_ipdft_complex);
    return out;
}

std::string op_count_json(const OpCountResult& r)
{
    json j;
    j["mapping"] = {{"simple", "add + sub + mul"}, {"complex", "div + sqrt + sin + cos + exp + angle"},
                    {"uncounted", "compare, round"}};
    j["no_interference"] = ledger_json(r.no_interference);
    for (const auto& [q, l] : r.oobi) j["oobi"][std::to_string(q)] = ledger_json(l);
    j["oobi_fit"] = {{"simple", fit_json(r.oobi_simple)}, {"complex", fit_json(r.oobi_complex)}};
    for (const auto& [k, s] : r.simplified_td) j["simplified_td"][std::to_string(k)] = summary_json(s);
    for (const auto& [k, s] : r.e_ipdft) j["e_ipdft"][std::to_string(k)] = summary_json(s);
    j["simplified_td_fit"] = {{"simple", fit_json(r.simplified_simple)}, {"complex", fit_json(r.simplified_complex)}};
    j["e_ipdft_fit"] = {{"simple", fit_json(r.e_ipdft_simple)}, {"complex", fit_json(r.e_ipdft_complex)}};
    for (const auto& [q, s] : r.i_ipdft) j["i_ipdft"][std::to_string(q)] = summary_json(s);
    j["i_ipdft_fit"] = {{"simple", fit_json(r.i_ipdft_simple)}, {"complex", fit_json(r.i_ipdft_complex)}};
    return j.dump(2);
}

} // namespace tdipdft
