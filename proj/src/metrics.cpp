#include "tdipdft/metrics.hpp"

#include "limits_data.hpp"
#include "tdipdft/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>

namespace tdipdft {

namespace {

using json = nlohmann::json;

double limit_value(const json& j, const char* key)
{
    if (!j.contains(key)) return Limits::kNone;
    const double v = j.at(key).get<double>();
    if (!(v > 0.0)) throw ConfigError(std::string("limits: '") + key + "' must be positive");
    return v;
}

bool exceeds(double value, double limit) { return value > limit; }

// Span of the exceedances around the step. Exceedances separated from that
// cluster by more than `gap` are isolated noise hits and do not count.
double response_time(const std::vector<double>& time, const std::vector<double>& metric, double limit, double gap)
{
    std::vector<double> hits;
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (exceeds(metric[i], limit)) hits.push_back(time[i]);
    }
    if (hits.empty()) return 0.0;
    std::size_t seed = 0;
    for (std::size_t i = 1; i < hits.size(); ++i) {
        if (std::fabs(hits[i]) < std::fabs(hits[seed])) seed = i;
    }
    std::size_t lo = seed;
    std::size_t hi = seed;
    while (lo > 0 && hits[lo] - hits[lo - 1] <= gap) --lo;
    while (hi + 1 < hits.size() && hits[hi + 1] - hits[hi] <= gap) ++hi;
    return hits[hi] - hits[lo];
}

} // namespace

std::string_view class_name(PerfClass c) { return c == PerfClass::P ? "P" : "M"; }

LimitTable LimitTable::from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("limits: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("limits: expected an object keyed by test kind");
    LimitTable t;
    try {
        for (const auto& [kind_key, per_class] : j.items()) {
            const TestKind kind = kind_from_name(kind_key);
            for (const auto& [cls_key, v] : per_class.items()) {
                if (cls_key != "P" && cls_key != "M") throw ConfigError("limits: class must be P or M");
                Limits l;
                l.tve = limit_value(v, "tve");
                l.fe = limit_value(v, "fe");
                l.rfe = limit_value(v, "rfe");
                l.response_tve = limit_value(v, "response_tve");
                l.response_fe = limit_value(v, "response_fe");
                l.response_rfe = limit_value(v, "response_rfe");
                l.delay = limit_value(v, "delay");
                l.overshoot = limit_value(v, "overshoot");
                l.exclusion = v.value("exclusion", 0.0);
                t.entries_[{kind, cls_key == "P" ? PerfClass::P : PerfClass::M}] = l;
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("limits: ") + e.what());
    }
    return t;
}

LimitTable LimitTable::standard() { return from_json(kStandardLimitsJson); }

std::optional<Limits> LimitTable::find(TestKind kind, PerfClass cls) const
{
    const auto it = entries_.find({kind, cls});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

const Limits& LimitTable::at(TestKind kind, PerfClass cls) const
{
    const auto it = entries_.find({kind, cls});
    if (it == entries_.end()) {
        throw ConfigError("limits: no class " + std::string(class_name(cls)) + " entry for "
                          + std::string(kind_name(kind)));
    }
    return it->second;
}

double tve(double amplitude_est, double phase_est, double amplitude_true, double phase_true)
{
    if (!(amplitude_true > 0.0)) throw ConfigError("tve: truth amplitude must be positive");
    const auto est = std::polar(amplitude_est, phase_est);
    const auto truth = std::polar(amplitude_true, phase_true);
    return 100.0 * std::abs(est - truth) / amplitude_true;
}

FrequencyErrors fe_rfe(double f_est, double rocof_est, double f_true, double rocof_true)
{
    return {std::fabs(f_est - f_true), std::fabs(rocof_est - rocof_true)};
}

ErrorReport evaluate(std::span<const PhasorEstimate> estimates, const TestSignalSpec& spec,
                     std::span<const Interval> exclusions)
{
    ErrorReport r;
    r.samples.reserve(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        const auto truth = ground_truth_at(spec, e.timestamp);
        ErrorSample s;
        s.time = e.timestamp;
        s.tve = tve(e.amplitude, e.phase, truth.amplitude, truth.phase);
        const auto fr = fe_rfe(e.frequency, e.rocof, truth.frequency, truth.rocof);
        s.fe = fr.fe;
        s.rfe = fr.rfe;
        s.rfe_valid = i > 0;
        s.amplitude = e.amplitude;
        s.phase = e.phase;
        s.truth_amplitude = truth.amplitude;
        s.truth_phase = truth.phase;
        for (const auto& x : exclusions) {
            if (s.time >= x.begin && s.time <= x.end) s.excluded = true;
        }
        if (s.excluded) {
            ++r.excluded;
        } else {
            ++r.evaluated;
            r.max_tve = std::max(r.max_tve, s.tve);
            r.max_fe = std::max(r.max_fe, s.fe);
            if (s.rfe_valid) r.max_rfe = std::max(r.max_rfe, s.rfe);
        }
        r.samples.push_back(s);
    }
    return r;
}

StepMetrics step_metrics(const StepSeries& s, double before, double after, const Limits& limits, double cluster_gap)
{
    const std::size_t n = s.time.size();
    if (s.value.size() != n || s.tve.size() != n || s.fe.size() != n || s.rfe.size() != n) {
        throw ConfigError("step metrics: series lengths differ");
    }
    if (before == after) throw ConfigError("step metrics: zero step magnitude");
    StepMetrics m;
    if (!std::is_sorted(s.time.begin(), s.time.end())) throw ConfigError("step metrics: time must ascend");
    m.response_tve = response_time(s.time, s.tve, limits.tve, cluster_gap);
    m.response_fe = response_time(s.time, s.fe, limits.fe, cluster_gap);
    m.response_rfe = response_time(s.time, s.rfe, limits.rfe, cluster_gap);

    const double span = after - before;
    std::optional<double> delay;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (s.value[i] - before) / span;
        if (!delay && r >= 0.5) {
            if (i == 0) {
                delay = s.time[0];
            } else {
                const double r0 = (s.value[i - 1] - before) / span;
                delay = s.time[i - 1] + (0.5 - r0) / (r - r0) * (s.time[i] - s.time[i - 1]);
            }
        }
        // beyond the final value after the step, below the initial one before it
        worst = std::max(worst, s.time[i] >= 0.0 ? r - 1.0 : -r);
    }
    if (!delay) throw UndefinedDelay("step metrics: estimate never crosses 50% of the step");
    m.delay = *delay;
    m.overshoot = 100.0 * worst;
    return m;
}

LimitCheck check(const ErrorReport& report, const Limits& limits)
{
    LimitCheck c;
    if (!report.step) {
        c.tve = report.max_tve <= limits.tve;
        c.fe = report.max_fe <= limits.fe;
        c.rfe = report.max_rfe <= limits.rfe;
    } else {
        // step runs are judged on their transient figures only
        const auto& st = *report.step;
        c.response = st.response_tve <= limits.response_tve && st.response_fe <= limits.response_fe
                     && st.response_rfe <= limits.response_rfe;
        c.delay = std::fabs(st.delay) <= limits.delay;
        c.overshoot = st.overshoot <= limits.overshoot;
    }
    return c;
}

void write_error_csv(std::ostream& os, const ErrorReport& report)
{
    os << "time,tve,fe,rfe,excluded\n";
    const auto precision = os.precision(12);
    for (const auto& s : report.samples) {
        os << s.time << ',' << s.tve << ',' << s.fe << ',';
        if (s.rfe_valid) os << s.rfe;
        os << ',' << (s.excluded ? 1 : 0) << '\n';
    }
    os.precision(precision);
}

std::string error_summary_json(const ErrorReport& report)
{
    json j;
    j["max_tve"] = report.max_tve;
    j["max_fe"] = report.max_fe;
    j["max_rfe"] = report.max_rfe;
    j["evaluated"] = report.evaluated;
    j["excluded"] = report.excluded;
    if (report.step) {
        j["step"] = {{"response_tve", report.step->response_tve}, {"response_fe", report.step->response_fe},
                     {"response_rfe", report.step->response_rfe}, {"delay", report.step->delay},
                     {"overshoot", report.step->overshoot}};
    }
    return j.dump(2);
}

} // namespace tdipdft
