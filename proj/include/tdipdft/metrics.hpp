#pragma once

// Compliance metrics: TVE, FE, RFE, step response/delay/overshoot, and the
// class P/M limit table they are judged against.

#include "tdipdft/estimator.hpp"
#include "tdipdft/siggen.hpp"

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tdipdft {

enum class PerfClass { P, M };

std::string_view class_name(PerfClass c);

struct Limits {
    static constexpr double kNone = std::numeric_limits<double>::infinity();
    double tve = kNone; // %
    double fe = kNone;  // Hz
    double rfe = kNone; // Hz/s
    double response_tve = kNone;
    double response_fe = kNone;
    double response_rfe = kNone;
    double delay = kNone;     // s, on |delay|
    double overshoot = kNone; // % of step
    double exclusion = 0.0;   // s excluded after each ramp change
};

class LimitTable {
public:
    static LimitTable from_json(std::string_view text);
    static LimitTable standard(); // the shipped data/limits.json

    std::optional<Limits> find(TestKind kind, PerfClass cls) const;
    const Limits& at(TestKind kind, PerfClass cls) const;

private:
    std::map<std::pair<TestKind, PerfClass>, Limits> entries_;
};

// 100 |est - truth| / |truth| with phasors A e^{j phi}.
double tve(double amplitude_est, double phase_est, double amplitude_true, double phase_true);

struct FrequencyErrors {
    double fe = 0.0;
    double rfe = 0.0;
};

FrequencyErrors fe_rfe(double f_est, double rocof_est, double f_true, double rocof_true);

struct ErrorSample {
    double time = 0.0;
    double tve = 0.0;
    double fe = 0.0;
    double rfe = 0.0;
    bool rfe_valid = true; // false for a report without a predecessor
    bool excluded = false;
    double amplitude = 0.0;
    double phase = 0.0;
    double truth_amplitude = 0.0;
    double truth_phase = 0.0;
};

struct StepMetrics {
    double response_tve = 0.0;
    double response_fe = 0.0;
    double response_rfe = 0.0;
    double delay = 0.0; // signed, s
    double overshoot = 0.0; // %
};

struct ErrorReport {
    std::vector<ErrorSample> samples;
    double max_tve = 0.0;
    double max_fe = 0.0;
    double max_rfe = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;
    std::optional<StepMetrics> step;
};

struct Interval {
    double begin = 0.0;
    double end = 0.0;
};

ErrorReport evaluate(std::span<const PhasorEstimate> estimates, const TestSignalSpec& spec,
                     std::span<const Interval> exclusions = {});

// Step response of a series sampled at `time` (relative to the step instant).
// `value` is the stepped quantity's estimate, going from `before` to `after`.
struct StepSeries {
    std::vector<double> time;
    std::vector<double> value;
    std::vector<double> tve;
    std::vector<double> fe;
    std::vector<double> rfe;
};

// Response times span the cluster of limit exceedances nearest the step;
// exceedances further than `cluster_gap` from that cluster are ignored.
StepMetrics step_metrics(const StepSeries& series, double before, double after, const Limits& limits,
                         double cluster_gap = std::numeric_limits<double>::infinity());

struct LimitCheck {
    bool tve = true;
    bool fe = true;
    bool rfe = true;
    bool response = true;
    bool delay = true;
    bool overshoot = true;
    bool all() const { return tve && fe && rfe && response && delay && overshoot; }
};

// Step reports are checked on response, delay and overshoot only.
LimitCheck check(const ErrorReport& report, const Limits& limits);

// time,tve,fe,rfe,excluded
void write_error_csv(std::ostream& os, const ErrorReport& report);
std::string error_summary_json(const ErrorReport& report);

} // namespace tdipdft
