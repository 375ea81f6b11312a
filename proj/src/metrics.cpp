#include "dosdef/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dosdef {

ServiceMetrics service_metrics_from_counts(double tt_seconds, std::int64_t completed,
                                           std::int64_t benign_completed) {
    if (tt_seconds <= 0.0)
        throw DegenerateRunError("service metrics: run has no measurable duration");
    ServiceMetrics m;
    m.tt_seconds = tt_seconds;
    m.served = completed;
    m.benign_served = benign_completed;
    m.ot_per_min = static_cast<double>(completed) / tt_seconds * 60.0;
    m.but_per_min = static_cast<double>(benign_completed) / tt_seconds * 60.0;
    return m;
}

ServiceMetrics compute_service_metrics(std::span<const LogRecord> log) {
    double first_start = std::numeric_limits<double>::infinity();
    double last_finish = -std::numeric_limits<double>::infinity();
    std::int64_t served = 0, benign = 0, attack = 0, expired = 0;
    for (const auto& r : log) {
        if (r.expired) {
            expired += 1;
            continue;
        }
        served += 1;
        (r.truth_attack ? attack : benign) += 1;
        first_start = std::min(first_start, r.start);
        last_finish = std::max(last_finish, r.finish);
    }
    if (served == 0) throw DegenerateRunError("service metrics: nothing was served");
    ServiceMetrics m = service_metrics_from_counts(last_finish - first_start, served, benign);
    m.attack_served = attack;
    m.expired = expired;
    return m;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

DetectionMetrics compute_detection_metrics(std::span<const LogRecord> log) {
    DetectionMetrics d;
    for (const auto& r : log) {
        if (r.expired || !r.verdict.has_value()) continue;
        const bool positive = r.verdict->action == ActionClass::DosPenalty;
        if (r.truth_attack)
            (positive ? d.tp : d.fn) += 1;
        else
            (positive ? d.fp : d.tn) += 1;
    }
    d.precision = ratio(d.tp, d.tp + d.fp);
    d.recall = ratio(d.tp, d.tp + d.fn);
    if (d.precision && d.recall && (*d.precision + *d.recall) > 0.0)
        d.f1 = 2.0 * *d.precision * *d.recall / (*d.precision + *d.recall);
    d.fpr = ratio(d.fp, d.fp + d.tp);
    d.fjr = ratio(d.fn, d.fn + d.tn);
    d.fpr_std = ratio(d.fp, d.fp + d.tn);
    d.fnr_std = ratio(d.fn, d.fn + d.tp);
    return d;
}

MetricsReport report_for(const RunResult& result) {
    MetricsReport r;
    r.scenario = result.scenario;
    r.policy = to_string(result.policy);
    if (result.polling_disabled) r.policy += "-no-polling";
    if (result.suppression_disabled) r.policy += "-no-suppression";
    r.seed = result.seed;
    r.service = compute_service_metrics(result.log);
    r.detection = compute_detection_metrics(result.log);
    r.overhead = result.overhead;
    return r;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

constexpr const char* kCsvHeader =
    "scenario,policy,seed,tt_seconds,ot_per_min,but_per_min,served,benign_served,attack_served,"
    "expired,tp,fp,tn,fn,precision,recall,f1,fpr,fjr,fpr_std,fnr_std,overhead_mean_ms,"
    "overhead_max_ms";

void append_row(std::ostringstream& out, const MetricsReport& r) {
    out << r.scenario << ',' << r.policy << ',' << r.seed << ',' << fmt(r.service.tt_seconds) << ','
        << fmt(r.service.ot_per_min) << ',' << fmt(r.service.but_per_min) << ',' << r.service.served
        << ',' << r.service.benign_served << ',' << r.service.attack_served << ','
        << r.service.expired << ',' << r.detection.tp << ',' << r.detection.fp << ','
        << r.detection.tn << ',' << r.detection.fn << ',' << fmt(r.detection.precision) << ','
        << fmt(r.detection.recall) << ',' << fmt(r.detection.f1) << ',' << fmt(r.detection.fpr)
        << ',' << fmt(r.detection.fjr) << ',' << fmt(r.detection.fpr_std) << ','
        << fmt(r.detection.fnr_std) << ',' << fmt(r.overhead.mean_ms) << ','
        << fmt(r.overhead.max_ms) << '\n';
}

} // namespace

std::string reports_to_csv(std::span<const MetricsReport> reports) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : reports) append_row(out, r);
    return out.str();
}

ComparisonReport compare_reports(MetricsReport ours, MetricsReport fcfs, MetricsReport rr) {
    ComparisonReport cmp;
    cmp.but_ours_over_rr = ours.service.but_per_min / rr.service.but_per_min;
    cmp.but_ours_over_fcfs = ours.service.but_per_min / fcfs.service.but_per_min;
    cmp.tt_ours_over_fcfs = ours.service.tt_seconds / fcfs.service.tt_seconds;
    cmp.rows = {std::move(ours), std::move(fcfs), std::move(rr)};
    return cmp;
}

ComparisonReport compare_policies(const ScenarioConfig& sc, std::optional<std::uint64_t> seed) {
    RunOptions opt;
    opt.seed_override = seed;
    return compare_reports(report_for(run_policy(sc, Policy::Ours, opt)),
                           report_for(run_policy(sc, Policy::Fcfs, opt)),
                           report_for(run_policy(sc, Policy::RoundRobin, opt)));
}

std::string comparison_to_csv(const ComparisonReport& report) {
    std::ostringstream out;
    out << kCsvHeader << ",but_ours_over_rr,but_ours_over_fcfs,tt_ours_over_fcfs\n";
    for (const auto& r : report.rows) {
        std::ostringstream row;
        append_row(row, r);
        std::string s = row.str();
        s.pop_back(); // replace the newline with the ratio columns
        out << s << ',' << fmt(report.but_ours_over_rr) << ',' << fmt(report.but_ours_over_fcfs)
            << ',' << fmt(report.tt_ours_over_fcfs) << '\n';
    }
    return out.str();
}

} // namespace dosdef
