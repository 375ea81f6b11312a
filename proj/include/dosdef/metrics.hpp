#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosdef/engine.hpp"

namespace dosdef {

struct ServiceMetrics {
    double tt_seconds = 0.0;  // first generation start to last finish
    double ot_per_min = 0.0;  // completions per minute
    double but_per_min = 0.0; // benign completions per minute
    std::int64_t served = 0;
    std::int64_t benign_served = 0;
    std::int64_t attack_served = 0;
    std::int64_t expired = 0;
};

// Denominator-free rates are undefined markers, never zero.
struct DetectionMetrics {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> precision; // TP / (TP + FP)
    std::optional<double> recall;    // TP / (TP + FN)
    std::optional<double> f1;        // harmonic mean
    std::optional<double> fpr;       // FP / (FP + TP), false-interception rate
    std::optional<double> fjr;       // FN / (FN + TN), missed-detection rate
    std::optional<double> fpr_std;   // FP / (FP + TN)
    std::optional<double> fnr_std;   // FN / (FN + TP)
};

struct MetricsReport {
    std::string scenario;
    std::string policy;
    std::uint64_t seed = 0;
    ServiceMetrics service;
    DetectionMetrics detection;
    OverheadStats overhead;
};

// Rate computation from already-known counts.
ServiceMetrics service_metrics_from_counts(double tt_seconds, std::int64_t completed,
                                           std::int64_t benign_completed);

// Walks the log: TT from the served records' time span, throughput from the
// completion counts. Throws DegenerateRunError when nothing was served.
ServiceMetrics compute_service_metrics(std::span<const LogRecord> log);

// A request is detection-positive iff its final verdict action is DosPenalty.
// Only records carrying a verdict enter the confusion matrix.
DetectionMetrics compute_detection_metrics(std::span<const LogRecord> log);

MetricsReport report_for(const RunResult& result);

// One row per (scenario, policy); column order is fixed and documented in the
// README. Re-exporting the same reports yields identical bytes.
std::string reports_to_csv(std::span<const MetricsReport> reports);

struct ComparisonReport {
    std::vector<MetricsReport> rows; // ours, fcfs, rr
    double but_ours_over_rr = 0.0;
    double but_ours_over_fcfs = 0.0;
    double tt_ours_over_fcfs = 0.0;
};

ComparisonReport compare_reports(MetricsReport ours, MetricsReport fcfs, MetricsReport rr);

// Runs all three policies on the same seed.
ComparisonReport compare_policies(const ScenarioConfig& sc, std::optional<std::uint64_t> seed = {});

std::string comparison_to_csv(const ComparisonReport& report);

} // namespace dosdef
