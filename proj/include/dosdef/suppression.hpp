#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dosdef/telemetry.hpp"

namespace dosdef {

struct SuppressionConfig {
    std::int64_t max_output_tokens = 4096; // system hard cap
    double eta = 0.125;                    // inhibition adjustment
    double gamma_supp = 1.0;               // repetition scale
    double avg_benign_output = 100.0;      // refreshed from the classifier at round boundaries
    // The confidence term is negative for small post-cap offsets, which the
    // correction applies literally; this flag floors it at zero instead.
    bool clamp_nonnegative_delta2 = false;

    double min_cap() const { return 2.0 * avg_benign_output; }
    void validate() const;
};

// Per-user output cap: linear interpolation between min_cap and the hard cap
// by score ratio, clamped to that interval.
double output_cap(double score, double initial_score, const SuppressionConfig& cfg);

// Per-generation suppression state. `post_cap_counts` tracks emitted token
// multiplicities for steps beyond the cap, including the candidate token of
// the step currently being decided.
struct SuppressionState {
    double cap = 0.0;
    std::int64_t step = 0;
    double gap_sum = 0.0;
    std::unordered_map<std::int64_t, std::int64_t> post_cap_counts;
    std::int64_t max_post_cap_count = 0;

    double avg_gap() const { return step == 0 ? 0.0 : gap_sum / static_cast<double>(step); }
};

// Ingests one step: advances the counter, accumulates the logit gap, and
// counts the token when past the cap.
void update_gap(SuppressionState& state, const LogitStep& step);

// Repetition term: gamma_supp times the highest post-cap token multiplicity.
double repetition_boost(const SuppressionState& state, const SuppressionConfig& cfg);

// Confidence term -d/(n - cap) + eta*d. Empty while suppression is inactive.
std::optional<double> confidence_term(const SuppressionState& state, const SuppressionConfig& cfg);

// Corrected EOS logit for the current step. Below the cap this is the raw EOS
// logit, bit for bit.
double adjust_eos(const SuppressionState& state, const LogitStep& step, const SuppressionConfig& cfg);

// Greedy termination rule: the (corrected) EOS logit strictly beats every
// other logit, or the hard cap is reached.
bool should_terminate(double corrected_eos, double top_logit_excluding_eos, std::int64_t step_index,
                      std::int64_t hard_cap);

struct SuppressionTelemetryRow {
    std::int64_t step = 0;
    double avg_gap = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double eos_raw = 0.0;
    double eos_corrected = 0.0;
};

// Per-generation hook owned by exactly one simulated decode loop.
class EosSuppressor {
public:
    EosSuppressor(SuppressionConfig cfg, double cap, bool collect_telemetry = false);

    // Ingests the step and returns the EOS logit to use for termination.
    double process(const LogitStep& step);

    const SuppressionState& state() const { return state_; }
    const SuppressionConfig& config() const { return cfg_; }
    const std::vector<SuppressionTelemetryRow>& telemetry() const { return telemetry_; }

private:
    SuppressionConfig cfg_;
    SuppressionState state_;
    bool collect_telemetry_;
    std::vector<SuppressionTelemetryRow> telemetry_;
};

// Trace serialization with per-step suppression telemetry merged in by step
// index, for EOS-dynamics analysis.
std::string trace_to_jsonl(const GenerationTrace& trace,
                           std::span<const SuppressionTelemetryRow> telemetry);

} // namespace dosdef
