#include "dosdef/suppression.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace dosdef {

void SuppressionConfig::validate() const {
    if (max_output_tokens < 1) throw UsageError("SuppressionConfig: hard cap must be >= 1");
    if (eta <= 0.0 || eta > 1.0) throw UsageError("SuppressionConfig: eta must be in (0, 1]");
    if (gamma_supp <= 0.0) throw UsageError("SuppressionConfig: gamma_supp must be > 0");
    if (avg_benign_output < 0.0) throw UsageError("SuppressionConfig: avg output must be >= 0");
    if (min_cap() > static_cast<double>(max_output_tokens))
        throw UsageError("SuppressionConfig: min cap exceeds the hard cap");
}

double output_cap(double score, double initial_score, const SuppressionConfig& cfg) {
    if (initial_score <= 0.0) throw UsageError("output_cap: initial score must be > 0");
    const double lo = cfg.min_cap();
    const double hi = static_cast<double>(cfg.max_output_tokens);
    const double cap = lo + (score / initial_score) * (hi - lo);
    return std::clamp(cap, lo, hi);
}

void update_gap(SuppressionState& state, const LogitStep& step) {
    if (step.step_index != state.step + 1)
        throw UsageError("update_gap: step does not extend the trace by one");
    state.step += 1;
    state.gap_sum += step.top_logit - step.eos_logit;
    if (static_cast<double>(state.step) > state.cap) {
        const std::int64_t n = ++state.post_cap_counts[step.token_id];
        state.max_post_cap_count = std::max(state.max_post_cap_count, n);
    }
}

double repetition_boost(const SuppressionState& state, const SuppressionConfig& cfg) {
    return cfg.gamma_supp * static_cast<double>(state.max_post_cap_count);
}

std::optional<double> confidence_term(const SuppressionState& state, const SuppressionConfig& cfg) {
    const double over = static_cast<double>(state.step) - state.cap;
    if (over <= 0.0) return std::nullopt;
    const double d = state.avg_gap();
    return -d / over + cfg.eta * d;
}

double adjust_eos(const SuppressionState& state, const LogitStep& step, const SuppressionConfig& cfg) {
    const auto delta2 = confidence_term(state, cfg);
    if (!delta2.has_value()) return step.eos_logit;
    double d2 = *delta2;
    if (cfg.clamp_nonnegative_delta2) d2 = std::max(0.0, d2);
    return d2 * (step.eos_logit + repetition_boost(state, cfg));
}

bool should_terminate(double corrected_eos, double top_logit_excluding_eos, std::int64_t step_index,
                      std::int64_t hard_cap) {
    return corrected_eos > top_logit_excluding_eos || step_index >= hard_cap;
}

EosSuppressor::EosSuppressor(SuppressionConfig cfg, double cap, bool collect_telemetry)
    : cfg_(std::move(cfg)), collect_telemetry_(collect_telemetry) {
    cfg_.validate();
    state_.cap = cap;
}

double EosSuppressor::process(const LogitStep& step) {
    update_gap(state_, step);
    const double corrected = adjust_eos(state_, step, cfg_);
    if (collect_telemetry_ && static_cast<double>(state_.step) > state_.cap) {
        telemetry_.push_back(SuppressionTelemetryRow{
            state_.step,
            state_.avg_gap(),
            repetition_boost(state_, cfg_),
            confidence_term(state_, cfg_).value_or(0.0),
            step.eos_logit,
            corrected,
        });
    }
    return corrected;
}

std::string trace_to_jsonl(const GenerationTrace& trace,
                           std::span<const SuppressionTelemetryRow> telemetry) {
    std::ostringstream out;
    nlohmann::ordered_json header{
        {"request_id", trace.request_id},
        {"input_tokens", trace.input_tokens},
        {"start_time", trace.start_time},
        {"end_time", trace.end_time},
        {"terminated_by", trace.finished() ? nlohmann::json(to_string(*trace.terminated_by))
                                           : nlohmann::json(nullptr)},
    };
    out << header.dump() << '\n';
    std::size_t t = 0;
    for (const auto& s : trace.steps) {
        nlohmann::ordered_json line{
            {"step", s.step_index},
            {"top_logit", s.top_logit},
            {"eos_logit", s.eos_logit},
            {"token_id", s.token_id},
        };
        while (t < telemetry.size() && telemetry[t].step < s.step_index) ++t;
        if (t < telemetry.size() && telemetry[t].step == s.step_index) {
            line["avg_gap"] = telemetry[t].avg_gap;
            line["delta1"] = telemetry[t].delta1;
            line["delta2"] = telemetry[t].delta2;
            line["eos_corrected"] = telemetry[t].eos_corrected;
        }
        out << line.dump() << '\n';
    }
    return out.str();
}

} // namespace dosdef
