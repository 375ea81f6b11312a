#include "dosdef/telemetry.hpp"

#include <algorithm>
#include <sstream>

#include "dosdef/rng.hpp"
#include "json.hpp"

namespace dosdef {

void ResourceVector::validate() const {
    if (!(runtime_s > 0.0)) throw UsageError("ResourceVector: runtime must be > 0");
    if (peak_memory_gb < 0.0) throw UsageError("ResourceVector: memory must be >= 0");
    if (peak_util_pct < 0.0 || peak_util_pct > 100.0)
        throw UsageError("ResourceVector: utilization must be in [0, 100]");
    if (input_tokens < 1) throw UsageError("ResourceVector: input length must be >= 1");
    if (output_tokens < 0) throw UsageError("ResourceVector: output length must be >= 0");
}

namespace {

double noise_multiplier(const CostModel& m, std::uint64_t request_id, std::string_view dim) {
    if (m.noise_sigma == 0.0) return 1.0;
    RngStream rng(derive_seed(m.seed, dim, request_id));
    const double mult = 1.0 + m.noise_sigma * rng.normal();
    return std::clamp(mult, 0.2, 5.0);
}

} // namespace

double CostModel::memory_for(std::int64_t total_tokens, std::uint64_t request_id) const {
    const double raw = base_memory_gb + memory_per_token_gb * static_cast<double>(total_tokens);
    return raw * noise_multiplier(*this, request_id, "cost.memory");
}

double CostModel::util_for(std::int64_t total_tokens, std::uint64_t request_id) const {
    const double raw = base_util_pct + util_per_token_pct * static_cast<double>(total_tokens);
    return std::min(100.0, raw * noise_multiplier(*this, request_id, "cost.util"));
}

ResourceVector derive_resource_vector(const GenerationTrace& trace, const CostModel& cost_model) {
    if (!trace.finished()) throw UsageError("derive_resource_vector: trace is not finished");
    const auto id = static_cast<std::uint64_t>(trace.request_id);
    const std::int64_t total = trace.input_tokens + trace.output_tokens();
    ResourceVector v;
    v.runtime_s = trace.end_time - trace.start_time;
    v.peak_memory_gb = cost_model.memory_for(total, id);
    v.peak_util_pct = cost_model.util_for(total, id);
    v.input_tokens = trace.input_tokens;
    v.output_tokens = trace.output_tokens();
    return v;
}

const char* to_string(TerminationReason r) {
    return r == TerminationReason::Eos ? "eos" : "hard_cap";
}

std::optional<TerminationReason> termination_from_string(const std::string& s) {
    if (s == "eos") return TerminationReason::Eos;
    if (s == "hard_cap") return TerminationReason::HardCap;
    return std::nullopt;
}

std::string trace_to_jsonl(const GenerationTrace& trace) {
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
    for (const auto& s : trace.steps) {
        nlohmann::ordered_json line{
            {"step", s.step_index},
            {"top_logit", s.top_logit},
            {"eos_logit", s.eos_logit},
            {"token_id", s.token_id},
        };
        out << line.dump() << '\n';
    }
    return out.str();
}

} // namespace dosdef
