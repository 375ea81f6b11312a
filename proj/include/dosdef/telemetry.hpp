#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dosdef/errors.hpp"

namespace dosdef {

// Per-request telemetry record: runtime (s), peak memory (GB), peak GPU
// utilization (%), input and output lengths (tokens).
struct ResourceVector {
    double runtime_s = 0.0;
    double peak_memory_gb = 0.0;
    double peak_util_pct = 0.0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    // runtime > 0, memory >= 0, util in [0,100], input >= 1, output >= 0
    void validate() const;
};

// One decoding step. `top_logit` is the highest non-EOS logit, so the EOS
// logit may exceed it (that is exactly the termination condition).
struct LogitStep {
    std::int64_t step_index = 0; // 1-based
    double top_logit = 0.0;
    double eos_logit = 0.0;
    std::int64_t token_id = 0;
};

enum class TerminationReason { Eos, HardCap };

struct GenerationTrace {
    std::int64_t request_id = 0;
    std::int64_t input_tokens = 0;
    std::vector<LogitStep> steps;
    double start_time = 0.0;
    double end_time = 0.0;
    std::optional<TerminationReason> terminated_by;

    bool finished() const { return terminated_by.has_value(); }
    std::int64_t output_tokens() const { return static_cast<std::int64_t>(steps.size()); }
};

// Simulated clock. Advances only through explicit steps; a single event loop
// owns it, so no synchronization.
class SimClock {
public:
    SimClock() = default;
    explicit SimClock(double start) : now_(start) {}

    double now() const { return now_; }

    void advance(double dt) {
        if (dt < 0.0) throw UsageError("SimClock::advance: negative step");
        now_ += dt;
    }

private:
    double now_ = 0.0;
};

// Synthesizes peak memory and utilization from token counts: affine curves
// with a per-request multiplicative noise factor. The factor is keyed by
// (seed, request_id), so for one request the outputs stay monotone in the
// token count, and reruns reproduce the same values byte for byte.
struct CostModel {
    double base_memory_gb = 2.0;
    double memory_per_token_gb = 0.001;
    double base_util_pct = 25.0;
    double util_per_token_pct = 0.01;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;

    double memory_for(std::int64_t total_tokens, std::uint64_t request_id) const;
    double util_for(std::int64_t total_tokens, std::uint64_t request_id) const;
};

// Builds the telemetry record for a finished trace: runtime and lengths from
// the trace itself, memory/utilization from the cost model.
ResourceVector derive_resource_vector(const GenerationTrace& trace, const CostModel& cost_model);

// Debug serialization: one metadata line followed by one line per step.
// Field names are documented in the README.
std::string trace_to_jsonl(const GenerationTrace& trace);

const char* to_string(TerminationReason r);
std::optional<TerminationReason> termination_from_string(const std::string& s);

} // namespace dosdef
