#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dosdef/suppression.hpp"
#include "dosdef/telemetry.hpp"

namespace dosdef {

enum class ProfileKind { BenignShort, BenignLongContext, AttackLongOutput };

// Synthetic stand-in for model decoding. Benign profiles ramp the EOS logit
// above the top logit near the target length; the attack profile keeps it at
// the baseline so decoding runs to the hard cap unless suppressed.
struct GenerationProfile {
    ProfileKind kind = ProfileKind::BenignShort;
    std::int64_t target_length = 100;
    std::int64_t input_length = 80;
    double length_jitter_frac = 0.1;
    double input_jitter_frac = 0.0;
    double top_logit_level = 10.0;
    double eos_baseline = 2.0;
    double eos_ramp_slope = 0.5;
    std::int64_t eos_ramp_window = 17; // steps before the target where the ramp starts
    std::optional<std::int64_t> repeat_after;
    double per_token_latency = 0.01;

    void validate(std::int64_t hard_cap) const;
};

inline constexpr std::int64_t kEosTokenId = 2;

// Per-request realization of the jittered lengths. Keyed by (seed, request),
// so it does not depend on scheduling order.
struct RequestDraw {
    std::int64_t target_length = 0;
    std::int64_t input_length = 1;
};

RequestDraw draw_request(const GenerationProfile& profile, std::uint64_t seed, std::int64_t request_id);

// Raw logits and candidate token for step n (1-based), before any suppression.
LogitStep next_step(const GenerationProfile& profile, const RequestDraw& draw, std::int64_t n,
                    std::uint64_t seed, std::int64_t request_id);

// Runs one greedy decode to completion, advancing the clock by the per-token
// latency for every emitted step. The suppressor, when present, corrects the
// EOS logit before the termination check.
GenerationTrace simulate_request(const GenerationProfile& profile, std::int64_t request_id,
                                 std::uint64_t seed, SimClock& clock, std::int64_t hard_cap,
                                 EosSuppressor* suppressor = nullptr);

const char* to_string(ProfileKind k);
std::optional<ProfileKind> profile_kind_from_string(const std::string& s);

} // namespace dosdef
