#include "dosdef/gensim.hpp"

#include <algorithm>
#include <cmath>

#include "dosdef/rng.hpp"

namespace dosdef {

void GenerationProfile::validate(std::int64_t hard_cap) const {
    if (per_token_latency <= 0.0) throw UsageError("GenerationProfile: latency must be > 0");
    if (kind != ProfileKind::AttackLongOutput && target_length > hard_cap)
        throw UsageError("GenerationProfile: target length exceeds the hard cap");
    if (input_length < 1) throw UsageError("GenerationProfile: input length must be >= 1");
    if (length_jitter_frac < 0.0 || input_jitter_frac < 0.0)
        throw UsageError("GenerationProfile: jitter fractions must be >= 0");
}

RequestDraw draw_request(const GenerationProfile& profile, std::uint64_t seed,
                         std::int64_t request_id) {
    RngStream rng(derive_seed(seed, "gensim.draw", static_cast<std::uint64_t>(request_id)));
    // One scale factor drives both lengths: within a task family, longer
    // prompts get longer answers. The input jitter is a residual on top.
    const double scale = 1.0 + rng.uniform(-profile.length_jitter_frac, profile.length_jitter_frac);
    const double resid = 1.0 + rng.uniform(-profile.input_jitter_frac, profile.input_jitter_frac);
    RequestDraw d;
    d.target_length = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(static_cast<double>(profile.target_length) * scale)));
    d.input_length = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(
               std::llround(static_cast<double>(profile.input_length) * scale * resid)));
    return d;
}

LogitStep next_step(const GenerationProfile& profile, const RequestDraw& draw, std::int64_t n,
                    std::uint64_t seed, std::int64_t request_id) {
    if (n < 1) throw UsageError("next_step: step index must be >= 1");

    LogitStep s;
    s.step_index = n;
    s.top_logit = profile.top_logit_level;
    s.eos_logit = profile.eos_baseline;

    if (profile.kind != ProfileKind::AttackLongOutput) {
        // EOS ramps linearly through the top logit so an unsuppressed greedy
        // decode crosses at exactly the drawn target length.
        const std::int64_t ramp_start = draw.target_length - profile.eos_ramp_window;
        if (n > ramp_start)
            s.eos_logit = profile.eos_baseline +
                          profile.eos_ramp_slope * static_cast<double>(n - ramp_start);
    }

    if (profile.repeat_after.has_value() && n > *profile.repeat_after) {
        s.token_id = 7;
    } else {
        const std::uint64_t h =
            derive_seed(seed, "gensim.token",
                        static_cast<std::uint64_t>(request_id) * 0x10001ULL + static_cast<std::uint64_t>(n));
        s.token_id = 10 + static_cast<std::int64_t>(h % 50000);
    }
    return s;
}

GenerationTrace simulate_request(const GenerationProfile& profile, std::int64_t request_id,
                                 std::uint64_t seed, SimClock& clock, std::int64_t hard_cap,
                                 EosSuppressor* suppressor) {
    profile.validate(hard_cap);
    const RequestDraw draw = draw_request(profile, seed, request_id);

    GenerationTrace trace;
    trace.request_id = request_id;
    trace.input_tokens = draw.input_length;
    trace.start_time = clock.now();

    for (std::int64_t n = 1; n <= hard_cap; ++n) {
        LogitStep step = next_step(profile, draw, n, seed, request_id);
        const double eos_effective = suppressor ? suppressor->process(step) : step.eos_logit;
        const bool eos_wins = eos_effective > step.top_logit;
        const bool stop = should_terminate(eos_effective, step.top_logit, n, hard_cap);

        clock.advance(profile.per_token_latency);
        if (stop && eos_wins) step.token_id = kEosTokenId;
        trace.steps.push_back(step);
        if (stop) {
            trace.terminated_by = eos_wins ? TerminationReason::Eos : TerminationReason::HardCap;
            break;
        }
    }

    trace.end_time = clock.now();
    return trace;
}

const char* to_string(ProfileKind k) {
    switch (k) {
    case ProfileKind::BenignShort: return "benign_short";
    case ProfileKind::BenignLongContext: return "benign_long_context";
    case ProfileKind::AttackLongOutput: return "attack_long_output";
    }
    return "?";
}

std::optional<ProfileKind> profile_kind_from_string(const std::string& s) {
    for (ProfileKind k : {ProfileKind::BenignShort, ProfileKind::BenignLongContext,
                          ProfileKind::AttackLongOutput})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

} // namespace dosdef
