#include "doctest.h"

#include "dosdef/gensim.hpp"

using namespace dosdef;

namespace {

GenerationProfile benign_short(std::int64_t target = 200) {
    GenerationProfile p;
    p.kind = ProfileKind::BenignShort;
    p.target_length = target;
    p.input_length = 80;
    p.length_jitter_frac = 0.1;
    p.per_token_latency = 0.01;
    return p;
}

GenerationProfile attack_profile() {
    GenerationProfile p;
    p.kind = ProfileKind::AttackLongOutput;
    p.input_length = 120;
    p.repeat_after = 64;
    p.per_token_latency = 0.01;
    return p;
}

SuppressionConfig supp_config() {
    SuppressionConfig cfg;
    cfg.avg_benign_output = 100.0;
    return cfg;
}

} // namespace

TEST_CASE("benign generation stops within the jitter band around the target") {
    const auto profile = benign_short(200);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SimClock clock;
        const auto trace = simulate_request(profile, 7, seed, clock, 4096);
        CHECK(trace.finished());
        CHECK(trace.terminated_by == TerminationReason::Eos);
        CHECK(trace.output_tokens() >= 180);
        CHECK(trace.output_tokens() <= 220);
        CHECK(trace.steps.back().token_id == kEosTokenId);
    }
}

TEST_CASE("attack generation without suppression always reaches the hard cap") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimClock clock;
        const auto trace = simulate_request(attack_profile(), 3, seed, clock, 4096);
        CHECK(trace.output_tokens() == 4096);
        CHECK(trace.terminated_by == TerminationReason::HardCap);
    }
}

TEST_CASE("attack generation with a finite cap terminates just past the cap") {
    EosSuppressor supp(supp_config(), 1000.0);
    SimClock clock;
    const auto trace = simulate_request(attack_profile(), 3, 42, clock, 4096, &supp);
    CHECK(trace.terminated_by == TerminationReason::Eos);
    // tau = 10, e = 2, eta = 1/8, gamma_supp = 1 cross at cap + 17.
    CHECK(trace.output_tokens() == 1017);
}

TEST_CASE("simulated time is exactly steps times latency") {
    SimClock clock;
    auto profile = benign_short(100);
    profile.length_jitter_frac = 0.0;
    const auto trace = simulate_request(profile, 5, 11, clock, 4096);
    CHECK(trace.output_tokens() == 100);
    CHECK(trace.end_time - trace.start_time ==
          doctest::Approx(1.0).epsilon(1e-12)); // 100 tokens at 0.01 s
    CHECK(clock.now() == doctest::Approx(trace.end_time));
}

TEST_CASE("suppression is a no-op for benign traces that end before the cap") {
    const auto profile = benign_short(150);
    SimClock c1, c2;
    const auto plain = simulate_request(profile, 9, 33, c1, 4096);
    EosSuppressor supp(supp_config(), 3000.0);
    const auto suppressed = simulate_request(profile, 9, 33, c2, 4096, &supp);

    REQUIRE(plain.steps.size() == suppressed.steps.size());
    for (std::size_t i = 0; i < plain.steps.size(); ++i) {
        CHECK(plain.steps[i].top_logit == suppressed.steps[i].top_logit);
        CHECK(plain.steps[i].eos_logit == suppressed.steps[i].eos_logit);
        CHECK(plain.steps[i].token_id == suppressed.steps[i].token_id);
    }
    CHECK(plain.end_time == suppressed.end_time);
}

TEST_CASE("identical seeds produce bitwise-identical traces") {
    SimClock c1, c2;
    const auto a = simulate_request(attack_profile(), 13, 77, c1, 4096);
    const auto b = simulate_request(attack_profile(), 13, 77, c2, 4096);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].token_id == b.steps[i].token_id);
        CHECK(a.steps[i].eos_logit == b.steps[i].eos_logit);
    }
    // Different seed, different jittered input length.
    SimClock c3;
    const auto c = simulate_request(benign_short(), 13, 78, c3, 4096);
    const auto d = simulate_request(benign_short(), 13, 77, c3, 4096);
    CHECK((c.input_tokens != d.input_tokens || c.output_tokens() != d.output_tokens()));
}

TEST_CASE("attack tokens repeat after the configured position") {
    SimClock clock;
    const auto trace = simulate_request(attack_profile(), 21, 5, clock, 512);
    for (std::size_t i = 64; i < trace.steps.size(); ++i) CHECK(trace.steps[i].token_id == 7);
    // Pre-repeat tokens vary.
    bool varied = false;
    for (std::size_t i = 1; i < 64; ++i)
        if (trace.steps[i].token_id != trace.steps[0].token_id) varied = true;
    CHECK(varied);
}

TEST_CASE("next_step validates the step index") {
    const auto profile = benign_short();
    const auto draw = draw_request(profile, 1, 1);
    CHECK_THROWS_AS(next_step(profile, draw, 0, 1, 1), UsageError);
}
