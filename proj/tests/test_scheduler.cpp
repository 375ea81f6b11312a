#include "doctest.h"

#include <algorithm>

#include "dosdef/rng.hpp"
#include "dosdef/scheduler.hpp"

using namespace dosdef;

namespace {

QueuedRequest req(std::int64_t id, double arrival = 0.0) {
    return QueuedRequest{id, arrival, 0, false};
}

RiskVerdict verdict(ActionClass action, double i_c) {
    return RiskVerdict{i_c, 1.0, Region::B, action};
}

} // namespace

TEST_CASE("enqueue creates users at the initial score and preserves order") {
    SchedulerState s;
    s.enqueue(1, req(10), 100.0);
    CHECK(s.user(1).score == doctest::Approx(100.0));
    CHECK(s.user(1).queue.size() == 1);

    s.enqueue(1, req(11), 100.0);
    CHECK(s.take_head(1).request_id == 10);
    CHECK(s.take_head(1).request_id == 11);
    CHECK_THROWS_AS(s.take_head(1), UsageError);
}

TEST_CASE("select_round returns the top-n users by score") {
    SchedulerConfig cfg;
    cfg.parallelism = 2;
    SchedulerState s;
    s.enqueue(1, req(1), 5.0);
    s.enqueue(2, req(2), 3.0);
    s.enqueue(3, req(3), 5.0);
    CHECK(s.select_round(cfg) == std::vector<int>{1, 3});

    cfg.parallelism = 10;
    CHECK(s.select_round(cfg).size() == 3); // saturation: all active users
}

TEST_CASE("select_round breaks score ties by longer idle, then smaller id") {
    SchedulerConfig cfg;
    cfg.parallelism = 1;
    SchedulerState s;
    s.enqueue(1, req(1), 7.0);
    s.enqueue(2, req(2), 7.0);
    // Four rounds in which only user 1 is served.
    for (int i = 0; i < 4; ++i) {
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::MildPenalty, 1.0)}};
        const std::vector<int> served{1};
        s.apply_round_updates(served, v, cfg);
    }
    // Restore the tie; user 2 has been idle four rounds, user 1 zero.
    SchedulerState tied;
    tied.enqueue(1, req(1), 7.0);
    tied.enqueue(2, req(2), 7.0);
    for (int i = 0; i < 4; ++i) {
        std::map<int, RiskVerdict> none;
        tied.apply_round_updates({}, none, cfg);
    }
    // Equal idle counts fall back to the smaller id.
    CHECK(tied.select_round(cfg) == std::vector<int>{1});

    CHECK(s.user(2).idle_rounds == 4);
    CHECK(s.user(1).idle_rounds == 0);
}

TEST_CASE("select_round only considers users with pending requests") {
    SchedulerConfig cfg;
    SchedulerState s;
    s.enqueue(1, req(1), 100.0);
    s.enqueue(2, req(2), 50.0);
    (void)s.take_head(1); // user 1 now has an empty queue
    CHECK(s.select_round(cfg) == std::vector<int>{2});
    (void)s.take_head(2);
    CHECK(s.select_round(cfg).empty()); // idle signal
}

TEST_CASE("score update rules") {
    SchedulerConfig cfg; // gamma = 1, mu = 2, delta = 0.5, S_ini = 100

    SUBCASE("reward adds gamma over i_c") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::Reward, 0.5)}};
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(1).score == doctest::Approx(102.0).epsilon(1e-12));
    }

    SUBCASE("dos penalty subtracts gamma times i_c") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::DosPenalty, 4.0)}};
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(1).score == doctest::Approx(96.0).epsilon(1e-12));
    }

    SUBCASE("mild penalty subtracts gamma") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::MildPenalty, 3.0)}};
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(1).score == doctest::Approx(99.0).epsilon(1e-12));
    }

    SUBCASE("reward clips runaway scores to S_ini - gamma") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        auto& u = s.user_mut(1);
        u.score = 250.0;
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::Reward, 1.0)}};
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(1).score == doctest::Approx(99.0).epsilon(1e-12));
    }

    SUBCASE("unserved users are compensated up to S_ini") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        s.enqueue(2, req(2), 100.0);
        auto& u2 = s.user_mut(2);
        u2.score = 10.0;
        std::map<int, RiskVerdict> v{{1, verdict(ActionClass::MildPenalty, 1.0)}};
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(2).score == doctest::Approx(10.5).epsilon(1e-12));

        u2.score = 99.8;
        s.apply_round_updates(std::vector<int>{1}, v, cfg);
        CHECK(s.user(2).score == doctest::Approx(100.0).epsilon(1e-12));
    }

    SUBCASE("verdicts must cover exactly the served users") {
        SchedulerState s;
        s.enqueue(1, req(1), 100.0);
        s.enqueue(2, req(2), 100.0);
        std::map<int, RiskVerdict> extra{{1, verdict(ActionClass::Reward, 1.0)},
                                         {2, verdict(ActionClass::Reward, 1.0)}};
        CHECK_THROWS_AS(s.apply_round_updates(std::vector<int>{1}, extra, cfg), UsageError);
        std::map<int, RiskVerdict> missing;
        CHECK_THROWS_AS(s.apply_round_updates(std::vector<int>{1}, missing, cfg), UsageError);
    }
}

TEST_CASE("round updates are order-independent") {
    SchedulerConfig cfg;
    cfg.parallelism = 3;
    auto build = [&] {
        SchedulerState s;
        for (int uid = 1; uid <= 5; ++uid) s.enqueue(uid, req(uid), 100.0);
        return s;
    };
    // Same verdicts delivered in different completion orders must leave
    // identical post-round scores.
    std::map<int, RiskVerdict> verdicts{{1, verdict(ActionClass::Reward, 0.8)},
                                        {3, verdict(ActionClass::DosPenalty, 6.0)},
                                        {5, verdict(ActionClass::MildPenalty, 1.0)}};
    SchedulerState a = build();
    a.apply_round_updates(std::vector<int>{1, 3, 5}, verdicts, cfg);
    SchedulerState b = build();
    b.apply_round_updates(std::vector<int>{5, 1, 3}, verdicts, cfg);
    for (int uid = 1; uid <= 5; ++uid) CHECK(a.user(uid).score == b.user(uid).score);
}

TEST_CASE("select_round equals a brute-force sort over 500 random rounds") {
    SchedulerConfig cfg;
    SchedulerState s;
    RngStream rng(derive_seed(21, "sched.oracle"));
    std::int64_t next_request = 0;
    for (int uid = 0; uid < 12; ++uid) s.enqueue(uid, req(next_request++), 100.0);

    for (int round = 0; round < 500; ++round) {
        cfg.parallelism = static_cast<int>(rng.uniform_int(1, 5));

        struct Key {
            double score;
            std::int64_t idle;
            int uid;
        };
        std::vector<Key> keys;
        for (const auto& [uid, u] : s.users())
            if (!u.queue.empty()) keys.push_back(Key{u.score, u.idle_rounds, uid});
        std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.idle != b.idle) return a.idle > b.idle;
            return a.uid < b.uid;
        });
        std::vector<int> expected;
        for (std::size_t i = 0; i < keys.size() && i < static_cast<std::size_t>(cfg.parallelism); ++i)
            expected.push_back(keys[i].uid);

        const auto got = s.select_round(cfg);
        REQUIRE(got == expected);

        // Argmax invariance: scaling every score leaves the choice unchanged.
        SchedulerState scaled = s;
        const double k = rng.uniform(0.2, 5.0);
        for (const auto& [uid, u] : s.users())
            scaled.user_mut(uid).score = u.score * k;
        CHECK(scaled.select_round(cfg) == got);

        // Serve the selection with random verdicts; sometimes refill queues.
        std::map<int, RiskVerdict> verdicts;
        for (int uid : got) {
            (void)s.take_head(uid);
            const double roll = rng.uniform01();
            const ActionClass action = roll < 0.5    ? ActionClass::Reward
                                       : roll < 0.8 ? ActionClass::MildPenalty
                                                    : ActionClass::DosPenalty;
            verdicts[uid] = verdict(action, rng.uniform(0.5, 10.0));
        }
        s.apply_round_updates(got, verdicts, cfg);
        for (int uid = 0; uid < 12; ++uid)
            if (rng.uniform01() < 0.4) s.enqueue(uid, req(next_request++), 100.0);
    }
}

TEST_CASE("scheduler config validation") {
    SchedulerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.parallelism = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.parallelism = 1;
    cfg.delta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg.delta = 0.5;
    cfg.mu = 1.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}
