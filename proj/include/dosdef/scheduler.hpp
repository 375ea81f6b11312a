#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dosdef/resource_index.hpp"

namespace dosdef {

struct QueuedRequest {
    std::int64_t request_id = 0;
    double arrival_time = 0.0;
    int profile_index = 0;
    bool truth_attack = false;
};

struct UserState {
    int user_id = 0;
    double score = 0.0;
    double initial_score = 0.0;
    std::deque<QueuedRequest> queue; // FCFS within the user
    std::int64_t last_served_round = -1;
    std::int64_t idle_rounds = 0;
};

struct SchedulerConfig {
    int parallelism = 1;       // n
    double gamma = 1.0;        // penalty intensity
    double mu = 2.0;           // reputation cap multiple
    double delta = 0.5;        // compensation rate, in (0, 1]
    double initial_score = 100.0;
    // Reward scale override; the reward reuses gamma when unset.
    std::optional<double> gamma_reward;

    void validate() const;
};

// Per-user sub-queues plus reputation scores. Single writer (the round
// driver); generation workers never touch it.
class SchedulerState {
public:
    // Appends to the user's sub-queue, creating the user at the initial score.
    void enqueue(int user_id, QueuedRequest request, double initial_score);

    // The up-to-n highest-scoring users with pending requests. Ties prefer the
    // longer-idle user, then the smaller user id. Empty result means idle.
    std::vector<int> select_round(const SchedulerConfig& cfg) const;

    // Pops the head request of a user selected this round.
    QueuedRequest take_head(int user_id);

    // End-of-round score updates, applied atomically: exactly one rule per
    // served user by verdict action, compensation for everyone else.
    void apply_round_updates(std::span<const int> served,
                             const std::map<int, RiskVerdict>& verdicts,
                             const SchedulerConfig& cfg);

    bool has_pending() const;
    bool has_user(int user_id) const { return users_.contains(user_id); }
    const UserState& user(int user_id) const;
    UserState& user_mut(int user_id) { return const_cast<UserState&>(user(user_id)); }
    const std::map<int, UserState>& users() const { return users_; }
    std::int64_t round() const { return round_; }

private:
    std::map<int, UserState> users_;
    std::int64_t round_ = 0;
};

} // namespace dosdef
