#include "dosdef/scheduler.hpp"

#include <algorithm>

namespace dosdef {

void SchedulerConfig::validate() const {
    if (parallelism < 1) throw UsageError("SchedulerConfig: parallelism must be >= 1");
    if (gamma <= 0.0) throw UsageError("SchedulerConfig: gamma must be > 0");
    if (mu <= 1.0) throw UsageError("SchedulerConfig: mu must be > 1");
    if (delta <= 0.0 || delta > 1.0) throw UsageError("SchedulerConfig: delta must be in (0, 1]");
    if (initial_score <= 0.0) throw UsageError("SchedulerConfig: initial score must be > 0");
}

void SchedulerState::enqueue(int user_id, QueuedRequest request, double initial_score) {
    auto [it, created] = users_.try_emplace(user_id);
    UserState& u = it->second;
    if (created) {
        u.user_id = user_id;
        u.score = initial_score;
        u.initial_score = initial_score;
    }
    u.queue.push_back(std::move(request));
}

std::vector<int> SchedulerState::select_round(const SchedulerConfig& cfg) const {
    std::vector<const UserState*> candidates;
    for (const auto& [id, u] : users_)
        if (!u.queue.empty()) candidates.push_back(&u);

    std::sort(candidates.begin(), candidates.end(), [](const UserState* a, const UserState* b) {
        if (a->score != b->score) return a->score > b->score;
        if (a->idle_rounds != b->idle_rounds) return a->idle_rounds > b->idle_rounds;
        return a->user_id < b->user_id;
    });

    std::vector<int> out;
    const auto n = static_cast<std::size_t>(cfg.parallelism);
    for (const auto* u : candidates) {
        if (out.size() >= n) break;
        out.push_back(u->user_id);
    }
    return out;
}

QueuedRequest SchedulerState::take_head(int user_id) {
    auto it = users_.find(user_id);
    if (it == users_.end() || it->second.queue.empty())
        throw UsageError("take_head: user has no pending request");
    QueuedRequest r = it->second.queue.front();
    it->second.queue.pop_front();
    return r;
}

void SchedulerState::apply_round_updates(std::span<const int> served,
                                         const std::map<int, RiskVerdict>& verdicts,
                                         const SchedulerConfig& cfg) {
    for (const auto& [uid, verdict] : verdicts)
        if (std::find(served.begin(), served.end(), uid) == served.end())
            throw UsageError("apply_round_updates: verdict for an unserved user");
    for (int uid : served)
        if (!verdicts.contains(uid))
            throw UsageError("apply_round_updates: served user without a verdict");

    const double reward_scale = cfg.gamma_reward.value_or(cfg.gamma);
    for (auto& [uid, u] : users_) {
        const auto vit = verdicts.find(uid);
        if (vit != verdicts.end()) {
            const RiskVerdict& v = vit->second;
            switch (v.action) {
            case ActionClass::MildPenalty:
                u.score -= cfg.gamma;
                break;
            case ActionClass::Reward:
                u.score += reward_scale / v.i_c;
                if (u.score > cfg.mu * u.initial_score) u.score = u.initial_score - cfg.gamma;
                break;
            case ActionClass::DosPenalty:
                u.score -= cfg.gamma * v.i_c;
                break;
            }
            u.idle_rounds = 0;
            u.last_served_round = round_;
        } else {
            u.score = std::min(u.score + cfg.delta * cfg.gamma, u.initial_score);
            u.idle_rounds += 1;
        }
    }
    round_ += 1;
}

bool SchedulerState::has_pending() const {
    for (const auto& [id, u] : users_)
        if (!u.queue.empty()) return true;
    return false;
}

const UserState& SchedulerState::user(int user_id) const {
    auto it = users_.find(user_id);
    if (it == users_.end()) throw UsageError("unknown user");
    return it->second;
}

} // namespace dosdef
