#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dosdef/gensim.hpp"
#include "dosdef/resource_index.hpp"
#include "dosdef/scheduler.hpp"
#include "dosdef/suppression.hpp"
#include "dosdef/telemetry.hpp"

namespace dosdef {

// When to end a run. BenignServed stops scheduling once every benign request
// has completed; whatever is still queued is expired and logged as such.
enum class StopPolicy { AllServed, BenignServed };

struct UserGroup {
    bool attacker = false;
    int count = 0;
    int requests_per_user = 0;
    std::string profile;
    double arrival_lo = 0.0;
    double arrival_hi = 0.0;
};

struct WarmupMixEntry {
    std::string profile;
    double weight = 1.0;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::string name = "scenario";
    std::uint64_t seed = 42;
    StopPolicy stop_policy = StopPolicy::AllServed;
    CostModel cost_model;
    ClassifierConfig classifier;
    SchedulerConfig scheduler;
    SuppressionConfig suppression;
    std::map<std::string, GenerationProfile> profiles;
    std::vector<WarmupMixEntry> warmup_mix;
    std::vector<UserGroup> user_groups;

    // Throws ValidationError with a JSON pointer to the offending field.
    void validate() const;

    int total_users() const;
    int total_requests() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& sc);

// Reads a scenario file, or a built-in preset when the argument is
// "preset:<name>" (default-attack, benign-only, high-attack).
ScenarioConfig load_scenario(const std::string& path_or_preset);

// The standard workload: 10 benign users and 2 attackers, five requests each,
// n = 1, 4096-token hard cap.
ScenarioConfig make_default_attack_scenario(std::uint64_t seed = 42);
// Same population without the attackers.
ScenarioConfig make_benign_only_scenario(std::uint64_t seed = 42);
// 2 of 5 users malicious; used by the ablation studies.
ScenarioConfig make_high_attack_scenario(std::uint64_t seed = 42);

const char* to_string(StopPolicy p);

} // namespace dosdef
