#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dosdef/resource_index.hpp"
#include "dosdef/scenario.hpp"

namespace dosdef {

enum class Policy { Ours, Fcfs, RoundRobin };

// One line of the execution log: a served request, or an expired one.
struct LogRecord {
    std::int64_t round = 0;
    int user_id = 0;
    std::int64_t request_id = 0;
    bool truth_attack = false;
    double arrival = 0.0;
    double start = 0.0;
    double finish = 0.0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::optional<TerminationReason> terminated_by;
    std::optional<RiskVerdict> verdict;
    double score_before = 0.0;
    double score_after = 0.0;
    double cap = 0.0;
    bool expired = false;
};

struct OverheadStats {
    double mean_ms = 0.0;
    double max_ms = 0.0;
    std::int64_t rounds = 0;
};

struct RunResult {
    std::string scenario;
    Policy policy = Policy::Ours;
    std::uint64_t seed = 0;
    bool polling_disabled = false;
    bool suppression_disabled = false;
    std::vector<LogRecord> log;
    OverheadStats overhead;
};

struct RunOptions {
    // Replaces top-n selection with round-robin cycling; scores keep updating.
    bool disable_polling = false;
    // Replaces the EOS correction with the identity hook.
    bool disable_suppression = false;
    std::optional<std::uint64_t> seed_override;
};

// Runs the scenario end to end under one policy. All policies share the
// synthetic backend and clock; only Ours applies score updates and output
// caps. Per-request telemetry is keyed by request id, so the same request
// produces the same unsuppressed trace under every policy.
RunResult run_policy(const ScenarioConfig& sc, Policy policy, const RunOptions& opt = {});

// Classifies the scenario's requests on their unsuppressed telemetry, outside
// any scheduling loop: warm up, simulate each generation standalone, classify.
// This is how detection quality is measured.
std::vector<LogRecord> classify_scenario_telemetry(const ScenarioConfig& sc,
                                                   std::optional<std::uint64_t> seed_override = {});

std::string log_to_jsonl(const RunResult& result);
RunResult log_from_jsonl(const std::string& text);

const char* to_string(Policy p);
std::optional<Policy> policy_from_string(const std::string& s);

} // namespace dosdef
