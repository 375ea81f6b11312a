#include "dosdef/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "dosdef/gensim.hpp"
#include "dosdef/rng.hpp"
#include "dosdef/suppression.hpp"

namespace dosdef {

namespace {

struct PendingRequest {
    std::int64_t request_id = 0;
    int user_id = 0;
    bool attacker = false;
    int profile_index = 0;
    double arrival = 0.0;
};

struct Workload {
    std::vector<PendingRequest> requests;    // sorted by (arrival, request id)
    std::vector<GenerationProfile> profiles; // indexed by profile_index
    std::int64_t benign_total = 0;
};

CostModel with_seed(CostModel m, std::uint64_t seed) {
    m.seed = seed;
    return m;
}

// Users and request ids are assigned in group order; arrivals are drawn per
// request and sorted within each user so the per-user FCFS order matches
// arrival order.
Workload build_workload(const ScenarioConfig& sc, std::uint64_t seed) {
    Workload w;
    std::vector<std::string> profile_names;
    for (const auto& [name, p] : sc.profiles) {
        profile_names.push_back(name);
        w.profiles.push_back(p);
    }
    const auto profile_index = [&](const std::string& name) {
        return static_cast<int>(std::find(profile_names.begin(), profile_names.end(), name) -
                                profile_names.begin());
    };

    int user_id = 0;
    std::int64_t request_id = 0;
    for (const auto& g : sc.user_groups) {
        const int pidx = profile_index(g.profile);
        for (int u = 0; u < g.count; ++u) {
            RngStream rng(derive_seed(seed, "arrivals", static_cast<std::uint64_t>(user_id)));
            std::vector<double> arrivals;
            for (int r = 0; r < g.requests_per_user; ++r)
                arrivals.push_back(rng.uniform(g.arrival_lo, g.arrival_hi));
            std::sort(arrivals.begin(), arrivals.end());
            for (double a : arrivals) {
                w.requests.push_back(PendingRequest{request_id++, user_id, g.attacker, pidx, a});
                if (!g.attacker) w.benign_total += 1;
            }
            ++user_id;
        }
    }
    std::sort(w.requests.begin(), w.requests.end(),
              [](const PendingRequest& a, const PendingRequest& b) {
                  if (a.arrival != b.arrival) return a.arrival < b.arrival;
                  return a.request_id < b.request_id;
              });
    return w;
}

// Warmup telemetry comes from a standalone benign calibration set, generated
// ahead of the measured workload and never logged. Warmup ids live in their
// own negative range so their jitter and noise streams cannot collide with
// workload requests.
Classifier warm_classifier(const ScenarioConfig& sc, std::uint64_t seed) {
    Classifier classifier(sc.classifier);
    const CostModel cost_model = with_seed(sc.cost_model, seed);
    std::vector<const GenerationProfile*> mix;
    std::vector<double> cumulative;
    double total = 0.0;
    for (const auto& e : sc.warmup_mix) {
        mix.push_back(&sc.profiles.at(e.profile));
        total += e.weight;
        cumulative.push_back(total);
    }
    RngStream pick(derive_seed(seed, "warmup.pick"));
    for (int i = 0; i < sc.classifier.warmup_requests; ++i) {
        const double r = pick.uniform(0.0, total);
        std::size_t chosen = 0;
        while (chosen + 1 < cumulative.size() && r > cumulative[chosen]) ++chosen;
        const std::int64_t warmup_id = -1000000 - i;
        SimClock clock;
        const auto trace =
            simulate_request(*mix[chosen], warmup_id, seed, clock, sc.suppression.max_output_tokens);
        classifier.observe_warmup(derive_resource_vector(trace, cost_model));
    }
    return classifier;
}

class RoundDriver {
public:
    RoundDriver(const ScenarioConfig& sc, Policy policy, const RunOptions& opt)
        : sc_(sc), policy_(policy), opt_(opt), seed_(opt.seed_override.value_or(sc.seed)),
          workload_(build_workload(sc, seed_)), classifier_(warm_classifier(sc, seed_)),
          cost_model_(with_seed(sc.cost_model, seed_)), supp_cfg_(sc.suppression) {
        refresh_benign_average();
    }

    RunResult run() {
        RunResult result;
        result.scenario = sc_.name;
        result.policy = policy_;
        result.seed = seed_;
        result.polling_disabled = opt_.disable_polling;
        result.suppression_disabled = opt_.disable_suppression;

        std::size_t next_arrival = 0;
        std::int64_t benign_served = 0;

        while (true) {
            // Round boundary: admit everything that has arrived by now.
            // Requests arriving mid-round become visible here, next round.
            while (next_arrival < workload_.requests.size() &&
                   workload_.requests[next_arrival].arrival <= clock_.now()) {
                const auto& r = workload_.requests[next_arrival++];
                sched_.enqueue(r.user_id,
                               QueuedRequest{r.request_id, r.arrival, r.profile_index, r.attacker},
                               sc_.scheduler.initial_score);
            }

            if (sc_.stop_policy == StopPolicy::BenignServed &&
                benign_served == workload_.benign_total)
                break;

            if (!sched_.has_pending()) {
                if (next_arrival >= workload_.requests.size()) break;
                clock_.advance(workload_.requests[next_arrival].arrival - clock_.now());
                continue;
            }

            const auto t_select = std::chrono::steady_clock::now();
            const std::vector<int> served = select_users();
            const auto select_elapsed = std::chrono::steady_clock::now() - t_select;

            struct Completion {
                int user_id;
                QueuedRequest request;
                GenerationTrace trace;
                ResourceVector vec;
                double cap;
                double score_before;
            };
            std::vector<Completion> completions;
            const double round_start = clock_.now();
            double round_end = round_start;

            for (int uid : served) {
                const double score_before = sched_.user(uid).score;
                QueuedRequest req = sched_.take_head(uid);
                const auto& profile = workload_.profiles[req.profile_index];

                double cap = static_cast<double>(supp_cfg_.max_output_tokens);
                std::optional<EosSuppressor> suppressor;
                if (suppression_active()) {
                    cap = output_cap(score_before, sc_.scheduler.initial_score, supp_cfg_);
                    suppressor.emplace(supp_cfg_, cap);
                }

                // Up to n generations run in parallel from the round start;
                // the driver advances the shared clock to the latest finish.
                SimClock local(round_start);
                GenerationTrace trace =
                    simulate_request(profile, req.request_id, seed_, local,
                                     supp_cfg_.max_output_tokens, suppressor ? &*suppressor : nullptr);
                round_end = std::max(round_end, local.now());
                ResourceVector vec = derive_resource_vector(trace, cost_model_);
                completions.push_back(
                    Completion{uid, req, std::move(trace), vec, cap, score_before});
            }

            clock_.advance(round_end - clock_.now());

            // Classification, score updates and reference maintenance happen
            // between rounds; this span is the per-round defense overhead.
            const auto t_update = std::chrono::steady_clock::now();
            std::map<int, RiskVerdict> verdicts;
            for (const auto& c : completions) verdicts[c.user_id] = classifier_.classify(c.vec);

            const std::size_t first_record = result.log.size();
            for (const auto& c : completions) {
                LogRecord rec;
                rec.round = round_;
                rec.user_id = c.user_id;
                rec.request_id = c.request.request_id;
                rec.truth_attack = c.request.truth_attack;
                rec.arrival = c.request.arrival_time;
                rec.start = c.trace.start_time;
                rec.finish = c.trace.end_time;
                rec.input_tokens = c.trace.input_tokens;
                rec.output_tokens = c.trace.output_tokens();
                rec.terminated_by = c.trace.terminated_by;
                rec.verdict = verdicts.at(c.user_id);
                rec.score_before = c.score_before;
                rec.cap = c.cap;
                result.log.push_back(rec);
                if (!c.request.truth_attack) benign_served += 1;
            }

            if (scores_active()) sched_.apply_round_updates(served, verdicts, sc_.scheduler);
            for (const auto& c : completions) classifier_.absorb(c.vec, verdicts.at(c.user_id));
            refresh_benign_average();
            const auto t_done = std::chrono::steady_clock::now();

            for (std::size_t i = first_record; i < result.log.size(); ++i)
                result.log[i].score_after = sched_.user(result.log[i].user_id).score;

            record_overhead(select_elapsed + (t_done - t_update));
            round_ += 1;
        }

        expire_leftovers(result);
        finalize_overhead(result);
        return result;
    }

private:
    bool suppression_active() const { return policy_ == Policy::Ours && !opt_.disable_suppression; }
    bool scores_active() const { return policy_ == Policy::Ours; }

    void refresh_benign_average() {
        supp_cfg_.avg_benign_output = std::min(
            classifier_.avg_benign_output(), static_cast<double>(supp_cfg_.max_output_tokens) / 2.0);
    }

    std::vector<int> select_users() {
        const int n = sc_.scheduler.parallelism;
        if (policy_ == Policy::Fcfs) return select_fcfs(n);
        if (policy_ == Policy::RoundRobin || opt_.disable_polling) return select_rr(n);
        return sched_.select_round(sc_.scheduler);
    }

    // Earliest-arrival pending heads. With n = 1 this is exactly the single
    // global arrival-ordered queue.
    std::vector<int> select_fcfs(int n) {
        struct Head {
            double arrival;
            std::int64_t request_id;
            int user_id;
        };
        std::vector<Head> heads;
        for (const auto& [uid, u] : sched_.users())
            if (!u.queue.empty())
                heads.push_back(Head{u.queue.front().arrival_time, u.queue.front().request_id, uid});
        std::sort(heads.begin(), heads.end(), [](const Head& a, const Head& b) {
            if (a.arrival != b.arrival) return a.arrival < b.arrival;
            return a.request_id < b.request_id;
        });
        std::vector<int> out;
        for (const auto& h : heads) {
            if (static_cast<int>(out.size()) >= n) break;
            out.push_back(h.user_id);
        }
        return out;
    }

    // Fixed cyclic order over user ids, resuming after the last served user.
    std::vector<int> select_rr(int n) {
        std::vector<int> ids;
        for (const auto& [uid, u] : sched_.users())
            if (!u.queue.empty()) ids.push_back(uid);
        if (ids.empty()) return {};
        std::vector<int> out;
        auto it = std::upper_bound(ids.begin(), ids.end(), rr_cursor_);
        while (static_cast<int>(out.size()) < n &&
               out.size() < ids.size()) {
            if (it == ids.end()) it = ids.begin();
            out.push_back(*it);
            rr_cursor_ = *it;
            ++it;
        }
        return out;
    }

    // Whatever is still queued when the run stops is expired, never dropped
    // silently and never duplicated.
    void expire_leftovers(RunResult& result) {
        std::vector<std::int64_t> served_ids;
        served_ids.reserve(result.log.size());
        for (const auto& rec : result.log) served_ids.push_back(rec.request_id);
        std::sort(served_ids.begin(), served_ids.end());
        for (const auto& r : workload_.requests) {
            if (std::binary_search(served_ids.begin(), served_ids.end(), r.request_id)) continue;
            LogRecord rec;
            rec.round = -1;
            rec.user_id = r.user_id;
            rec.request_id = r.request_id;
            rec.truth_attack = r.attacker;
            rec.arrival = r.arrival;
            rec.expired = true;
            result.log.push_back(rec);
        }
    }

    void record_overhead(std::chrono::steady_clock::duration d) {
        const double ms = std::chrono::duration<double, std::milli>(d).count();
        overhead_total_ms_ += ms;
        overhead_max_ms_ = std::max(overhead_max_ms_, ms);
        overhead_rounds_ += 1;
    }

    void finalize_overhead(RunResult& result) {
        result.overhead.rounds = overhead_rounds_;
        result.overhead.max_ms = overhead_max_ms_;
        result.overhead.mean_ms =
            overhead_rounds_ == 0 ? 0.0 : overhead_total_ms_ / static_cast<double>(overhead_rounds_);
    }

    ScenarioConfig sc_;
    Policy policy_;
    RunOptions opt_;
    std::uint64_t seed_;
    Workload workload_;
    Classifier classifier_;
    CostModel cost_model_;
    SuppressionConfig supp_cfg_;
    SchedulerState sched_;
    SimClock clock_;
    std::int64_t round_ = 0;
    int rr_cursor_ = -1;
    double overhead_total_ms_ = 0.0;
    double overhead_max_ms_ = 0.0;
    std::int64_t overhead_rounds_ = 0;
};

} // namespace

RunResult run_policy(const ScenarioConfig& sc, Policy policy, const RunOptions& opt) {
    sc.validate();
    RoundDriver driver(sc, policy, opt);
    return driver.run();
}

std::vector<LogRecord> classify_scenario_telemetry(const ScenarioConfig& sc,
                                                   std::optional<std::uint64_t> seed_override) {
    sc.validate();
    const std::uint64_t seed = seed_override.value_or(sc.seed);
    const Workload workload = build_workload(sc, seed);
    Classifier classifier = warm_classifier(sc, seed);
    const CostModel cost_model = with_seed(sc.cost_model, seed);

    std::vector<LogRecord> out;
    for (const auto& r : workload.requests) {
        SimClock clock(r.arrival);
        const auto trace = simulate_request(workload.profiles[r.profile_index], r.request_id, seed,
                                            clock, sc.suppression.max_output_tokens);
        LogRecord rec;
        rec.user_id = r.user_id;
        rec.request_id = r.request_id;
        rec.truth_attack = r.attacker;
        rec.arrival = r.arrival;
        rec.start = trace.start_time;
        rec.finish = trace.end_time;
        rec.input_tokens = trace.input_tokens;
        rec.output_tokens = trace.output_tokens();
        rec.terminated_by = trace.terminated_by;
        rec.verdict = classifier.classify(derive_resource_vector(trace, cost_model));
        out.push_back(rec);
    }
    return out;
}

namespace {

nlohmann::ordered_json record_to_json(const LogRecord& r) {
    nlohmann::ordered_json j;
    j["round"] = r.round;
    j["user_id"] = r.user_id;
    j["request_id"] = r.request_id;
    j["truth_attack"] = r.truth_attack;
    j["arrival"] = r.arrival;
    j["expired"] = r.expired;
    if (r.expired) return j;
    j["start"] = r.start;
    j["finish"] = r.finish;
    j["input_tokens"] = r.input_tokens;
    j["output_tokens"] = r.output_tokens;
    j["terminated_by"] =
        r.terminated_by ? nlohmann::json(to_string(*r.terminated_by)) : nlohmann::json(nullptr);
    if (r.verdict) {
        j["action"] = to_string(r.verdict->action);
        j["region"] = to_string(r.verdict->region);
        j["i_c"] = r.verdict->i_c;
        j["i_t"] = r.verdict->i_t;
    } else {
        j["action"] = nullptr;
    }
    j["score_before"] = r.score_before;
    j["score_after"] = r.score_after;
    j["cap"] = r.cap;
    return j;
}

LogRecord record_from_json(const nlohmann::json& j) {
    LogRecord r;
    r.round = j.at("round").get<std::int64_t>();
    r.user_id = j.at("user_id").get<int>();
    r.request_id = j.at("request_id").get<std::int64_t>();
    r.truth_attack = j.at("truth_attack").get<bool>();
    r.arrival = j.at("arrival").get<double>();
    r.expired = j.at("expired").get<bool>();
    if (r.expired) return r;
    r.start = j.at("start").get<double>();
    r.finish = j.at("finish").get<double>();
    r.input_tokens = j.at("input_tokens").get<std::int64_t>();
    r.output_tokens = j.at("output_tokens").get<std::int64_t>();
    if (!j.at("terminated_by").is_null())
        r.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
    if (j.contains("action") && !j.at("action").is_null()) {
        RiskVerdict v;
        v.action = action_from_string(j.at("action").get<std::string>()).value();
        v.region = region_from_string(j.at("region").get<std::string>()).value();
        v.i_c = j.at("i_c").get<double>();
        v.i_t = j.at("i_t").get<double>();
        r.verdict = v;
    }
    r.score_before = j.value("score_before", 0.0);
    r.score_after = j.value("score_after", 0.0);
    r.cap = j.value("cap", 0.0);
    return r;
}

} // namespace

std::string log_to_jsonl(const RunResult& result) {
    std::ostringstream out;
    nlohmann::ordered_json header;
    header["scenario"] = result.scenario;
    header["policy"] = to_string(result.policy);
    header["seed"] = result.seed;
    header["polling_disabled"] = result.polling_disabled;
    header["suppression_disabled"] = result.suppression_disabled;
    header["overhead_mean_ms"] = result.overhead.mean_ms;
    header["overhead_max_ms"] = result.overhead.max_ms;
    header["rounds"] = result.overhead.rounds;
    out << header.dump() << '\n';
    for (const auto& r : result.log) out << record_to_json(r).dump() << '\n';
    return out.str();
}

RunResult log_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty execution log");
    const auto header = nlohmann::json::parse(line);
    RunResult result;
    result.scenario = header.at("scenario").get<std::string>();
    result.policy = policy_from_string(header.at("policy").get<std::string>()).value();
    result.seed = header.at("seed").get<std::uint64_t>();
    result.polling_disabled = header.value("polling_disabled", false);
    result.suppression_disabled = header.value("suppression_disabled", false);
    result.overhead.mean_ms = header.value("overhead_mean_ms", 0.0);
    result.overhead.max_ms = header.value("overhead_max_ms", 0.0);
    result.overhead.rounds = header.value("rounds", std::int64_t{0});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        result.log.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return result;
}

const char* to_string(Policy p) {
    switch (p) {
    case Policy::Ours: return "ours";
    case Policy::Fcfs: return "fcfs";
    case Policy::RoundRobin: return "rr";
    }
    return "?";
}

std::optional<Policy> policy_from_string(const std::string& s) {
    if (s == "ours") return Policy::Ours;
    if (s == "fcfs") return Policy::Fcfs;
    if (s == "rr") return Policy::RoundRobin;
    return std::nullopt;
}

} // namespace dosdef
