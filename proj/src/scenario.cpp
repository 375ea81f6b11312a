#include "dosdef/scenario.hpp"

#include <fstream>
#include <sstream>

namespace dosdef {

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& msg) {
    throw ValidationError(pointer, msg);
}

template <typename T>
T require(const nlohmann::json& j, const std::string& pointer) {
    const auto ptr = nlohmann::json::json_pointer(pointer);
    if (!j.contains(ptr)) fail(pointer, "missing required field");
    try {
        return j.at(ptr).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(pointer, "wrong type");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& pointer, T fallback) {
    const auto ptr = nlohmann::json::json_pointer(pointer);
    if (!j.contains(ptr)) return fallback;
    try {
        return j.at(ptr).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(pointer, "wrong type");
    }
}

} // namespace

void ScenarioConfig::validate() const {
    if (schema_version != 1) fail("/schema_version", "unsupported schema version");
    if (user_groups.empty()) fail("/user_groups", "at least one user group is required");
    if (classifier.warmup_requests < 4) fail("/classifier/warmup_requests", "must be >= 4");
    if (warmup_mix.empty()) fail("/warmup_mix", "at least one warmup profile is required");

    try {
        scheduler.validate();
    } catch (const UsageError& e) {
        fail("/scheduler", e.what());
    }
    try {
        SuppressionConfig s = suppression;
        s.validate();
    } catch (const UsageError& e) {
        fail("/suppression", e.what());
    }

    int users = 0;
    for (std::size_t i = 0; i < user_groups.size(); ++i) {
        const auto& g = user_groups[i];
        const std::string base = "/user_groups/" + std::to_string(i);
        if (g.count < 0) fail(base + "/count", "must be >= 0");
        if (g.requests_per_user < 0) fail(base + "/requests_per_user", "must be >= 0");
        if (!profiles.contains(g.profile)) fail(base + "/profile", "unknown profile '" + g.profile + "'");
        if (g.arrival_hi < g.arrival_lo) fail(base + "/arrival_window", "window end before start");
        users += g.count;
    }
    if (users < 1) fail("/user_groups", "at least one user is required");

    for (std::size_t i = 0; i < warmup_mix.size(); ++i) {
        const std::string base = "/warmup_mix/" + std::to_string(i);
        if (!profiles.contains(warmup_mix[i].profile))
            fail(base + "/profile", "unknown profile '" + warmup_mix[i].profile + "'");
        if (warmup_mix[i].weight <= 0.0) fail(base + "/weight", "must be > 0");
        if (profiles.at(warmup_mix[i].profile).kind == ProfileKind::AttackLongOutput)
            fail(base + "/profile", "warmup set must be benign");
    }

    for (const auto& [name, p] : profiles) {
        try {
            p.validate(suppression.max_output_tokens);
        } catch (const UsageError& e) {
            fail("/profiles/" + name, e.what());
        }
    }
}

int ScenarioConfig::total_users() const {
    int n = 0;
    for (const auto& g : user_groups) n += g.count;
    return n;
}

int ScenarioConfig::total_requests() const {
    int n = 0;
    for (const auto& g : user_groups) n += g.count * g.requests_per_user;
    return n;
}

namespace {

GenerationProfile profile_from_json(const nlohmann::json& j, const std::string& base) {
    GenerationProfile p;
    const auto kind = require<std::string>(j, base + "/kind");
    const auto parsed = profile_kind_from_string(kind);
    if (!parsed) fail(base + "/kind", "unknown profile kind '" + kind + "'");
    p.kind = *parsed;
    p.target_length = get_or<std::int64_t>(j, base + "/target_length", p.target_length);
    p.input_length = require<std::int64_t>(j, base + "/input_length");
    p.length_jitter_frac = get_or<double>(j, base + "/length_jitter_frac", p.length_jitter_frac);
    p.input_jitter_frac = get_or<double>(j, base + "/input_jitter_frac", p.input_jitter_frac);
    p.top_logit_level = get_or<double>(j, base + "/top_logit", p.top_logit_level);
    p.eos_baseline = get_or<double>(j, base + "/eos_baseline", p.eos_baseline);
    p.eos_ramp_slope = get_or<double>(j, base + "/eos_ramp_slope", p.eos_ramp_slope);
    p.eos_ramp_window = get_or<std::int64_t>(j, base + "/eos_ramp_window", p.eos_ramp_window);
    p.per_token_latency = get_or<double>(j, base + "/per_token_latency", p.per_token_latency);
    if (j.contains(nlohmann::json::json_pointer(base + "/repeat_after")) &&
        !j.at(nlohmann::json::json_pointer(base + "/repeat_after")).is_null())
        p.repeat_after = require<std::int64_t>(j, base + "/repeat_after");
    return p;
}

nlohmann::ordered_json profile_to_json(const GenerationProfile& p) {
    nlohmann::ordered_json j{
        {"kind", to_string(p.kind)},
        {"target_length", p.target_length},
        {"input_length", p.input_length},
        {"length_jitter_frac", p.length_jitter_frac},
        {"input_jitter_frac", p.input_jitter_frac},
        {"top_logit", p.top_logit_level},
        {"eos_baseline", p.eos_baseline},
        {"eos_ramp_slope", p.eos_ramp_slope},
        {"eos_ramp_window", p.eos_ramp_window},
        {"per_token_latency", p.per_token_latency},
    };
    j["repeat_after"] = p.repeat_after.has_value() ? nlohmann::json(*p.repeat_after)
                                                   : nlohmann::json(nullptr);
    return j;
}

} // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig sc;
    sc.schema_version = require<int>(j, "/schema_version");
    sc.name = get_or<std::string>(j, "/name", "scenario");
    sc.seed = get_or<std::uint64_t>(j, "/seed", 42);

    const auto stop = get_or<std::string>(j, "/stop_policy", "all_served");
    if (stop == "all_served")
        sc.stop_policy = StopPolicy::AllServed;
    else if (stop == "benign_served")
        sc.stop_policy = StopPolicy::BenignServed;
    else
        fail("/stop_policy", "expected all_served or benign_served");

    sc.cost_model.base_memory_gb = get_or<double>(j, "/cost_model/base_memory_gb", 2.0);
    sc.cost_model.memory_per_token_gb = get_or<double>(j, "/cost_model/memory_per_token_gb", 0.001);
    sc.cost_model.base_util_pct = get_or<double>(j, "/cost_model/base_util_pct", 25.0);
    sc.cost_model.util_per_token_pct = get_or<double>(j, "/cost_model/util_per_token_pct", 0.01);
    sc.cost_model.noise_sigma = get_or<double>(j, "/cost_model/noise_sigma", 0.05);

    sc.classifier.clusters = get_or<int>(j, "/classifier/clusters", 2);
    sc.classifier.lambda = get_or<double>(j, "/classifier/lambda", 1.5);
    sc.classifier.ema_beta = get_or<double>(j, "/classifier/ema_beta", 0.1);
    sc.classifier.warmup_requests = get_or<int>(j, "/classifier/warmup_requests", 40);
    sc.classifier.two_sided = get_or<bool>(j, "/classifier/two_sided", true);
    sc.classifier.normalize_consumption = get_or<bool>(j, "/classifier/normalize_consumption", false);
    if (j.contains(nlohmann::json::json_pointer("/classifier/region_tendency_low")))
        sc.classifier.region_tendency_low = require<double>(j, "/classifier/region_tendency_low");
    if (j.contains(nlohmann::json::json_pointer("/classifier/region_tendency_high")))
        sc.classifier.region_tendency_high = require<double>(j, "/classifier/region_tendency_high");

    sc.scheduler.parallelism = get_or<int>(j, "/scheduler/parallelism", 1);
    sc.scheduler.gamma = get_or<double>(j, "/scheduler/gamma", 1.0);
    sc.scheduler.mu = get_or<double>(j, "/scheduler/mu", 2.0);
    sc.scheduler.delta = get_or<double>(j, "/scheduler/delta", 0.5);
    sc.scheduler.initial_score = get_or<double>(j, "/scheduler/initial_score", 100.0);
    if (j.contains(nlohmann::json::json_pointer("/scheduler/gamma_reward")))
        sc.scheduler.gamma_reward = require<double>(j, "/scheduler/gamma_reward");

    sc.suppression.max_output_tokens = get_or<std::int64_t>(j, "/suppression/max_output_tokens", 4096);
    sc.suppression.eta = get_or<double>(j, "/suppression/eta", 0.125);
    sc.suppression.gamma_supp = get_or<double>(j, "/suppression/gamma_supp", 1.0);
    sc.suppression.avg_benign_output = get_or<double>(j, "/suppression/avg_benign_output", 100.0);
    sc.suppression.clamp_nonnegative_delta2 =
        get_or<bool>(j, "/suppression/clamp_nonnegative_delta2", false);

    if (!j.contains("profiles") || !j.at("profiles").is_object())
        fail("/profiles", "missing profile table");
    for (const auto& [name, pj] : j.at("profiles").items()) {
        (void)pj;
        sc.profiles[name] = profile_from_json(j, "/profiles/" + name);
    }

    if (!j.contains("warmup_mix") || !j.at("warmup_mix").is_array())
        fail("/warmup_mix", "missing warmup mix");
    for (std::size_t i = 0; i < j.at("warmup_mix").size(); ++i) {
        const std::string base = "/warmup_mix/" + std::to_string(i);
        WarmupMixEntry e;
        e.profile = require<std::string>(j, base + "/profile");
        e.weight = get_or<double>(j, base + "/weight", 1.0);
        sc.warmup_mix.push_back(e);
    }

    if (!j.contains("user_groups") || !j.at("user_groups").is_array())
        fail("/user_groups", "missing user groups");
    for (std::size_t i = 0; i < j.at("user_groups").size(); ++i) {
        const std::string base = "/user_groups/" + std::to_string(i);
        UserGroup g;
        const auto cls = require<std::string>(j, base + "/class");
        if (cls == "benign")
            g.attacker = false;
        else if (cls == "attacker")
            g.attacker = true;
        else
            fail(base + "/class", "expected benign or attacker");
        g.count = require<int>(j, base + "/count");
        g.requests_per_user = require<int>(j, base + "/requests_per_user");
        g.profile = require<std::string>(j, base + "/profile");
        const auto ptr = nlohmann::json::json_pointer(base + "/arrival_window");
        if (!j.contains(ptr) || !j.at(ptr).is_array() || j.at(ptr).size() != 2)
            fail(base + "/arrival_window", "expected [start, end]");
        g.arrival_lo = require<double>(j, base + "/arrival_window/0");
        g.arrival_hi = require<double>(j, base + "/arrival_window/1");
        sc.user_groups.push_back(g);
    }

    sc.validate();
    return sc;
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& sc) {
    nlohmann::ordered_json j;
    j["schema_version"] = sc.schema_version;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["stop_policy"] = to_string(sc.stop_policy);
    j["cost_model"] = {{"base_memory_gb", sc.cost_model.base_memory_gb},
                       {"memory_per_token_gb", sc.cost_model.memory_per_token_gb},
                       {"base_util_pct", sc.cost_model.base_util_pct},
                       {"util_per_token_pct", sc.cost_model.util_per_token_pct},
                       {"noise_sigma", sc.cost_model.noise_sigma}};
    j["classifier"] = {{"clusters", sc.classifier.clusters},
                       {"lambda", sc.classifier.lambda},
                       {"ema_beta", sc.classifier.ema_beta},
                       {"warmup_requests", sc.classifier.warmup_requests},
                       {"two_sided", sc.classifier.two_sided},
                       {"normalize_consumption", sc.classifier.normalize_consumption}};
    if (sc.classifier.region_tendency_low)
        j["classifier"]["region_tendency_low"] = *sc.classifier.region_tendency_low;
    if (sc.classifier.region_tendency_high)
        j["classifier"]["region_tendency_high"] = *sc.classifier.region_tendency_high;
    j["scheduler"] = {{"parallelism", sc.scheduler.parallelism},
                      {"gamma", sc.scheduler.gamma},
                      {"mu", sc.scheduler.mu},
                      {"delta", sc.scheduler.delta},
                      {"initial_score", sc.scheduler.initial_score}};
    if (sc.scheduler.gamma_reward) j["scheduler"]["gamma_reward"] = *sc.scheduler.gamma_reward;
    j["suppression"] = {{"max_output_tokens", sc.suppression.max_output_tokens},
                        {"eta", sc.suppression.eta},
                        {"gamma_supp", sc.suppression.gamma_supp},
                        {"avg_benign_output", sc.suppression.avg_benign_output},
                        {"clamp_nonnegative_delta2", sc.suppression.clamp_nonnegative_delta2}};
    auto profiles = nlohmann::ordered_json::object();
    for (const auto& [name, p] : sc.profiles) profiles[name] = profile_to_json(p);
    j["profiles"] = profiles;
    auto mix = nlohmann::ordered_json::array();
    for (const auto& e : sc.warmup_mix)
        mix.push_back({{"profile", e.profile}, {"weight", e.weight}});
    j["warmup_mix"] = mix;
    auto groups = nlohmann::ordered_json::array();
    for (const auto& g : sc.user_groups) {
        groups.push_back({{"class", g.attacker ? "attacker" : "benign"},
                          {"count", g.count},
                          {"requests_per_user", g.requests_per_user},
                          {"profile", g.profile},
                          {"arrival_window", {g.arrival_lo, g.arrival_hi}}});
    }
    j["user_groups"] = groups;
    return j;
}

namespace {

std::map<std::string, GenerationProfile> standard_profiles() {
    GenerationProfile benign_short;
    benign_short.kind = ProfileKind::BenignShort;
    benign_short.target_length = 100;
    benign_short.input_length = 80;
    benign_short.length_jitter_frac = 0.1;
    benign_short.input_jitter_frac = 0.05;
    benign_short.per_token_latency = 0.01;

    GenerationProfile benign_long;
    benign_long.kind = ProfileKind::BenignLongContext;
    benign_long.target_length = 300;
    benign_long.input_length = 4000;
    benign_long.length_jitter_frac = 0.1;
    benign_long.input_jitter_frac = 0.05;
    benign_long.per_token_latency = 0.012;

    GenerationProfile attack;
    attack.kind = ProfileKind::AttackLongOutput;
    attack.target_length = 0;
    attack.input_length = 120;
    attack.length_jitter_frac = 0.0;
    attack.input_jitter_frac = 0.2;
    attack.repeat_after = 64;
    attack.per_token_latency = 0.01;

    return {{"benign_short", benign_short}, {"benign_long", benign_long}, {"attack_long", attack}};
}

ScenarioConfig base_scenario(std::uint64_t seed) {
    ScenarioConfig sc;
    sc.seed = seed;
    // Wide fences and frozen references: the synthetic benign clusters are
    // tight, so the classic 1.5 multiplier would hug their quartiles closely
    // enough for ordinary jitter to read as anomalous.
    sc.classifier.lambda = 5.0;
    sc.classifier.ema_beta = 0.0;
    sc.profiles = standard_profiles();
    sc.warmup_mix = {{"benign_short", 0.6}, {"benign_long", 0.4}};
    return sc;
}

} // namespace

ScenarioConfig make_default_attack_scenario(std::uint64_t seed) {
    ScenarioConfig sc = base_scenario(seed);
    sc.name = "default-attack";
    sc.stop_policy = StopPolicy::BenignServed;
    sc.user_groups = {
        UserGroup{false, 7, 5, "benign_short", 0.0, 2.0},
        UserGroup{false, 3, 5, "benign_long", 0.0, 2.0},
        UserGroup{true, 2, 5, "attack_long", 1.5, 1.7},
    };
    sc.validate();
    return sc;
}

ScenarioConfig make_benign_only_scenario(std::uint64_t seed) {
    ScenarioConfig sc = base_scenario(seed);
    sc.name = "benign-only";
    sc.stop_policy = StopPolicy::AllServed;
    sc.user_groups = {
        UserGroup{false, 7, 5, "benign_short", 0.0, 2.0},
        UserGroup{false, 3, 5, "benign_long", 0.0, 2.0},
    };
    sc.validate();
    return sc;
}

ScenarioConfig make_high_attack_scenario(std::uint64_t seed) {
    ScenarioConfig sc = base_scenario(seed);
    sc.name = "high-attack";
    sc.stop_policy = StopPolicy::BenignServed;
    sc.user_groups = {
        UserGroup{false, 2, 5, "benign_short", 0.0, 2.0},
        UserGroup{false, 1, 5, "benign_long", 0.0, 2.0},
        UserGroup{true, 2, 5, "attack_long", 1.5, 1.7},
    };
    sc.validate();
    return sc;
}

ScenarioConfig load_scenario(const std::string& path_or_preset) {
    if (path_or_preset.starts_with("preset:")) {
        const std::string name = path_or_preset.substr(7);
        if (name == "default-attack") return make_default_attack_scenario();
        if (name == "benign-only") return make_benign_only_scenario();
        if (name == "high-attack") return make_high_attack_scenario();
        throw ValidationError("/", "unknown preset '" + name + "'");
    }
    std::ifstream in(path_or_preset);
    if (!in) throw IoError("cannot open scenario file: " + path_or_preset);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("/", std::string("invalid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

const char* to_string(StopPolicy p) {
    return p == StopPolicy::AllServed ? "all_served" : "benign_served";
}

} // namespace dosdef
