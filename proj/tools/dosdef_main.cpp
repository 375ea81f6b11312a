// dosdef: run resource-consumption attack scenarios against a token-generation
// service simulator and compare scheduling/suppression policies.
//
//   dosdef run     --scenario preset:default-attack --policy ours --out out/
//   dosdef compare --scenario preset:default-attack --out out/
//   dosdef ablate  --scenario preset:high-attack --disable polling --out out/
//   dosdef replay  --log out/execution_log_ours.jsonl
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"

#include "dosdef/engine.hpp"
#include "dosdef/metrics.hpp"
#include "dosdef/scenario.hpp"

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dosdef::IoError("cannot write " + path.string());
    out << content;
}

void print_summary(const dosdef::MetricsReport& r) {
    std::cout << "scenario " << r.scenario << "  policy " << r.policy << "  seed " << r.seed << "\n"
              << "  TT  " << r.service.tt_seconds << " s\n"
              << "  OT  " << r.service.ot_per_min << " req/min\n"
              << "  BUT " << r.service.but_per_min << " req/min\n"
              << "  served " << r.service.served << " (benign " << r.service.benign_served
              << ", attack " << r.service.attack_served << "), expired " << r.service.expired
              << "\n";
    if (r.detection.tp + r.detection.fn > 0) {
        std::cout << "  detection tp/fp/tn/fn " << r.detection.tp << "/" << r.detection.fp << "/"
                  << r.detection.tn << "/" << r.detection.fn;
        if (r.detection.precision) std::cout << "  precision " << *r.detection.precision;
        if (r.detection.recall) std::cout << "  recall " << *r.detection.recall;
        if (r.detection.f1) std::cout << "  f1 " << *r.detection.f1;
        std::cout << "\n";
    }
    std::cout << "  overhead/round mean " << r.overhead.mean_ms << " ms, max " << r.overhead.max_ms
              << " ms over " << r.overhead.rounds << " rounds\n";
}

struct CommonArgs {
    std::string scenario;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

dosdef::ScenarioConfig load(const CommonArgs& args) {
    auto sc = dosdef::load_scenario(args.scenario);
    if (args.seed_set) sc.seed = args.seed;
    return sc;
}

int cmd_run(const CommonArgs& args, const std::string& policy_name) {
    const auto policy = dosdef::policy_from_string(policy_name);
    if (!policy) throw dosdef::UsageError("unknown policy: " + policy_name);
    const auto sc = load(args);

    const auto result = dosdef::run_policy(sc, *policy);
    const auto report = dosdef::report_for(result);

    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / ("execution_log_" + policy_name + ".jsonl"),
               dosdef::log_to_jsonl(result));
    const std::vector<dosdef::MetricsReport> rows{report};
    write_file(fs::path(args.out_dir) / "report.csv", dosdef::reports_to_csv(rows));
    print_summary(report);
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const auto sc = load(args);

    const auto ours = dosdef::run_policy(sc, dosdef::Policy::Ours);
    const auto fcfs = dosdef::run_policy(sc, dosdef::Policy::Fcfs);
    const auto rr = dosdef::run_policy(sc, dosdef::Policy::RoundRobin);
    const auto cmp = dosdef::compare_reports(dosdef::report_for(ours), dosdef::report_for(fcfs),
                                             dosdef::report_for(rr));

    fs::create_directories(args.out_dir);
    for (const auto* result : {&ours, &fcfs, &rr})
        write_file(fs::path(args.out_dir) /
                       ("execution_log_" + std::string(dosdef::to_string(result->policy)) + ".jsonl"),
                   dosdef::log_to_jsonl(*result));
    write_file(fs::path(args.out_dir) / "compare.csv", dosdef::comparison_to_csv(cmp));
    for (const auto& row : cmp.rows) print_summary(row);
    std::cout << "  BUT ours/rr   " << cmp.but_ours_over_rr << "\n"
              << "  BUT ours/fcfs " << cmp.but_ours_over_fcfs << "\n"
              << "  TT  ours/fcfs " << cmp.tt_ours_over_fcfs << "\n";
    return 0;
}

int cmd_ablate(const CommonArgs& args, const std::vector<std::string>& disable) {
    dosdef::RunOptions opt;
    for (const auto& d : disable) {
        if (d == "polling")
            opt.disable_polling = true;
        else if (d == "suppression")
            opt.disable_suppression = true;
        else
            throw dosdef::UsageError("unknown component: " + d + " (expected polling or suppression)");
    }
    const auto sc = load(args);

    const auto full = dosdef::run_policy(sc, dosdef::Policy::Ours);
    const auto ablated = dosdef::run_policy(sc, dosdef::Policy::Ours, opt);
    std::vector<dosdef::MetricsReport> rows{dosdef::report_for(full), dosdef::report_for(ablated)};

    fs::create_directories(args.out_dir);
    write_file(fs::path(args.out_dir) / "execution_log_ours.jsonl", dosdef::log_to_jsonl(full));
    write_file(fs::path(args.out_dir) / "execution_log_ablated.jsonl", dosdef::log_to_jsonl(ablated));
    write_file(fs::path(args.out_dir) / "ablation.csv", dosdef::reports_to_csv(rows));

    for (const auto& row : rows) print_summary(row);
    std::cout << "  BUT ablated/full " << rows[1].service.but_per_min / rows[0].service.but_per_min
              << "\n"
              << "  TT  ablated/full " << rows[1].service.tt_seconds / rows[0].service.tt_seconds
              << "\n";
    return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out_dir) {
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw dosdef::IoError("cannot open log: " + log_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto result = dosdef::log_from_jsonl(text);
    const auto report = dosdef::report_for(result);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const std::vector<dosdef::MetricsReport> rows{report};
        write_file(fs::path(out_dir) / "report.csv", dosdef::reports_to_csv(rows));
    }
    print_summary(report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DoS-defense engine and workload simulator for token-generation services"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string policy = "ours";
    std::vector<std::string> disable;
    std::string log_path;

    auto add_common = [&](CLI::App* cmd, bool scenario_required = true) {
        auto* s = cmd->add_option("--scenario", args.scenario,
                                  "Scenario file, or preset:<default-attack|benign-only|high-attack>")
                      ->envname("DOSDEF_SCENARIO");
        if (scenario_required) s->required();
        cmd->add_option("--out", args.out_dir, "Output directory")->envname("DOSDEF_OUT");
        cmd->add_option("--seed", args.seed, "Seed override")
            ->envname("DOSDEF_SEED")
            ->each([&](const std::string&) { args.seed_set = true; });
    };

    auto* run = app.add_subcommand("run", "Run one scenario under one policy");
    add_common(run);
    run->add_option("--policy", policy, "ours | fcfs | rr")->envname("DOSDEF_POLICY");

    auto* compare = app.add_subcommand("compare", "Run ours vs fcfs vs rr on the same seed");
    add_common(compare);

    auto* ablate = app.add_subcommand("ablate", "Rerun ours with a component disabled");
    add_common(ablate);
    ablate->add_option("--disable", disable, "polling and/or suppression")->required();

    auto* replay = app.add_subcommand("replay", "Recompute metrics from an execution log");
    replay->add_option("--log", log_path, "Execution log (JSONL)")->required();
    replay->add_option("--out", args.out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(args, policy);
        if (compare->parsed()) return cmd_compare(args);
        if (ablate->parsed()) return cmd_ablate(args, disable);
        if (replay->parsed()) return cmd_replay(log_path, args.out_dir);
    } catch (const dosdef::ValidationError& e) {
        std::cerr << "validation error at " << e.pointer() << ": " << e.what() << "\n";
        return 1;
    } catch (const dosdef::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
