// socsim: command-line front end for the simulator.
//
// Exit codes: 0 success, 1 user or validation error, 2 internal error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "socsim/adversary.hpp"
#include "socsim/detection.hpp"
#include "socsim/experiment.hpp"
#include "socsim/logemit.hpp"
#include "socsim/rng.hpp"
#include "socsim/scenario.hpp"
#include "socsim/selftest.hpp"
#include "socsim/simulation.hpp"
#include "socsim/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Bad input from the user; maps to exit code 1.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string g_command_line;

json manifest(const std::string& command)
{
    return {{"schema", socsim::kManifestSchema},
            {"tool", "socsim"},
            {"version", socsim::kVersion},
            {"command", command},
            {"invocation", g_command_line},
            {"rng", socsim::kRngAlgorithm}};
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

void prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw UserError("cannot create output directory " + dir.string());
}

socsim::ScenarioConfig scenario_or_default(const std::string& path)
{
    return path.empty() ? socsim::default_scenario() : socsim::load_scenario(path);
}

std::vector<socsim::DetectionRule> ruleset_or_default(const std::string& path)
{
    return path.empty() ? socsim::default_ruleset() : socsim::load_ruleset(path);
}

// ---- validate ----

struct ValidateArgs {
    std::string scenario;
};

int cmd_validate(const ValidateArgs& a)
{
    socsim::ScenarioConfig cfg;
    try {
        std::ifstream in(a.scenario);
        if (!in) throw UserError("cannot open " + a.scenario);
        cfg = socsim::scenario_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        std::cerr << "error: " << a.scenario << ": " << e.what() << "\n";
        return 1;
    } catch (const socsim::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    const auto violations = socsim::validate_scenario(cfg);
    for (const auto& v : violations) std::cout << v.code << "\t" << v.path << "\t" << v.message << "\n";
    if (violations.empty()) {
        std::cout << "valid scenario '" << cfg.name << "' fingerprint " << socsim::scenario_fingerprint(cfg) << "\n";
        return 0;
    }
    return 1;
}

// ---- run ----

struct RunArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    std::string chain;
    bool exemplary = false;
    std::string out;
    std::string logging;
    std::optional<double> drop_rate;
    bool no_background = false;
};

int cmd_run(const RunArgs& a)
{
    auto cfg = scenario_or_default(a.scenario);
    if (!a.logging.empty()) cfg.logging = socsim::LoggingConfig::for_profile(socsim::parse_logging_profile(a.logging));
    if (a.drop_rate) cfg.host_profile.drop_rate = *a.drop_rate;
    if (const auto v = socsim::validate_scenario(cfg); !v.empty()) {
        throw UserError("scenario invalid: " + v.front().path + ": " + v.front().message);
    }
    if (a.exemplary == !a.chain.empty()) throw UserError("give exactly one of --chain or --exemplary");
    const auto chain = a.exemplary ? socsim::exemplary_killchain(socsim::scenario_targets(cfg), cfg.attack_idle_seconds)
                                   : socsim::load_chain(a.chain);
    if (const auto problems = socsim::check_chain(chain, cfg); !problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << p << "\n";
        return 1;
    }
    socsim::SimulationOptions opts;
    opts.user_activity = !a.no_background;
    opts.noise = !a.no_background;
    const auto result = socsim::run_simulation(cfg, a.seed, chain, opts);

    const fs::path dir(a.out);
    prepare_dir(dir);
    const auto data = dir / "dataset.jsonl";
    socsim::export_dataset(result.dataset, data);
    write_json(dir / "scenario.json", socsim::scenario_to_json(cfg));
    socsim::save_chain(chain, dir / "chain.json");

    auto m = manifest("run");
    m["seed"] = a.seed;
    m["scenario_fingerprint"] = socsim::scenario_fingerprint(cfg);
    m["dataset_fingerprint"] = result.dataset.fingerprint;
    m["background"] = !a.no_background;
    m["outputs"] = {"dataset.jsonl", "dataset.jsonl.truth.json", "scenario.json", "chain.json"};
    write_json(dir / "manifest.json", m);

    std::cout << "wrote " << result.dataset.events.size() << " events to " << data.string() << " (fingerprint "
              << result.dataset.fingerprint << ")\n";
    return 0;
}

// ---- chain-gen ----

struct ChainGenArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    std::size_t length = 0;
    std::string out;
};

int cmd_chain_gen(const ChainGenArgs& a)
{
    const auto cfg = scenario_or_default(a.scenario);
    const auto g = socsim::scenario_digraph(cfg);
    const auto chain = socsim::generate_chain(g, socsim::derive_stream(a.seed, {"chain"}), a.length,
                                              socsim::scenario_targets(cfg), cfg.attack_idle_seconds);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    socsim::save_chain(chain, out);

    std::vector<socsim::StepName> steps;
    for (const auto& e : chain.entries) steps.push_back(e.step);
    const auto matrix = socsim::tactic_coverage(steps);
    const auto covered = socsim::coverage_union(matrix);

    auto m = manifest("chain-gen");
    m["seed"] = a.seed;
    m["length"] = a.length;
    m["scenario_fingerprint"] = socsim::scenario_fingerprint(cfg);
    m["outputs"] = {out.filename().string()};
    write_json(out.string() + ".manifest.json", m);

    std::cout << "chain of " << chain.entries.size() << " steps written to " << out.string() << "\n";
    for (const auto& e : chain.entries) {
        std::cout << "  +" << e.offset << "s  " << socsim::to_string(e.step) << " @ " << e.target << "\n";
    }
    std::cout << "tactic coverage: " << covered.count() << "/" << socsim::kTacticCount << "\n";
    for (std::size_t t = 0; t < socsim::kTacticCount; ++t) {
        if (covered[t]) std::cout << "  " << socsim::to_string(static_cast<socsim::Tactic>(t)) << "\n";
    }
    return 0;
}

// ---- detect ----

struct DetectArgs {
    std::string dataset;
    std::string ruleset;
    std::string out;
};

int cmd_detect(const DetectArgs& a)
{
    const auto rules = ruleset_or_default(a.ruleset);
    bool has_truth = false;
    const auto ds = socsim::import_dataset(a.dataset, &has_truth);
    const auto alerts = socsim::apply_rules(ds, rules);

    json report{{"dataset_fingerprint", ds.fingerprint}, {"alert_count", alerts.size()}};
    json list = json::array();
    for (const auto& al : alerts) {
        list.push_back({{"rule", al.rule}, {"ts", al.timestamp}, {"host", al.host}, {"event", al.event_index}});
    }
    report["alerts"] = std::move(list);
    report["per_rule"] = socsim::count_by_rule(alerts);

    std::cout << alerts.size() << " alerts\n";
    if (has_truth) {
        const auto counts = socsim::attribute_alerts(alerts, ds.ground_truth, ds.attack_start, ds.run_end);
        json steps = json::array();
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const auto label = socsim::entry_name(ds.ground_truth.entries[i]);
            steps.push_back({{"index", i}, {"label", label}, {"alerts", counts[i]}});
            std::cout << "  (" << i + 1 << ") " << label << ": " << counts[i] << "\n";
        }
        report["steps"] = std::move(steps);
        report["detected_steps"] = socsim::detected_steps(counts);
        std::cout << "detected steps: " << socsim::detected_steps(counts) << "\n";
    } else {
        std::cerr << "warning: no ground-truth sidecar for " << a.dataset << "; attribution skipped\n";
    }

    const fs::path dir(a.out);
    prepare_dir(dir);
    write_json(dir / "alerts.json", report);
    auto m = manifest("detect");
    m["dataset"] = a.dataset;
    m["dataset_fingerprint"] = ds.fingerprint;
    m["ruleset"] = a.ruleset.empty() ? json("built-in") : json(a.ruleset);
    m["ruleset_fingerprint"] = socsim::fnv1a64(socsim::ruleset_to_json(rules).dump());
    m["outputs"] = {"alerts.json"};
    write_json(dir / "manifest.json", m);
    return 0;
}

// ---- experiment ----

struct ExperimentArgs {
    std::string plan;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    unsigned threads = 0;
    bool no_variation = false;
};

int cmd_experiment(const ExperimentArgs& a)
{
    auto plan = a.plan.empty() ? socsim::default_plan() : socsim::load_plan(a.plan);
    if (a.seed) plan.root_seed = *a.seed;
    if (a.iterations) plan.iterations = *a.iterations;
    if (const auto problems = socsim::validate_plan(plan); !problems.empty()) {
        for (const auto& p : problems) std::cerr << "error: " << p << "\n";
        return 1;
    }
    const auto matrix = socsim::run_experiment(plan, a.threads);
    const auto table = socsim::render_table2(matrix);

    const fs::path dir(a.out);
    prepare_dir(dir);
    write_json(dir / "plan.json", socsim::plan_to_json(plan));
    write_json(dir / "results.json", socsim::results_to_json(matrix));
    write_text(dir / "table2.txt", table.text);
    write_json(dir / "table2.json", table.json);
    json outputs = {"plan.json", "results.json", "table2.txt", "table2.json"};
    std::cout << table.text;

    if (!a.no_variation && matrix.profile_names.size() >= 2) {
        const auto report = socsim::variation_report(matrix, plan, a.threads);
        write_json(dir / "variation.json", socsim::variation_to_json(report));
        write_text(dir / "variation.txt", socsim::render_variation(report));
        outputs.push_back("variation.json");
        outputs.push_back("variation.txt");
        std::cout << socsim::render_variation(report);
    }
    auto m = manifest("experiment");
    m["root_seed"] = plan.root_seed;
    m["scenario_fingerprint"] = socsim::scenario_fingerprint(plan.scenario);
    m["plan_fingerprint"] = socsim::fnv1a64(socsim::plan_to_json(plan).dump());
    m["outputs"] = outputs;
    write_json(dir / "manifest.json", m);
    return 0;
}

// ---- selftest ----

struct SelftestArgs {
    std::string scenario;
    std::string ruleset;
    std::string check;
};

int cmd_selftest(const SelftestArgs& a)
{
    const auto cfg = a.scenario.empty() ? socsim::default_scenario() : [&] {
        std::ifstream in(a.scenario);
        if (!in) throw UserError("cannot open " + a.scenario);
        return socsim::scenario_from_json(json::parse(in));
    }();
    socsim::SelfTestOptions opts;
    if (!a.ruleset.empty()) opts.ruleset_path = a.ruleset;
    if (!a.check.empty()) opts.only = a.check;
    const auto report = socsim::run_selftests(cfg, opts);
    for (const auto& c : report.checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
    std::cout << (report.overall ? "selftest passed" : "selftest FAILED") << "\n";
    return report.overall ? 0 : 1;
}

// ---- export ----

struct ExportArgs {
    std::string dataset;
    std::string out;
    bool strip_truth = false;
    std::string builtin;
};

int cmd_export(const ExportArgs& a)
{
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    auto m = manifest("export");
    if (!a.builtin.empty()) {
        if (!a.dataset.empty()) throw UserError("--builtin and --dataset are exclusive");
        if (a.builtin == "scenario") {
            socsim::save_scenario(socsim::default_scenario(), out);
        } else if (a.builtin == "ruleset") {
            socsim::save_ruleset(socsim::default_ruleset(), out);
        } else if (a.builtin == "plan") {
            write_json(out, socsim::plan_to_json(socsim::default_plan()));
        } else {
            socsim::save_chain(
                socsim::exemplary_killchain(socsim::scenario_targets(socsim::default_scenario()), 180), out);
        }
        m["builtin"] = a.builtin;
    } else {
        if (a.dataset.empty()) throw UserError("give --dataset or --builtin");
        bool has_truth = false;
        const auto ds = socsim::import_dataset(a.dataset, &has_truth);
        socsim::export_dataset(ds, out, has_truth && !a.strip_truth);
        m["dataset"] = a.dataset;
        m["dataset_fingerprint"] = ds.fingerprint;
        m["with_truth"] = has_truth && !a.strip_truth;
        std::cout << "exported " << ds.events.size() << " events to " << out.string() << "\n";
    }
    m["outputs"] = {out.filename().string()};
    write_json(out.string() + ".manifest.json", m);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"socsim: seeded simulator of a small company network under multi-step attack"};
    app.require_subcommand(1);
    app.set_version_flag("--version", socsim::kVersion);

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Check a scenario file");
    validate->add_option("--scenario", va.scenario, "Scenario file")->required()->check(CLI::ExistingFile);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "Simulate one run and export its dataset");
    run->add_option("--scenario", ra.scenario, "Scenario file (default: built-in)")->check(CLI::ExistingFile);
    run->add_option("--seed", ra.seed, "Root seed");
    run->add_option("--chain", ra.chain, "Chain file")->check(CLI::ExistingFile);
    run->add_flag("--exemplary", ra.exemplary, "Use the nine-step exemplary kill chain");
    run->add_option("--out", ra.out, "Output directory")->required();
    run->add_option("--logging", ra.logging, "Override logging profile")
        ->check(CLI::IsMember({"Default", "BestPractice"}));
    run->add_option("--drop-rate", ra.drop_rate, "Override the sensor drop rate")->check(CLI::Range(0.0, 1.0));
    run->add_flag("--no-background", ra.no_background, "Skip user activity and noise");

    ChainGenArgs ca;
    auto* chain_gen = app.add_subcommand("chain-gen", "Generate a random valid attack chain");
    chain_gen->add_option("--scenario", ca.scenario, "Scenario file (default: built-in)")->check(CLI::ExistingFile);
    chain_gen->add_option("--seed", ca.seed, "Root seed");
    chain_gen->add_option("--length", ca.length, "Number of steps")->required();
    chain_gen->add_option("--out", ca.out, "Chain file to write")->required();

    DetectArgs da;
    auto* detect = app.add_subcommand("detect", "Apply rules to a dataset");
    detect->add_option("--dataset", da.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
    detect->add_option("--ruleset", da.ruleset, "Ruleset file (default: built-in)")->check(CLI::ExistingFile);
    detect->add_option("--out", da.out, "Output directory")->required();

    ExperimentArgs ea;
    auto* experiment = app.add_subcommand("experiment", "Run the repeated-iteration experiment");
    experiment->add_option("--plan", ea.plan, "Plan file (default: built-in)")->check(CLI::ExistingFile);
    experiment->add_option("--out", ea.out, "Output directory")->required();
    experiment->add_option("--seed", ea.seed, "Override the root seed");
    experiment->add_option("--iterations", ea.iterations, "Override iterations per cell")->check(CLI::PositiveNumber);
    experiment->add_option("--threads", ea.threads, "Worker threads (0 = all cores)");
    experiment->add_flag("--no-variation", ea.no_variation, "Skip the variation analysis");

    SelftestArgs sa;
    auto* selftest = app.add_subcommand("selftest", "Run built-in verification checks");
    selftest->add_option("--scenario", sa.scenario, "Scenario file (default: built-in)")->check(CLI::ExistingFile);
    selftest->add_option("--ruleset", sa.ruleset, "Ruleset file for the logging check");
    selftest->add_option("--check", sa.check, "Run one check")->check(CLI::IsMember(socsim::selftest_names()));

    ExportArgs xa;
    auto* exp = app.add_subcommand("export", "Re-export a dataset or write a built-in config");
    exp->add_option("--dataset", xa.dataset, "Dataset file")->check(CLI::ExistingFile);
    exp->add_option("--out", xa.out, "File to write")->required();
    exp->add_flag("--strip-truth", xa.strip_truth, "Omit the ground-truth sidecar");
    exp->add_option("--builtin", xa.builtin, "Write a built-in config instead")
        ->check(CLI::IsMember({"scenario", "ruleset", "plan", "chain"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*validate) return cmd_validate(va);
        if (*run) return cmd_run(ra);
        if (*chain_gen) return cmd_chain_gen(ca);
        if (*detect) return cmd_detect(da);
        if (*experiment) return cmd_experiment(ea);
        if (*selftest) return cmd_selftest(sa);
        if (*exp) return cmd_export(xa);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const socsim::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const socsim::RulesetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const socsim::DatasetFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const socsim::PrerequisiteError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
