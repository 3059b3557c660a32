// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. `acceptance N` runs criterion N alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "socsim/adversary.hpp"
#include "socsim/detection.hpp"
#include "socsim/experiment.hpp"
#include "socsim/logemit.hpp"
#include "socsim/selftest.hpp"
#include "socsim/simulation.hpp"
#include "socsim/stats.hpp"

using namespace socsim;

namespace {

// ---- pinned thresholds ----
constexpr double kMaxRuntimeSeconds = 60.0;     // criterion 1
constexpr int kDeterminismSeeds = 3;            // criterion 3
constexpr int kSoundnessChains = 1000;          // criterion 4
constexpr int kEnumerationSeeds = 100000;       // criterion 4
constexpr double kStatTolerance = 1e-9;         // criterion 5
constexpr int kRandomPairs = 20;                // criterion 5
constexpr int kPowerRepetitions = 20;           // criterion 6
constexpr double kMinRejectRate = 0.95;         // criterion 6
constexpr int kNullRepetitions = 100;           // criterion 6
constexpr double kMaxFalseRejectRate = 0.10;    // criterion 6
constexpr int kNoiseRuns = 50;                  // criterion 7
constexpr double kNoiseRelTolerance = 0.05;     // criterion 7
constexpr int kPairedRuns = 10;                 // criterion 8

const std::string kSchemaRule = "ET WEB_SERVER ATTACKER SQLi - SELECT and Schema Columns";
const std::string kBindRule = "ET TROJAN Possible Metasploit Payload Common Construct Bind_API (from server)";

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string fmt(const char* f, double a, double b = 0, double c = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const ScenarioConfig& scenario()
{
    static const ScenarioConfig c = default_scenario();
    return c;
}

const AttackChain& exemplary()
{
    static const AttackChain c = exemplary_killchain(scenario_targets(scenario()));
    return c;
}

// 1. Detected steps: 4 under Default and 6 under BestPractice in all 40 runs.
Outcome detected_steps_reproduction()
{
    const auto start = std::chrono::steady_clock::now();
    const auto plan = default_plan();
    const auto m = run_experiment(plan, 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (m.results.size() != 40) return fail(std::to_string(m.results.size()) + " runs instead of 40");

    for (std::size_t p = 0; p < m.profile_names.size(); ++p) {
        for (std::size_t l = 0; l < m.logging.size(); ++l) {
            std::vector<double> d;
            for (std::size_t i = 0; i < m.iterations; ++i) d.push_back(m.at(p, l, i).detected);
            const auto s = summarize(d);
            const double want = m.logging[l] == LoggingProfile::Default ? 4.0 : 6.0;
            if (s.mean != want || *s.sd != 0.0) {
                return fail(m.profile_names[p] + "/" + to_string(m.logging[l]) + fmt(": mean %.2f sd %.3f", s.mean, *s.sd));
            }
        }
    }
    if (secs >= kMaxRuntimeSeconds) return fail(fmt("took %.1f s", secs));
    return {true, fmt("40 runs, Default 4 / BestPractice 6, SD 0, %.2f s", secs)};
}

// 2. Per-rule counts at drop rate 0 equal the published constant counts and
// the nominal opportunity counts of the two variable rules.
Outcome per_rule_counts()
{
    // rule -> {Default, BestPractice}
    const std::map<std::string, std::pair<int, int>> want = {
        {"Autorun Keys Modification", {0, 1}},
        {"Direct Autorun Keys Modification", {0, 1}},
        {"Meterpreter or Cobalt Strike Getsystem Service Start", {0, 1}},
        {"Non Interactive PowerShell", {0, 1}},
        {"Windows PowerShell Web Request", {0, 3}},
        {"ET INFO EXE IsDebuggerPresent (Used in Malware Anti-Debugging)", {1, 1}},
        {"ET INFO Executable Download from dotted-quad Host", {1, 1}},
        {"ET INFO Executable Retrieved With Minimal HTTP Headers - Potential Second Stage Download", {1, 1}},
        {"ET INFO SUSPICIOUS Dotted Quad Host MZ Response", {2, 2}},
        {"ET INFO SUSPICIOUS SMTP EXE - EXE SMTP Attachment", {2, 2}},
        {"ET POLICY PE EXE or DLL Windows file download HTTP", {2, 2}},
        {"ET SCAN Sqlmap SQL Injection Scan", {2, 2}},
        {kBindRule, {2, 2}},
        {kSchemaRule, {7, 7}},
        {"ET WEB_SERVER Attempt To Access MSSQL xp_cmdshell Stored Procedure Via URI", {1, 1}},
        {"ET WEB_SERVER MYSQL Benchmark Command in URI to Consume Server Resources", {2, 2}},
        {"ET WEB_SERVER MYSQL SELECT CONCAT SQL Injection Attempt", {22, 22}},
        {"ET WEB_SERVER Possible attempt to enumerate MS SQL Server version", {2, 2}},
        {"ET WEB_SERVER Possible Attempt to Get SQL Server Version in URI using SELECT VERSION", {6, 6}},
        {"ET WEB_SERVER Possible MySQL SQLi Attempt Information Schema Access", {4, 4}},
        {"ET WEB_SERVER Possible SQL Injection Attempt SELECT FROM", {16, 16}},
        {"ET WEB_SERVER Possible SQL Injection Attempt UNION SELECT", {19, 19}},
        {"ET WEB_SERVER Script tag in URI Possible Cross Site Scripting Attempt", {1, 1}},
        {"ET WEB_SERVER SQL Errors in HTTP 200 Response (error in your SQL syntax)", {36, 36}},
        {"ET WEB_SERVER SQL Injection Select Sleep Time Delay", {7, 7}},
    };
    if (want.size() != 25) return fail("expected-count table is malformed");

    auto plan = default_plan();
    plan.profiles = {{"lossless", 0.0}};
    const auto m = run_experiment(plan, 0);
    for (const auto& r : m.results) {
        const bool best = m.logging[r.logging] == LoggingProfile::BestPractice;
        if (r.rule_counts.size() != want.size()) return fail("rule set differs from the expected table");
        for (const auto& [rule, counts] : want) {
            const auto it = r.rule_counts.find(rule);
            if (it == r.rule_counts.end()) return fail("missing rule " + rule);
            const int expected = best ? counts.second : counts.first;
            if (it->second != expected) {
                return fail(rule + ": " + std::to_string(it->second) + " != " + std::to_string(expected) + " (" +
                            to_string(m.logging[r.logging]) + ", iteration " + std::to_string(r.iteration) + ")");
            }
        }
    }
    return {true, "25 rules exact over " + std::to_string(m.results.size()) + " runs (23 constant, 7 and 2 nominal)"};
}

// 3. Byte-identical exports and identical experiment matrices across seeds.
Outcome bit_exact_determinism()
{
    oracle::TempDir dir("accept");
    for (int k = 0; k < kDeterminismSeeds; ++k) {
        const std::uint64_t seed = 1000 + 7 * k;
        for (auto profile : {LoggingProfile::Default, LoggingProfile::BestPractice}) {
            auto cfg = scenario();
            cfg.logging = LoggingConfig::for_profile(profile);
            cfg.host_profile = {"host-1", 0.0030};
            std::string bytes[2];
            std::string truth[2];
            for (int rep = 0; rep < 2; ++rep) {
                const auto path = dir / ("d" + std::to_string(rep) + ".jsonl");
                export_dataset(run_simulation(cfg, seed, exemplary()).dataset, path);
                bytes[rep] = oracle::slurp(path);
                truth[rep] = oracle::slurp(truth_path(path));
            }
            if (bytes[0].empty() || bytes[0] != bytes[1] || truth[0] != truth[1]) {
                return fail("dataset bytes differ for seed " + std::to_string(seed));
            }
        }
        auto plan = default_plan();
        plan.root_seed = seed;
        plan.iterations = 3;
        const auto a = run_experiment(plan, 1);
        const auto b = run_experiment(plan, 0);
        if (!(a == b) || results_to_json(a).dump() != results_to_json(b).dump()) {
            return fail("experiment matrices differ for root seed " + std::to_string(seed));
        }
    }
    return {true, std::to_string(kDeterminismSeeds) + " seeds: identical exports and matrices"};
}

// 4. Soundness over 1000 chains, exact support for short chains, full tactic coverage.
Outcome chain_soundness_and_coverage()
{
    const auto g = build_default_digraph();
    const auto targets = scenario_targets(scenario());
    for (int seed = 0; seed < kSoundnessChains; ++seed) {
        const auto length = 1 + static_cast<std::size_t>(seed % 8);
        const auto c = generate_chain(g, derive_stream(seed, {"chain"}), length, targets);
        const auto check = validate_chain(c, g);
        if (c.entries.size() != length || !check.valid) return fail("seed " + std::to_string(seed) + ": " + check.reason);
    }

    std::vector<std::string> clients;
    std::string dmz;
    for (const auto& t : targets) {
        if (t.kind == HostKind::DMZServer) {
            dmz = t.host;
        } else {
            clients.push_back(t.host);
        }
    }
    std::string sizes;
    for (std::size_t length = 0; length <= 2; ++length) {
        const auto expected = oracle::enumerate_chains(length, dmz, clients);
        std::set<oracle::ChainShape> seen;
        for (int seed = 0; seed < kEnumerationSeeds; ++seed) {
            const auto c = generate_chain(g, derive_stream(seed, {"enum", std::to_string(length)}), length, targets);
            oracle::ChainShape s;
            for (const auto& e : c.entries) s.emplace_back(std::string(to_string(e.step)), e.target);
            seen.insert(std::move(s));
        }
        if (seen != expected) {
            return fail("length " + std::to_string(length) + ": generated " + std::to_string(seen.size()) +
                        " distinct chains, enumeration has " + std::to_string(expected.size()));
        }
        sizes += (sizes.empty() ? "" : "/") + std::to_string(expected.size());
    }

    const std::vector<StepName> all(kAllSteps.begin(), kAllSteps.end());
    const auto covered = coverage_union(tactic_coverage(all));
    if (covered.count() != kTacticCount) return fail(std::to_string(covered.count()) + " of 14 tactics covered");
    return {true, "1000 chains valid; length 0/1/2 supports " + sizes + " match enumeration; 14/14 tactics"};
}

// 5. summarize and welch_t_test against closed forms and quadrature.
Outcome statistics_oracle()
{
    double worst = 0.0;
    auto compare = [&](const std::vector<double>& a, const std::vector<double>& b) -> std::string {
        for (const auto* x : {&a, &b}) {
            const auto s = summarize(*x);
            worst = std::max({worst, std::fabs(s.mean - oracle::mean(*x)),
                              std::fabs(*s.sd - std::sqrt(oracle::variance(*x)))});
        }
        const auto r = welch_t_test(a, b);
        const auto o = oracle::welch(a, b);
        worst = std::max({worst, std::fabs(r.t - o.t), std::fabs(r.df - o.df), std::fabs(r.p - o.p)});
        return worst <= kStatTolerance ? "" : fmt("deviation %.3g (p %.12f vs %.12f)", worst, r.p, o.p);
    };

    const std::vector<double> same = {1, 2, 3};
    const auto eq = welch_t_test(same, same);
    if (eq.t != 0.0 || eq.p != 1.0) return fail("equal samples do not give p = 1");
    if (auto e = compare({1, 2, 3}, {4, 5, 6}); !e.empty()) return fail(e);

    auto s = derive_stream(5, {"acceptance", "statistics"});
    for (int k = 0; k < kRandomPairs; ++k) {
        std::vector<double> a(2 + s.uniform_index(40));
        std::vector<double> b(2 + s.uniform_index(40));
        const double shift = s.uniform01() * 1.5;
        const double scale = 0.2 + 3 * s.uniform01();
        for (auto& v : a) v = 10 + s.normal();
        for (auto& v : b) v = 10 + shift + scale * s.normal();
        if (auto e = compare(a, b); !e.empty()) return fail("pair " + std::to_string(k) + ": " + e);
    }
    return {true, fmt("20 random pairs + trivial cases, max deviation %.2g", worst)};
}

// 6. Welch rejects for both drop-eligible rules under unequal drop rates and
// holds its level under equal ones.
Outcome variation_model()
{
    auto base = default_plan();
    base.logging = {LoggingProfile::Default};
    base.background = false;

    auto rejections = [&](const std::vector<HostProfile>& profiles, std::uint64_t root) {
        auto plan = base;
        plan.profiles = profiles;
        plan.root_seed = root;
        const auto report = variation_report(run_experiment(plan, 0), plan, 0);
        std::map<std::string, bool> out = {{kSchemaRule, false}, {kBindRule, false}};
        std::size_t n = 0;
        for (const auto& e : report.entries) {
            n = std::max(n, e.n);
            if (out.count(e.rule) && e.welch) out[e.rule] = e.welch->reject();
        }
        return std::pair{out, n};
    };

    int both = 0;
    std::size_t max_n = 0;
    for (int k = 0; k < kPowerRepetitions; ++k) {
        const auto [r, n] = rejections({{"host-1", 0.0030}, {"host-2", 0.0005}}, 5000 + k);
        both += r.at(kSchemaRule) && r.at(kBindRule);
        max_n = std::max(max_n, n);
    }
    const double power = static_cast<double>(both) / kPowerRepetitions;

    std::map<std::string, int> false_rejects;
    for (int k = 0; k < kNullRepetitions; ++k) {
        const auto [r, n] = rejections({{"host-a", 0.0030}, {"host-b", 0.0030}}, 9000 + k);
        for (const auto& [rule, rej] : r) false_rejects[rule] += rej;
    }
    const double fpr_schema = static_cast<double>(false_rejects[kSchemaRule]) / kNullRepetitions;
    const double fpr_bind = static_cast<double>(false_rejects[kBindRule]) / kNullRepetitions;

    const std::string detail = fmt("both rejected in %.0f%% of 20 (n<=%.0f); ", 100 * power, double(max_n)) +
                               fmt("equal-rate rejection %.0f%% / %.0f%% of 100", 100 * fpr_schema, 100 * fpr_bind);
    const bool ok = power >= kMinRejectRate && fpr_schema <= kMaxFalseRejectRate && fpr_bind <= kMaxFalseRejectRate;
    return {ok, detail};
}

// 7. Noise floor means over 50 full runs within 5 % of configured.
Outcome noise_calibration()
{
    const auto profile = default_noise_profile();
    std::map<std::pair<std::string, int>, double> totals;
    for (int seed = 0; seed < kNoiseRuns; ++seed) {
        const auto ds = run_simulation(scenario(), 700 + seed, exemplary()).dataset;
        for (const auto& e : ds.events) {
            if (e.source == LogSource::HostAudit && !e.cause) totals[{e.provider, e.event_id}] += 1;
        }
    }
    double worst = 0.0;
    std::string worst_name;
    for (const auto& entry : profile.entries) {
        const double mean = totals[{entry.provider, entry.event_id}] / kNoiseRuns;
        const double rel = std::fabs(mean / entry.mean_count - 1.0);
        if (rel > worst) {
            worst = rel;
            worst_name = entry.provider + " " + std::to_string(entry.event_id);
        }
    }
    if (profile.entries.size() != 20) return fail("noise profile has " + std::to_string(profile.entries.size()) + " entries");
    const double m5379 = totals[{"Microsoft-Windows-Security-Auditing", 5379}] / kNoiseRuns;
    const std::string detail = fmt("worst deviation %.2f%%", 100 * worst) + " (" + worst_name + fmt("); 5379 mean %.1f", m5379);
    return {worst <= kNoiseRelTolerance, detail};
}

// 8. Default alert types are a subset of BestPractice ones; no host-rule alerts under Default.
Outcome controllability_superset()
{
    const auto rules = default_ruleset();
    std::set<std::string> host_rules;
    for (const auto& r : rules) {
        if (r.kind == RuleKind::HostRule) host_rules.insert(r.name);
    }
    int default_host_alerts = 0;
    for (int i = 0; i < kPairedRuns; ++i) {
        const auto seed = iteration_seed(1, "host-1", static_cast<std::size_t>(i));
        std::vector<Alert> alerts[2];
        for (int b = 0; b < 2; ++b) {
            auto cfg = scenario();
            cfg.logging = LoggingConfig::for_profile(b ? LoggingProfile::BestPractice : LoggingProfile::Default);
            cfg.host_profile = {"host-1", 0.0030};
            alerts[b] = apply_rules(run_simulation(cfg, seed, exemplary()).dataset, rules);
        }
        if (const auto missing = superset_check(alerts[0], alerts[1])) {
            return fail("pair " + std::to_string(i) + ": '" + *missing + "' only under Default");
        }
        for (const auto& a : alerts[0]) default_host_alerts += host_rules.count(a.rule);
    }
    if (default_host_alerts != 0) return fail(std::to_string(default_host_alerts) + " host-rule alerts under Default");
    return {true, "10 same-seed pairs: Default types within BestPractice, 0 Default host-rule alerts"};
}

// 9. Self-test passes clean and names the failing check under three faults.
Outcome selftest_gate()
{
    const auto clean = run_selftests(scenario());
    if (!clean.overall) return fail("clean build fails self-test");

    auto failed = [](const SelfTestReport& r, const std::string& name) {
        return !r.overall && std::any_of(r.checks.begin(), r.checks.end(),
                                         [&](const SelfTestCheck& c) { return c.name == name && !c.passed; });
    };

    oracle::TempDir dir("accept");
    {
        std::ofstream(dir / "rules.json") << "{\"schema\": \"socsim.ruleset/1\", \"rules\": [";
    }
    SelfTestOptions corrupt;
    corrupt.ruleset_path = dir / "rules.json";
    if (!failed(run_selftests(scenario(), corrupt), "logging")) return fail("corrupted ruleset not caught by 'logging'");

    SelfTestOptions graph;
    graph.digraph = build_default_digraph();
    graph.digraph->successors[StepName::InfectEmailExe].erase(StepName::C2TakeScreenshot);
    if (!failed(run_selftests(scenario(), graph), "attack-graph")) return fail("broken edge not caught by 'attack-graph'");

    SelfTestOptions rng;
    rng.stream_factory = [](std::uint64_t seed, LabelPath) { return RngStream::from_key(seed); };
    if (!failed(run_selftests(scenario(), rng), "rng")) return fail("RNG substitution not caught by 'rng'");

    return {true, std::to_string(clean.checks.size()) + " checks pass clean; faults caught by logging, attack-graph, rng"};
}

struct Criterion {
    const char* name;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"detected-step reproduction", detected_steps_reproduction},
    {"per-rule alert counts", per_rule_counts},
    {"bit-exact determinism", bit_exact_determinism},
    {"chain soundness and coverage", chain_soundness_and_coverage},
    {"statistics oracle", statistics_oracle},
    {"variation model", variation_model},
    {"noise calibration", noise_calibration},
    {"controllability superset", controllability_superset},
    {"self-test gate", selftest_gate},
};

} // namespace

int main(int argc, char** argv)
{
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    constexpr int count = static_cast<int>(std::size(kCriteria));
    if (only < 0 || only > count) {
        std::fprintf(stderr, "usage: %s [1-%d]\n", argv[0], count);
        return 2;
    }
    int failures = 0;
    for (int i = 1; i <= count; ++i) {
        if (only && i != only) continue;
        const auto& c = kCriteria[i - 1];
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        failures += !o.pass;
        std::printf("%s  criterion %d  %-30s %s\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
