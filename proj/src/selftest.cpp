#include "socsim/selftest.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <unistd.h>

#include "socsim/detection.hpp"
#include "socsim/experiment.hpp"
#include "socsim/logemit.hpp"
#include "socsim/simulation.hpp"
#include "socsim/stats.hpp"

namespace socsim {

namespace {

// First draws of derive_stream(7, {"client", "1"}) under splitmix64/v1.
constexpr std::array<std::uint64_t, 4> kKnownDraws = {
    0x70d2d231bdc1f158ULL,
    0x9b2aefda8f89e425ULL,
    0x255116fb60702177ULL,
    0x68b094dc46fd7ca3ULL,
};

class TempDir {
  public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("socsim-selftest-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Context {
    const ScenarioConfig& scenario;
    const SelfTestOptions& options;

    PrereqDigraph digraph() const { return options.digraph ? *options.digraph : scenario_digraph(scenario); }

    ScenarioConfig micro() const
    {
        ScenarioConfig cfg = scenario;
        cfg.warmup_seconds = 10;
        cfg.run_seconds = 60;
        return cfg;
    }

    AttackChain exemplary() const
    {
        return exemplary_killchain(scenario_targets(scenario), scenario.attack_idle_seconds);
    }
};

std::string check_scenario(const Context& ctx)
{
    const auto v = validate_scenario(ctx.scenario);
    if (!v.empty()) throw std::runtime_error(v.front().code + " at " + v.front().path + ": " + v.front().message);
    return "scenario valid";
}

std::string check_rng(const Context& ctx)
{
    const auto factory = ctx.options.stream_factory ? ctx.options.stream_factory : StreamFactory(derive_stream);
    auto s = factory(7, {"client", "1"});
    for (std::size_t i = 0; i < kKnownDraws.size(); ++i) {
        if (s.next_u64() != kKnownDraws[i]) {
            throw std::runtime_error("draw " + std::to_string(i) + " differs from the pinned " +
                                     std::string(kRngAlgorithm) + " sequence");
        }
    }
    auto a = factory(7, {"client", "1"});
    auto b = factory(7, {"client", "2"});
    bool differ = false;
    for (int i = 0; i < 1000; ++i) differ |= a.next_u64() != b.next_u64();
    if (!differ) throw std::runtime_error("sibling label paths produce equal streams");
    return std::string(kRngAlgorithm) + " known-answer draws match";
}

std::string check_determinism(const Context& ctx)
{
    const auto cfg = ctx.micro();
    const auto chain = ctx.exemplary();
    SimulationOptions opts;
    opts.record_transcript = true;
    const auto r1 = run_simulation(cfg, 20240601, chain, opts);
    const auto r2 = run_simulation(cfg, 20240601, chain, opts);
    if (r1.transcript != r2.transcript) throw std::runtime_error("transcripts differ between replays");
    if (!(r1.dataset == r2.dataset)) throw std::runtime_error("datasets differ between replays");
    return std::to_string(r1.processed_events) + " queue events and " + std::to_string(r1.dataset.events.size()) +
           " log events replayed identically";
}

std::string check_chains(const Context& ctx)
{
    const auto g = ctx.digraph();
    const auto targets = scenario_targets(ctx.scenario);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto length = 1 + static_cast<std::size_t>(seed % 8);
        const auto chain = generate_chain(g, derive_stream(seed, {"chain"}), length, targets,
                                          ctx.scenario.attack_idle_seconds);
        const auto check = validate_chain(chain, g);
        if (!check.valid) {
            throw std::runtime_error("seed " + std::to_string(seed) + ": entry " + std::to_string(check.index) +
                                     " " + check.reason);
        }
    }
    return "100 generated chains valid";
}

std::string check_attack_graph(const Context& ctx)
{
    const auto g = ctx.digraph();
    if (const auto v = digraph_violations(g); !v.empty()) throw std::runtime_error(v.front());
    const auto check = validate_chain(ctx.exemplary(), g);
    if (!check.valid) {
        throw std::runtime_error("exemplary chain rejected at entry " + std::to_string(check.index) + ": " +
                                 check.detail);
    }
    return "digraph invariants hold and the exemplary chain validates";
}

std::string check_roundtrip(const Context& ctx)
{
    TempDir dir;
    const auto ds = run_simulation(ctx.micro(), 7, ctx.exemplary()).dataset;
    const auto path = dir.path() / "micro.jsonl";
    export_dataset(ds, path);
    const auto first = slurp(path);
    const auto back = import_dataset(path);
    if (!(back == ds)) throw std::runtime_error("imported dataset differs from the exported one");
    export_dataset(back, path);
    if (slurp(path) != first) throw std::runtime_error("re-export is not byte-identical");
    return std::to_string(ds.events.size()) + " events round-tripped";
}

std::string check_statistics(const Context&)
{
    const std::vector<double> a = {1, 2, 3};
    const auto same = welch_t_test(a, a);
    if (same.t != 0.0 || std::fabs(same.p - 1.0) > 1e-12) throw std::runtime_error("equal samples: p != 1");

    // Two samples of size 2 with equal variance give df = 2, where the t tail is closed-form.
    const std::vector<double> x = {0, 2};
    const std::vector<double> y = {3, 5};
    const auto r = welch_t_test(x, y);
    const double expected = 1.0 - std::fabs(r.t) / std::sqrt(2.0 + r.t * r.t);
    if (std::fabs(r.df - 2.0) > 1e-12 || std::fabs(r.p - expected) > 1e-12) {
        throw std::runtime_error("df=2 closed form mismatch");
    }
    const std::vector<double> s = {1, 2, 3, 4};
    const auto st = summarize(s);
    if (std::fabs(st.mean - 2.5) > 1e-12 || std::fabs(*st.sd - std::sqrt(5.0 / 3.0)) > 1e-12) {
        throw std::runtime_error("summarize mismatch");
    }
    return "Welch test and summary statistics match closed forms";
}

std::string check_logging(const Context& ctx)
{
    const auto rules = ctx.options.ruleset_path ? load_ruleset(*ctx.options.ruleset_path) : default_ruleset();
    const auto chain = ctx.exemplary();
    const std::array<std::pair<LoggingProfile, int>, 2> expected = {
        std::pair{LoggingProfile::Default, 4}, std::pair{LoggingProfile::BestPractice, 6}};
    std::string detail;
    for (const auto& [profile, want] : expected) {
        auto cfg = ctx.scenario;
        cfg.logging = LoggingConfig::for_profile(profile);
        cfg.host_profile = {"selftest", 0.0};
        const auto ds = run_simulation(cfg, 11, chain).dataset;
        const auto alerts = apply_rules(ds, rules);
        const auto counts = attribute_alerts(alerts, chain, ds.attack_start, ds.run_end);
        const int got = detected_steps(counts);
        if (got != want) {
            throw std::runtime_error(to_string(profile) + ": " + std::to_string(got) + " detected steps, expected " +
                                     std::to_string(want));
        }
        detail += (detail.empty() ? "" : ", ") + to_string(profile) + " " + std::to_string(got);
    }
    return "detected steps " + detail;
}

using CheckFn = std::string (*)(const Context&);

const std::vector<std::pair<std::string, CheckFn>>& registry()
{
    static const std::vector<std::pair<std::string, CheckFn>> checks = [] {
        std::vector<std::pair<std::string, CheckFn>> v = {
            {"scenario", check_scenario},     {"rng", check_rng},
            {"determinism", check_determinism}, {"chains", check_chains},
            {"attack-graph", check_attack_graph}, {"roundtrip", check_roundtrip},
            {"statistics", check_statistics}, {"logging", check_logging},
        };
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return v;
    }();
    return checks;
}

} // namespace

std::vector<std::string> selftest_names()
{
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
}

SelfTestReport run_selftests(const ScenarioConfig& scenario, const SelfTestOptions& options)
{
    if (options.only) {
        const auto names = selftest_names();
        if (std::find(names.begin(), names.end(), *options.only) == names.end()) {
            throw std::invalid_argument("unknown self-test check '" + *options.only + "'");
        }
    }
    const Context ctx{scenario, options};
    SelfTestReport report;
    for (const auto& [name, fn] : registry()) {
        if (options.only && *options.only != name) continue;
        SelfTestCheck c{name, false, {}};
        try {
            c.detail = fn(ctx);
            c.passed = true;
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        report.checks.push_back(std::move(c));
    }
    report.overall = std::all_of(report.checks.begin(), report.checks.end(),
                                 [](const SelfTestCheck& c) { return c.passed; });
    return report;
}

} // namespace socsim
