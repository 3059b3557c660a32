#include "socsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json_util.hpp"

namespace socsim {

ExperimentPlan default_plan()
{
    ExperimentPlan plan;
    plan.scenario = default_scenario();
    plan.profiles = {{"host-1", 0.0030}, {"host-2", 0.0005}};
    plan.logging = {LoggingProfile::Default, LoggingProfile::BestPractice};
    plan.chain = exemplary_killchain(scenario_targets(plan.scenario), plan.scenario.attack_idle_seconds);
    plan.rules = default_ruleset();
    return plan;
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan)
{
    std::vector<std::string> out;
    for (const auto& v : validate_scenario(plan.scenario)) {
        out.push_back("scenario." + v.path + ": " + v.message);
    }
    if (plan.iterations < 1) out.push_back("iterations must be at least 1");
    if (plan.profiles.empty()) out.push_back("no host profiles");
    std::set<std::string> names;
    for (const auto& p : plan.profiles) {
        if (!names.insert(p.name).second) out.push_back("duplicate profile name '" + p.name + "'");
        if (!(p.drop_rate >= 0.0 && p.drop_rate <= 1.0)) {
            out.push_back("profile '" + p.name + "' drop_rate outside [0, 1]");
        }
    }
    if (plan.logging.empty()) out.push_back("no logging profiles");
    if (std::set(plan.logging.begin(), plan.logging.end()).size() != plan.logging.size()) {
        out.push_back("duplicate logging profile");
    }
    if (out.empty()) {
        for (const auto& problem : check_chain(plan.chain, plan.scenario)) out.push_back("chain " + problem);
    }
    try {
        check_ruleset(plan.rules);
    } catch (const RulesetError& e) {
        out.push_back(e.what());
    }
    const auto& v = plan.variation;
    if (v.batch < 1) out.push_back("variation.batch must be at least 1");
    if (v.min_iterations > v.cap) out.push_back("variation.min_iterations exceeds variation.cap");
    if (!(v.alpha > 0.0 && v.alpha < 1.0)) out.push_back("variation.alpha must be in (0, 1)");
    return out;
}

nlohmann::json plan_to_json(const ExperimentPlan& plan)
{
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : plan.profiles) profiles.push_back({{"name", p.name}, {"drop_rate", p.drop_rate}});
    nlohmann::json logging = nlohmann::json::array();
    for (auto l : plan.logging) logging.push_back(to_string(l));
    nlohmann::json j{{"schema", kPlanSchema},
                     {"scenario", scenario_to_json(plan.scenario)},
                     {"iterations", plan.iterations},
                     {"profiles", std::move(profiles)},
                     {"logging", std::move(logging)},
                     {"root_seed", plan.root_seed},
                     {"chain", chain_to_json(plan.chain)},
                     {"background", plan.background},
                     {"variation",
                      {{"min_iterations", plan.variation.min_iterations},
                       {"cap", plan.variation.cap},
                       {"batch", plan.variation.batch},
                       {"alpha", plan.variation.alpha}}}};
    if (plan.rules != default_ruleset()) j["ruleset"] = ruleset_to_json(plan.rules);
    return j;
}

ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    using detail::JsonFieldError;
    using detail::ObjectReader;
    ExperimentPlan plan = default_plan();
    try {
        ObjectReader r(j, "");
        if (r.required<std::string>("schema") != kPlanSchema) {
            throw JsonFieldError("schema", "expected " + std::string(kPlanSchema));
        }
        if (r.has("scenario")) {
            const auto& s = r.raw("scenario");
            if (s.is_string()) {
                plan.scenario = load_scenario(base_dir / s.get<std::string>());
            } else {
                plan.scenario = scenario_from_json(s);
            }
        }
        r.optional("iterations", plan.iterations);
        if (r.has("profiles")) {
            plan.profiles.clear();
            const auto& arr = detail::require_array(r.raw("profiles"), "profiles");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                ObjectReader pr(arr[i], "profiles[" + std::to_string(i) + "]");
                HostProfile p;
                p.name = pr.required<std::string>("name");
                p.drop_rate = pr.required<double>("drop_rate");
                pr.finish();
                plan.profiles.push_back(std::move(p));
            }
        }
        if (r.has("logging")) {
            plan.logging.clear();
            for (const auto& l : detail::require_array(r.raw("logging"), "logging")) {
                plan.logging.push_back(parse_logging_profile(ObjectReader::convert<std::string>(l, "logging")));
            }
        }
        r.optional("root_seed", plan.root_seed);
        if (r.has("chain")) {
            const auto& c = r.raw("chain");
            if (c.is_string() && c.get<std::string>() == "exemplary") {
                plan.chain = exemplary_killchain(scenario_targets(plan.scenario), plan.scenario.attack_idle_seconds);
            } else if (c.is_string()) {
                plan.chain = load_chain(base_dir / c.get<std::string>());
            } else {
                plan.chain = chain_from_json(c);
            }
        } else {
            plan.chain = exemplary_killchain(scenario_targets(plan.scenario), plan.scenario.attack_idle_seconds);
        }
        r.optional("background", plan.background);
        if (r.has("variation")) {
            ObjectReader vr(r.raw("variation"), "variation");
            vr.optional("min_iterations", plan.variation.min_iterations);
            vr.optional("cap", plan.variation.cap);
            vr.optional("batch", plan.variation.batch);
            vr.optional("alpha", plan.variation.alpha);
            vr.finish();
        }
        if (r.has("ruleset")) {
            const auto& rs = r.raw("ruleset");
            plan.rules = rs.is_string() ? load_ruleset(base_dir / rs.get<std::string>()) : ruleset_from_json(rs);
        }
        r.finish();
    } catch (const JsonFieldError& e) {
        throw std::invalid_argument(std::string("plan: ") + e.what());
    } catch (const ScenarioError& e) {
        throw std::invalid_argument(std::string("plan scenario: ") + e.what());
    } catch (const RulesetError& e) {
        throw std::invalid_argument(std::string("plan ruleset: ") + e.what());
    }
    return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open plan " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return plan_from_json(j, path.parent_path());
}

std::uint64_t iteration_seed(std::uint64_t root_seed, const std::string& profile, std::size_t iteration)
{
    const std::vector<std::string> labels = {"iteration", profile, std::to_string(iteration)};
    return derive_key(root_seed, labels);
}

ScenarioConfig cell_scenario(const ExperimentPlan& plan, std::size_t profile, std::size_t logging)
{
    ScenarioConfig cfg = plan.scenario;
    cfg.logging = LoggingConfig::for_profile(plan.logging.at(logging));
    cfg.host_profile = plan.profiles.at(profile);
    return cfg;
}

IterationResult run_iteration(const ExperimentPlan& plan, std::size_t profile, std::size_t logging,
                              std::size_t iteration, bool background)
{
    const auto cfg = cell_scenario(plan, profile, logging);
    IterationResult r;
    r.profile = profile;
    r.logging = logging;
    r.iteration = iteration;
    r.seed = iteration_seed(plan.root_seed, plan.profiles[profile].name, iteration);

    SimulationOptions opts;
    opts.user_activity = background;
    opts.noise = background;
    const auto run = run_simulation(cfg, r.seed, plan.chain, opts);
    const auto& ds = run.dataset;
    r.fingerprint = ds.fingerprint;

    const auto alerts = apply_rules(ds, plan.rules);
    r.step_counts = attribute_alerts(alerts, plan.chain, ds.attack_start, ds.run_end);
    r.detected = detected_steps(r.step_counts);
    for (const auto& rule : plan.rules) r.rule_counts[rule.name] = 0;
    const auto windows = attribution_windows(plan.chain, ds.attack_start, ds.run_end);
    for (const auto& a : alerts) {
        const bool attributed = std::any_of(windows.begin(), windows.end(), [&](const AttributionWindow& w) {
            return a.timestamp >= w.begin && a.timestamp < w.end;
        });
        if (attributed) ++r.rule_counts[a.rule];
    }
    return r;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace

const IterationResult& ResultsMatrix::at(std::size_t profile, std::size_t logging, std::size_t iteration) const
{
    if (profile >= profile_names.size() || logging >= this->logging.size() || iteration >= iterations) {
        throw std::out_of_range("results matrix index out of range");
    }
    return results.at((profile * this->logging.size() + logging) * iterations + iteration);
}

ResultsMatrix run_experiment(const ExperimentPlan& plan, unsigned threads)
{
    if (const auto problems = validate_plan(plan); !problems.empty()) {
        throw std::invalid_argument("invalid plan: " + problems.front());
    }
    ResultsMatrix m;
    for (const auto& p : plan.profiles) m.profile_names.push_back(p.name);
    m.logging = plan.logging;
    m.iterations = plan.iterations;
    for (const auto& e : plan.chain.entries) m.step_labels.push_back(entry_name(e));

    const std::size_t cells = plan.profiles.size() * plan.logging.size();
    m.results.resize(cells * plan.iterations);
    parallel_for(m.results.size(), threads, [&](std::size_t k) {
        const std::size_t i = k % plan.iterations;
        const std::size_t cell = k / plan.iterations;
        const std::size_t p = cell / plan.logging.size();
        const std::size_t l = cell % plan.logging.size();
        try {
            m.results[k] = run_iteration(plan, p, l, i, plan.background);
        } catch (const std::exception& e) {
            throw ExperimentError("iteration (profile " + plan.profiles[p].name + ", logging " +
                                  to_string(plan.logging[l]) + ", index " + std::to_string(i) + "): " + e.what());
        }
    });
    return m;
}

nlohmann::json results_to_json(const ResultsMatrix& m)
{
    nlohmann::json logging = nlohmann::json::array();
    for (auto l : m.logging) logging.push_back(to_string(l));
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : m.results) {
        results.push_back({{"profile", r.profile},
                           {"logging", r.logging},
                           {"iteration", r.iteration},
                           {"seed", r.seed},
                           {"step_counts", r.step_counts},
                           {"rule_counts", r.rule_counts},
                           {"detected", r.detected},
                           {"fingerprint", r.fingerprint}});
    }
    return {{"schema", kResultsSchema},
            {"profiles", m.profile_names},
            {"logging", std::move(logging)},
            {"iterations", m.iterations},
            {"steps", m.step_labels},
            {"results", std::move(results)}};
}

ResultsMatrix results_from_json(const nlohmann::json& j)
{
    try {
        ResultsMatrix m;
        if (j.at("schema").get<std::string>() != kResultsSchema) {
            throw std::invalid_argument("results: unsupported schema");
        }
        m.profile_names = j.at("profiles").get<std::vector<std::string>>();
        for (const auto& l : j.at("logging")) m.logging.push_back(parse_logging_profile(l.get<std::string>()));
        m.iterations = j.at("iterations").get<std::size_t>();
        m.step_labels = j.at("steps").get<std::vector<std::string>>();
        for (const auto& r : j.at("results")) {
            IterationResult it;
            it.profile = r.at("profile").get<std::size_t>();
            it.logging = r.at("logging").get<std::size_t>();
            it.iteration = r.at("iteration").get<std::size_t>();
            it.seed = r.at("seed").get<std::uint64_t>();
            it.step_counts = r.at("step_counts").get<std::vector<int>>();
            it.rule_counts = r.at("rule_counts").get<std::map<std::string, int>>();
            it.detected = r.at("detected").get<int>();
            it.fingerprint = r.at("fingerprint").get<std::string>();
            m.results.push_back(std::move(it));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("results: ") + e.what());
    }
}

namespace {

bool varies(const std::vector<double>& xs)
{
    return std::any_of(xs.begin(), xs.end(), [&](double x) { return x != xs.front(); });
}

} // namespace

VariationReport variation_report(const ResultsMatrix& m, const ExperimentPlan& plan, unsigned threads)
{
    if (m.profile_names.size() < 2) throw std::invalid_argument("variation_report: needs two profiles");
    VariationReport report;
    report.profile_a = m.profile_names[0];
    report.profile_b = m.profile_names[1];

    // Rules whose per-iteration count varies in any cell.
    std::vector<std::string> variable;
    for (const auto& rule : plan.rules) {
        bool any = false;
        for (std::size_t p = 0; p < m.profile_names.size() && !any; ++p) {
            for (std::size_t l = 0; l < m.logging.size() && !any; ++l) {
                std::vector<double> xs;
                for (std::size_t i = 0; i < m.iterations; ++i) {
                    const auto& rc = m.at(p, l, i).rule_counts;
                    auto it = rc.find(rule.name);
                    xs.push_back(it == rc.end() ? 0.0 : it->second);
                }
                any = varies(xs);
            }
        }
        if (any) variable.push_back(rule.name);
    }

    // Extension iterations, shared between rules: extra[l][p][i - m.iterations].
    std::vector<std::array<std::vector<IterationResult>, 2>> extra(m.logging.size());
    auto ensure = [&](std::size_t l, std::size_t n) {
        const std::size_t have = m.iterations + extra[l][0].size();
        if (n <= have) return;
        const std::size_t add = n - have;
        std::vector<IterationResult> fresh(add * 2);
        parallel_for(fresh.size(), threads, [&](std::size_t k) {
            fresh[k] = run_iteration(plan, k / add, l, have + k % add, false);
        });
        for (std::size_t p = 0; p < 2; ++p) {
            for (std::size_t k = 0; k < add; ++k) extra[l][p].push_back(std::move(fresh[p * add + k]));
        }
    };
    auto sample = [&](const std::string& rule, std::size_t p, std::size_t l, std::size_t n) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = i < m.iterations ? m.at(p, l, i) : extra[l][p][i - m.iterations];
            auto it = r.rule_counts.find(rule);
            xs.push_back(it == r.rule_counts.end() ? 0.0 : it->second);
        }
        return xs;
    };

    const auto& policy = plan.variation;
    for (const auto& rule : variable) {
        for (std::size_t l = 0; l < m.logging.size(); ++l) {
            std::size_t n = m.iterations;
            auto a = sample(rule, 0, l, n);
            auto b = sample(rule, 1, l, n);
            while ((n < policy.min_iterations || !varies(a) || !varies(b)) && n < policy.cap) {
                n = std::min(policy.cap, n + policy.batch);
                ensure(l, n);
                a = sample(rule, 0, l, n);
                b = sample(rule, 1, l, n);
            }
            VariationEntry e;
            e.rule = rule;
            e.logging = m.logging[l];
            e.n = n;
            e.a = summarize(a);
            e.b = summarize(b);
            try {
                e.welch = welch_t_test(a, b, policy.alpha);
            } catch (const DegenerateSamplesError&) {
                e.welch.reset();
            }
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

namespace {

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

nlohmann::json stats_json(const SummaryStats& s)
{
    nlohmann::json j{{"mean", s.mean}, {"n", s.n}};
    j["sd"] = s.sd ? nlohmann::json(*s.sd) : nlohmann::json(nullptr);
    return j;
}

} // namespace

nlohmann::json variation_to_json(const VariationReport& r)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json j{{"rule", e.rule},
                         {"logging", to_string(e.logging)},
                         {"n", e.n},
                         {"a", stats_json(e.a)},
                         {"b", stats_json(e.b)}};
        if (e.welch) {
            j["t"] = e.welch->t;
            j["df"] = e.welch->df;
            j["p"] = e.welch->p;
            j["alpha"] = e.welch->alpha;
            j["reject"] = e.welch->reject();
        } else {
            j["status"] = "degenerate";
        }
        entries.push_back(std::move(j));
    }
    return {{"profile_a", r.profile_a}, {"profile_b", r.profile_b}, {"entries", std::move(entries)}};
}

std::string render_variation(const VariationReport& r)
{
    std::ostringstream out;
    out << "Variation between " << r.profile_a << " and " << r.profile_b << "\n";
    if (r.entries.empty()) out << "  no rule varies across iterations\n";
    for (const auto& e : r.entries) {
        out << "  [" << to_string(e.logging) << "] " << e.rule << "\n"
            << "    n=" << e.n << "  mean " << fmt("%.3f", e.a.mean) << " vs " << fmt("%.3f", e.b.mean);
        if (e.welch) {
            out << "  t=" << fmt("%.4f", e.welch->t) << " df=" << fmt("%.2f", e.welch->df)
                << " p=" << fmt("%.3g", e.welch->p) << (e.welch->reject() ? "  reject" : "  keep") << "\n";
        } else {
            out << "  no variance up to the cap\n";
        }
    }
    return out.str();
}

Table2 render_table2(const ResultsMatrix& m)
{
    if (m.iterations == 0 || m.results.empty()) throw std::invalid_argument("render_table2: empty results");
    Table2 t;
    std::ostringstream out;
    t.json = {{"profiles", nlohmann::json::array()}};

    auto cell_stats = [&](std::size_t p, std::size_t l, auto&& value) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < m.iterations; ++i) xs.push_back(value(m.at(p, l, i)));
        return summarize(xs);
    };
    auto fmt_cell = [](const std::optional<SummaryStats>& s) {
        if (!s) return std::string("      -        -");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%7.1f  %7.3f", s->mean, s->sd.value_or(0.0));
        return std::string(buf);
    };
    auto logging_index = [&](LoggingProfile lp) -> std::optional<std::size_t> {
        for (std::size_t l = 0; l < m.logging.size(); ++l) {
            if (m.logging[l] == lp) return l;
        }
        return std::nullopt;
    };
    const auto ld = logging_index(LoggingProfile::Default);
    const auto lb = logging_index(LoggingProfile::BestPractice);

    for (std::size_t p = 0; p < m.profile_names.size(); ++p) {
        out << "Host profile " << m.profile_names[p] << " (n=" << m.iterations << ")\n";
        out << "  Step                                        x_d      s_d      x_b      s_b\n";
        nlohmann::json pj{{"name", m.profile_names[p]}, {"steps", nlohmann::json::array()}};
        auto row = [&](const std::string& label, auto&& value) {
            std::optional<SummaryStats> d;
            std::optional<SummaryStats> b;
            if (ld) d = cell_stats(p, *ld, value);
            if (lb) b = cell_stats(p, *lb, value);
            std::string name = label.substr(0, 40);
            name.resize(40, ' ');
            out << "  " << name << "  " << fmt_cell(d) << "  " << fmt_cell(b) << "\n";
            nlohmann::json j{{"label", label}};
            j["default"] = d ? stats_json(*d) : nlohmann::json(nullptr);
            j["best_practice"] = b ? stats_json(*b) : nlohmann::json(nullptr);
            return j;
        };
        for (std::size_t s = 0; s < m.step_labels.size(); ++s) {
            const auto label = "(" + std::to_string(s + 1) + ") " + m.step_labels[s];
            pj["steps"].push_back(row(label, [s](const IterationResult& r) { return double(r.step_counts.at(s)); }));
        }
        pj["detected"] = row("Number of detected attack steps",
                             [](const IterationResult& r) { return double(r.detected); });
        t.json["profiles"].push_back(std::move(pj));
        out << "\n";
    }
    t.text = out.str();
    return t;
}

} // namespace socsim
