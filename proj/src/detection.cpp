#include "socsim/detection.hpp"

#include <algorithm>
#include <fstream>

#include "json_util.hpp"

namespace socsim {

std::string to_string(RuleKind k)
{
    return k == RuleKind::HostRule ? "host" : "network";
}

std::string to_string(MatchOp op)
{
    switch (op) {
    case MatchOp::Equals: return "equals";
    case MatchOp::Prefix: return "prefix";
    case MatchOp::Contains: return "contains";
    }
    throw std::logic_error("bad MatchOp");
}

namespace {

bool apply_op(MatchOp op, std::string_view actual, std::string_view expected)
{
    switch (op) {
    case MatchOp::Equals: return actual == expected;
    case MatchOp::Prefix: return actual.starts_with(expected);
    case MatchOp::Contains: return actual.find(expected) != std::string_view::npos;
    }
    return false;
}

bool matcher_holds(const Matcher& m, const LogEvent& e)
{
    if (m.field == "source") return apply_op(m.op, to_string(e.source), m.value);
    if (m.field == "provider") return apply_op(m.op, e.provider, m.value);
    if (m.field == "event_id") return apply_op(m.op, std::to_string(e.event_id), m.value);
    if (m.field == "host") return apply_op(m.op, e.host, m.value);
    if (m.field.starts_with("fields.")) {
        auto it = e.fields.find(m.field.substr(7));
        return it != e.fields.end() && apply_op(m.op, it->second, m.value);
    }
    return false;
}

Matcher eq(std::string field, std::string value)
{
    return {std::move(field), MatchOp::Equals, std::move(value)};
}

Matcher has(std::string field, std::string value)
{
    return {std::move(field), MatchOp::Contains, std::move(value)};
}

Matcher starts(std::string field, std::string value)
{
    return {std::move(field), MatchOp::Prefix, std::move(value)};
}

DetectionRule sysmon_rule(std::string name, int event_id, std::vector<Matcher> extra)
{
    DetectionRule r{std::move(name), RuleKind::HostRule,
                    {eq("source", "AdvancedHostAudit"), eq("provider", "Microsoft-Windows-Sysmon"),
                     eq("event_id", std::to_string(event_id))}};
    r.predicate.insert(r.predicate.end(), extra.begin(), extra.end());
    return r;
}

DetectionRule ids_rule(std::string name, int event_id, std::vector<Matcher> extra)
{
    DetectionRule r{std::move(name), RuleKind::NetworkRule,
                    {eq("source", "NetworkIDS"), eq("event_id", std::to_string(event_id))}};
    r.predicate.insert(r.predicate.end(), extra.begin(), extra.end());
    return r;
}

DetectionRule uri_rule(std::string name, std::string token)
{
    return ids_rule(std::move(name), 1, {has("fields.http.uri", std::move(token))});
}

} // namespace

bool DetectionRule::matches(const LogEvent& e) const
{
    return std::all_of(predicate.begin(), predicate.end(),
                       [&](const Matcher& m) { return matcher_holds(m, e); });
}

std::vector<DetectionRule> default_ruleset()
{
    return {
        sysmon_rule("Autorun Keys Modification", 13, {has("fields.TargetObject", "\\CurrentVersion\\Run")}),
        sysmon_rule("Direct Autorun Keys Modification", 1,
                    {has("fields.Image", "\\reg.exe"), has("fields.CommandLine", "reg add"),
                     has("fields.CommandLine", "\\CurrentVersion\\Run")}),
        sysmon_rule("Meterpreter or Cobalt Strike Getsystem Service Start", 1,
                    {has("fields.ParentImage", "\\services.exe"), has("fields.CommandLine", "echo"),
                     has("fields.CommandLine", "\\pipe\\")}),
        sysmon_rule("Non Interactive PowerShell", 1,
                    {has("fields.Image", "\\powershell.exe"), has("fields.CommandLine", "-NonI")}),
        DetectionRule{"Windows PowerShell Web Request", RuleKind::HostRule,
                      {eq("source", "ShellLog"), eq("provider", "Microsoft-Windows-PowerShell"),
                       eq("event_id", "4104"), has("fields.ScriptBlockText", "Invoke-WebRequest")}},

        ids_rule("ET INFO EXE IsDebuggerPresent (Used in Malware Anti-Debugging)", 2,
                 {has("fields.payload", "IsDebuggerPresent")}),
        ids_rule("ET INFO Executable Download from dotted-quad Host", 1,
                 {eq("fields.http.method", "GET"), eq("fields.http.host_type", "ipv4"),
                  has("fields.http.uri", ".exe")}),
        ids_rule("ET INFO Executable Retrieved With Minimal HTTP Headers - Potential Second Stage Download", 2,
                 {eq("fields.http.header_count", "2"), starts("fields.payload", "MZ")}),
        ids_rule("ET INFO SUSPICIOUS Dotted Quad Host MZ Response", 2,
                 {eq("fields.http.host_type", "ipv4"),
                  eq("fields.http.content_type", "application/octet-stream"),
                  starts("fields.payload", "MZ")}),
        ids_rule("ET INFO SUSPICIOUS SMTP EXE - EXE SMTP Attachment", 3,
                 {has("fields.smtp.attachment", ".exe")}),
        ids_rule("ET POLICY PE EXE or DLL Windows file download HTTP", 2,
                 {eq("fields.http.content_type", "application/x-msdownload"),
                  starts("fields.payload", "MZ")}),
        ids_rule("ET SCAN Sqlmap SQL Injection Scan", 1, {starts("fields.http.user_agent", "sqlmap/")}),
        ids_rule("ET TROJAN Possible Metasploit Payload Common Construct Bind_API (from server)", 4,
                 {eq("fields.direction", "from_server"), has("fields.payload", "bind_api")}),
        uri_rule("ET WEB_SERVER ATTACKER SQLi - SELECT and Schema Columns", "information_schema.columns"),
        uri_rule("ET WEB_SERVER Attempt To Access MSSQL xp_cmdshell Stored Procedure Via URI", "xp_cmdshell"),
        uri_rule("ET WEB_SERVER MYSQL Benchmark Command in URI to Consume Server Resources", "BENCHMARK("),
        uri_rule("ET WEB_SERVER MYSQL SELECT CONCAT SQL Injection Attempt", "CONCAT(0x"),
        uri_rule("ET WEB_SERVER Possible attempt to enumerate MS SQL Server version", "@@version"),
        uri_rule("ET WEB_SERVER Possible Attempt to Get SQL Server Version in URI using SELECT VERSION",
                 "SELECT+VERSION()"),
        uri_rule("ET WEB_SERVER Possible MySQL SQLi Attempt Information Schema Access",
                 "information_schema.tables"),
        uri_rule("ET WEB_SERVER Possible SQL Injection Attempt SELECT FROM", "+FROM+users"),
        uri_rule("ET WEB_SERVER Possible SQL Injection Attempt UNION SELECT", "UNION+ALL+SELECT"),
        uri_rule("ET WEB_SERVER Script tag in URI Possible Cross Site Scripting Attempt", "%3Cscript%3E"),
        ids_rule("ET WEB_SERVER SQL Errors in HTTP 200 Response (error in your SQL syntax)", 2,
                 {eq("fields.http.status", "200"), has("fields.payload", "error in your SQL syntax")}),
        uri_rule("ET WEB_SERVER SQL Injection Select Sleep Time Delay", "SLEEP("),
    };
}

void check_ruleset(std::span<const DetectionRule> rules)
{
    std::set<std::string> names;
    for (const auto& r : rules) {
        if (r.name.empty()) throw RulesetError("rule with empty name");
        if (!names.insert(r.name).second) throw RulesetError("duplicate rule name '" + r.name + "'");
        if (r.predicate.empty()) throw RulesetError("rule '" + r.name + "' has no matchers");
        bool sourced = false;
        for (const auto& m : r.predicate) {
            const bool known = m.field == "source" || m.field == "provider" || m.field == "event_id" ||
                               m.field == "host" || (m.field.starts_with("fields.") && m.field.size() > 7);
            if (m.field == "cause" || m.field == "fields.cause") {
                throw RulesetError("rule '" + r.name + "' references the ground-truth cause tag");
            }
            if (!known) throw RulesetError("rule '" + r.name + "' uses unknown field '" + m.field + "'");
            if (m.field == "source" && m.op == MatchOp::Equals) {
                const auto src = parse_log_source(m.value);
                if (!src) throw RulesetError("rule '" + r.name + "' names unknown source '" + m.value + "'");
                if (is_network_source(*src) != (r.kind == RuleKind::NetworkRule)) {
                    throw RulesetError("rule '" + r.name + "' is a " + to_string(r.kind) +
                                       " rule on source " + m.value);
                }
                sourced = true;
            }
        }
        if (!sourced) throw RulesetError("rule '" + r.name + "' lacks a 'source equals' matcher");
    }
}

nlohmann::json ruleset_to_json(std::span<const DetectionRule> rules)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rules) {
        nlohmann::json ms = nlohmann::json::array();
        for (const auto& m : r.predicate) {
            ms.push_back({{"field", m.field}, {"op", to_string(m.op)}, {"value", m.value}});
        }
        arr.push_back({{"name", r.name}, {"kind", to_string(r.kind)}, {"match", std::move(ms)}});
    }
    return {{"schema", kRulesetSchema}, {"rules", std::move(arr)}};
}

std::vector<DetectionRule> ruleset_from_json(const nlohmann::json& j)
{
    using detail::ObjectReader;
    std::vector<DetectionRule> rules;
    try {
        ObjectReader root(j, "");
        if (root.required<std::string>("schema") != kRulesetSchema) {
            throw detail::JsonFieldError("schema", "expected " + std::string(kRulesetSchema));
        }
        const auto& arr = detail::require_array(root.raw("rules"), "rules");
        root.finish();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ObjectReader r(arr[i], "rules[" + std::to_string(i) + "]");
            DetectionRule rule;
            rule.name = r.required<std::string>("name");
            const auto kind = r.required<std::string>("kind");
            if (kind == "host") {
                rule.kind = RuleKind::HostRule;
            } else if (kind == "network") {
                rule.kind = RuleKind::NetworkRule;
            } else {
                throw detail::JsonFieldError(r.path("kind"), "expected host or network");
            }
            const auto& ms = detail::require_array(r.raw("match"), r.path("match"));
            for (std::size_t k = 0; k < ms.size(); ++k) {
                ObjectReader mr(ms[k], r.path("match") + "[" + std::to_string(k) + "]");
                Matcher m;
                m.field = mr.required<std::string>("field");
                const auto op = mr.required<std::string>("op");
                if (op == "equals") {
                    m.op = MatchOp::Equals;
                } else if (op == "prefix") {
                    m.op = MatchOp::Prefix;
                } else if (op == "contains") {
                    m.op = MatchOp::Contains;
                } else {
                    throw detail::JsonFieldError(mr.path("op"), "expected equals, prefix or contains");
                }
                m.value = mr.required<std::string>("value");
                mr.finish();
                rule.predicate.push_back(std::move(m));
            }
            r.finish();
            rules.push_back(std::move(rule));
        }
    } catch (const detail::JsonFieldError& e) {
        throw RulesetError(std::string("ruleset: ") + e.what());
    }
    check_ruleset(rules);
    return rules;
}

std::vector<DetectionRule> load_ruleset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw RulesetError("cannot open ruleset " + path.string());
    try {
        return ruleset_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw RulesetError(path.string() + ": " + e.what());
    }
}

void save_ruleset(std::span<const DetectionRule> rules, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << ruleset_to_json(rules).dump(2) << '\n';
}

std::vector<Alert> apply_rules(std::span<const LogEvent> events, std::span<const DetectionRule> rules)
{
    // Most events are rejected by the source matcher, so resolve it once per rule.
    std::vector<std::optional<LogSource>> required(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        for (const auto& m : rules[r].predicate) {
            if (m.field == "source" && m.op == MatchOp::Equals) required[r] = parse_log_source(m.value);
        }
    }
    std::vector<Alert> alerts;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        for (std::size_t r = 0; r < rules.size(); ++r) {
            if (required[r] && *required[r] != e.source) continue;
            if (rules[r].matches(e)) alerts.push_back({rules[r].name, e.timestamp, e.host, i});
        }
    }
    return alerts;
}

std::vector<Alert> apply_rules(const LogDataset& ds, std::span<const DetectionRule> rules)
{
    return apply_rules(std::span<const LogEvent>(ds.events), rules);
}

std::vector<AttributionWindow> attribution_windows(const AttackChain& chain, SimTime attack_start,
                                                   SimTime run_end)
{
    std::vector<AttributionWindow> out;
    const auto& es = chain.entries;
    for (std::size_t i = 0; i < es.size(); ++i) {
        const SimTime begin = attack_start + es[i].offset;
        const SimTime end = i + 1 < es.size() ? attack_start + es[i + 1].offset : std::max(run_end, begin);
        out.push_back({i, begin, end});
    }
    return out;
}

std::vector<int> attribute_alerts(std::span<const Alert> alerts, const AttackChain& chain,
                                  SimTime attack_start, SimTime run_end,
                                  const std::set<std::string>* allowlist)
{
    const auto windows = attribution_windows(chain, attack_start, run_end);
    std::vector<int> counts(windows.size(), 0);
    for (const auto& a : alerts) {
        if (allowlist && !allowlist->count(a.rule)) continue;
        for (const auto& w : windows) {
            if (a.timestamp >= w.begin && a.timestamp < w.end) {
                ++counts[w.entry];
                break;
            }
        }
    }
    return counts;
}

int detected_steps(std::span<const int> counts)
{
    return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](int c) { return c >= 1; }));
}

std::optional<std::string> superset_check(std::span<const Alert> alerts_default,
                                          std::span<const Alert> alerts_best)
{
    std::set<std::string> best;
    for (const auto& a : alerts_best) best.insert(a.rule);
    for (const auto& a : alerts_default) {
        if (!best.count(a.rule)) return a.rule;
    }
    return std::nullopt;
}

std::map<std::string, int> count_by_rule(std::span<const Alert> alerts)
{
    std::map<std::string, int> out;
    for (const auto& a : alerts) ++out[a.rule];
    return out;
}

} // namespace socsim
