#include "socsim/adversary.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "json_util.hpp"

namespace socsim {

std::string to_string(StepStage stage)
{
    switch (stage) {
    case StepStage::Full: return "full";
    case StepStage::Deliver: return "deliver";
    case StepStage::Trigger: return "trigger";
    }
    throw std::logic_error("bad StepStage");
}

StepStage parse_step_stage(const std::string& text)
{
    if (text == "full") return StepStage::Full;
    if (text == "deliver") return StepStage::Deliver;
    if (text == "trigger") return StepStage::Trigger;
    throw std::invalid_argument("unknown step stage '" + text + "'");
}

std::string entry_name(const ChainEntry& e)
{
    if (!e.label.empty()) return e.label;
    std::string s{to_string(e.step)};
    if (e.stage != StepStage::Full) s += "/" + to_string(e.stage);
    return s + "@" + e.target;
}

std::vector<Target> scenario_targets(const ScenarioConfig& cfg)
{
    std::vector<Target> out;
    if (const auto* dmz = cfg.find_kind(HostKind::DMZServer)) {
        out.push_back({dmz->id, HostKind::DMZServer});
    }
    for (const auto* c : cfg.clients()) {
        out.push_back({c->id, HostKind::Client});
    }
    return out;
}

HostKind required_target_kind(StepName step)
{
    return step == StepName::MiscSqlmap ? HostKind::DMZServer : HostKind::Client;
}

bool PrereqDigraph::has_edge(StepName from, StepName to) const
{
    auto it = successors.find(from);
    return it != successors.end() && it->second.count(to) > 0;
}

PrereqDigraph build_default_digraph()
{
    PrereqDigraph g;
    g.nodes.assign(kAllSteps.begin(), kAllSteps.end());
    for (auto s : kAllSteps) {
        if (family(s) != StepFamily::C2) g.entry.insert(s);
    }
    for (auto from : kAllSteps) {
        auto& succ = g.successors[from];
        for (auto to : kAllSteps) {
            const bool to_c2 = family(to) == StepFamily::C2;
            if (g.is_entry(to) || (to_c2 && family(from) != StepFamily::Misc)) {
                succ.insert(to);
            }
        }
    }
    return g;
}

namespace {

StepName require_step(const std::string& name)
{
    auto s = parse_step_name(name);
    if (!s) throw std::invalid_argument("unknown attack step '" + name + "'");
    return *s;
}

} // namespace

PrereqDigraph digraph_from_spec(const AttackGraphSpec& spec)
{
    PrereqDigraph g;
    g.nodes.assign(kAllSteps.begin(), kAllSteps.end());
    for (const auto& e : spec.entry) g.entry.insert(require_step(e));
    for (const auto& [from, tos] : spec.successors) {
        auto& succ = g.successors[require_step(from)];
        for (const auto& to : tos) succ.insert(require_step(to));
    }
    for (auto s : kAllSteps) g.successors[s];
    return g;
}

AttackGraphSpec digraph_to_spec(const PrereqDigraph& g)
{
    AttackGraphSpec spec;
    for (auto s : g.entry) spec.entry.emplace_back(to_string(s));
    for (const auto& [from, tos] : g.successors) {
        auto& v = spec.successors[std::string(to_string(from))];
        for (auto to : tos) v.emplace_back(to_string(to));
    }
    return spec;
}

PrereqDigraph scenario_digraph(const ScenarioConfig& cfg)
{
    return cfg.attack_graph ? digraph_from_spec(*cfg.attack_graph) : build_default_digraph();
}

namespace {

// Walk states are (step, channel live) pairs plus a virtual start state.
// A single chain can cover every step iff the condensation of the reachable
// state graph admits a path through all of its components and every step
// appears in some reachable state.
bool single_chain_covers_all(const PrereqDigraph& g)
{
    const std::size_t n = kStepCount * 2 + 1;
    const std::size_t start = n - 1;
    auto id = [](StepName s, bool live) { return index_of(s) * 2 + (live ? 1 : 0); };
    std::vector<std::vector<std::size_t>> adj(n);

    auto step_into = [&](std::size_t from, StepName to, bool live) {
        if (family(to) == StepFamily::C2 && !live) return;
        adj[from].push_back(id(to, live || family(to) == StepFamily::Infect));
    };
    for (auto s : g.entry) step_into(start, s, false);
    for (auto from : kAllSteps) {
        for (bool live : {false, true}) {
            auto it = g.successors.find(from);
            if (it == g.successors.end()) continue;
            for (auto to : it->second) step_into(id(from, live), to, live);
        }
    }

    std::vector<bool> reach(n, false);
    std::vector<std::size_t> stack{start};
    reach[start] = true;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto w : adj[v]) {
            if (!reach[w]) {
                reach[w] = true;
                stack.push_back(w);
            }
        }
    }
    for (auto s : kAllSteps) {
        if (!reach[id(s, false)] && !reach[id(s, true)]) return false;
    }

    // Transitive closure over at most 25 nodes.
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t v = 0; v < n; ++v) {
        r[v][v] = true;
        for (auto w : adj[v]) r[v][w] = true;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (r[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (r[k][j]) r[i][j] = true;

    // Reachable states must be totally ordered by reachability.
    for (std::size_t i = 0; i < n; ++i) {
        if (!reach[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (reach[j] && !r[i][j] && !r[j][i]) return false;
        }
    }
    return true;
}

} // namespace

std::vector<std::string> digraph_violations(const PrereqDigraph& g)
{
    std::vector<std::string> out;
    for (auto s : kAllSteps) {
        const auto name = std::string(to_string(s));
        if (family(s) == StepFamily::Misc && !g.is_entry(s)) {
            out.push_back("misc step " + name + " is not an entry node");
        }
        if (family(s) == StepFamily::C2 && g.is_entry(s)) {
            out.push_back("C2 step " + name + " is an entry node");
        }
    }
    for (const auto& [from, tos] : g.successors) {
        for (auto to : tos) {
            if (family(to) == StepFamily::C2 && family(from) == StepFamily::Misc) {
                out.push_back("C2 step " + std::string(to_string(to)) + " has misc predecessor " +
                              std::string(to_string(from)));
            }
        }
    }
    if (!single_chain_covers_all(g)) {
        out.push_back("no single chain covers every step");
    }
    return out;
}

bool AttackerState::has_live_channel(const std::string& host) const
{
    auto it = c2_channels.find(host);
    return it != c2_channels.end() && it->second.alive;
}

void AttackerState::kill_channel(const std::string& host)
{
    auto it = c2_channels.find(host);
    if (it != c2_channels.end()) it->second.alive = false;
}

ChainCheck validate_chain(const AttackChain& chain, const PrereqDigraph& g)
{
    std::set<std::string> live;
    std::set<std::string> delivered;
    auto fail = [](std::size_t i, std::string reason, std::string detail) {
        return ChainCheck{false, i, std::move(reason), std::move(detail)};
    };
    for (std::size_t i = 0; i < chain.entries.size(); ++i) {
        const auto& e = chain.entries[i];
        const auto name = std::string(to_string(e.step));
        if (i == 0) {
            if (!g.is_entry(e.step)) return fail(i, "not-entry", name + " is not an entry step");
        } else {
            const auto& prev = chain.entries[i - 1];
            if (!g.has_edge(prev.step, e.step)) {
                return fail(i, "no-edge",
                            "no edge " + std::string(to_string(prev.step)) + " -> " + name);
            }
            if (e.offset <= prev.offset) {
                return fail(i, "offset-order", "offset " + std::to_string(e.offset) +
                                                   " does not follow " + std::to_string(prev.offset));
            }
        }
        if (e.offset < 0) return fail(i, "offset-order", "negative offset");
        if (e.stage != StepStage::Full && e.step != StepName::InfectEmailExe) {
            return fail(i, "invalid-stage", name + " cannot be split into stages");
        }
        if (family(e.step) == StepFamily::C2 && !live.count(e.target)) {
            return fail(i, "no-live-channel", name + " needs a C2 channel on " + e.target);
        }
        switch (e.stage) {
        case StepStage::Deliver: delivered.insert(e.target); break;
        case StepStage::Trigger:
            if (!delivered.erase(e.target)) {
                return fail(i, "no-delivered-mail", "no phishing mail delivered to " + e.target);
            }
            live.insert(e.target);
            break;
        case StepStage::Full:
            if (family(e.step) == StepFamily::Infect) live.insert(e.target);
            break;
        }
    }
    return {};
}

AttackChain generate_chain(const PrereqDigraph& g, const RngStream& stream, std::size_t length,
                           std::span<const Target> targets, SimTime spacing)
{
    AttackChain chain;
    std::set<std::string> live;
    for (std::size_t i = 0; i < length; ++i) {
        auto eligible = [&](StepName s) {
            std::vector<const Target*> out;
            for (const auto& t : targets) {
                if (t.kind != required_target_kind(s)) continue;
                if (family(s) == StepFamily::C2 && !live.count(t.host)) continue;
                out.push_back(&t);
            }
            return out;
        };
        std::vector<StepName> enabled;
        for (auto s : kAllSteps) {
            const bool allowed =
                i == 0 ? g.is_entry(s) : g.has_edge(chain.entries.back().step, s);
            if (allowed && !eligible(s).empty()) enabled.push_back(s);
        }
        if (enabled.empty()) {
            throw ChainGenerationError("no enabled step at position " + std::to_string(i));
        }
        auto sub = stream.derive("position-" + std::to_string(i));
        const auto step = enabled[sub.uniform_index(enabled.size())];
        const auto options = eligible(step);
        const auto* target = options[sub.uniform_index(options.size())];

        ChainEntry e;
        e.step = step;
        e.target = target->host;
        e.offset = static_cast<SimTime>(i) * spacing;
        chain.entries.push_back(std::move(e));
        if (family(step) == StepFamily::Infect) live.insert(target->host);
    }
    return chain;
}

AttackChain exemplary_killchain(std::span<const Target> targets, SimTime spacing)
{
    const Target* web = nullptr;
    std::vector<const Target*> clients;
    for (const auto& t : targets) {
        if (t.kind == HostKind::DMZServer && !web) web = &t;
        if (t.kind == HostKind::Client) clients.push_back(&t);
    }
    if (!web || clients.size() < 2) {
        throw std::invalid_argument("exemplary kill chain needs a DMZ server and two clients");
    }
    const auto& victim = clients[0]->host;
    struct Row {
        StepName step;
        std::string target;
        StepStage stage;
        std::string peer;
        const char* label;
    };
    const std::vector<Row> rows = {
        {StepName::MiscSqlmap, web->host, StepStage::Full, "", "Scan and exploit web server"},
        {StepName::InfectEmailExe, victim, StepStage::Deliver, "", "Send email with malware"},
        {StepName::InfectEmailExe, victim, StepStage::Trigger, "", "Open malicious attachment"},
        {StepName::C2TakeScreenshot, victim, StepStage::Full, "", "Capture screen"},
        {StepName::C2Mimikatz, victim, StepStage::Full, "", "Collect cached credentials"},
        {StepName::C2Exfiltration, victim, StepStage::Full, clients[1]->host,
         "Search network and download files"},
        {StepName::C2DownloadMalware, victim, StepStage::Full, "", "Download custom backdoor"},
        {StepName::MiscSetAutostart, victim, StepStage::Full, "", "Set autostart for backdoor"},
        {StepName::MiscExecuteMalware, victim, StepStage::Full, "", "Execute backdoor"},
    };
    AttackChain chain;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        chain.entries.push_back(
            {r.step, r.target, static_cast<SimTime>(i) * spacing, r.stage, r.peer, r.label});
    }
    return chain;
}

StepExecution execute_step(const ChainEntry& entry, const AttackerState& state, SimTime now,
                           const ScenarioConfig& cfg)
{
    const auto* host = cfg.find_id(entry.target);
    if (!host) {
        throw PrerequisiteError(entry.target, "unknown target host " + entry.target);
    }
    if (host->kind != required_target_kind(entry.step)) {
        throw PrerequisiteError(entry.target, std::string(to_string(entry.step)) +
                                                  " cannot target a " + to_string(host->kind));
    }
    StepExecution out{state, {}};
    auto act = [&](std::string what) { out.actions.push_back({now, entry.target, std::move(what)}); };

    if (family(entry.step) == StepFamily::C2 && !state.has_live_channel(entry.target)) {
        throw PrerequisiteError(entry.target, "no live C2 channel on " + entry.target);
    }
    switch (entry.step) {
    case StepName::InfectEmailExe:
        if (entry.stage != StepStage::Trigger) {
            act("send phishing mail with executable attachment");
            out.state.delivered.insert(entry.target);
        }
        if (entry.stage != StepStage::Deliver) {
            if (!out.state.delivered.erase(entry.target)) {
                throw PrerequisiteError(entry.target, "no phishing mail delivered to " + entry.target);
            }
            act("attachment opened, reverse shell connects");
            out.state.c2_channels[entry.target] = {now, true};
        }
        break;
    case StepName::InfectFlashdriveExe:
        act("autorun executable launched from removable drive");
        out.state.c2_channels[entry.target] = {now, true};
        break;
    case StepName::C2ChangeWallpaper: act("set desktop wallpaper over C2"); break;
    case StepName::C2DownloadMalware: act("download and store backdoor over C2"); break;
    case StepName::C2Exfiltration:
        act("enumerate shares and download documents" +
            (entry.peer.empty() ? std::string{} : " from " + entry.peer));
        break;
    case StepName::C2Mimikatz: act("elevate to SYSTEM and dump cached credentials"); break;
    case StepName::C2TakeScreenshot: act("capture screenshot over C2"); break;
    case StepName::MiscDownloadMalware: act("download executable from web server"); break;
    case StepName::MiscExecuteMalware: act("execute stored executable"); break;
    case StepName::MiscExfiltration: act("copy documents to removable drive"); break;
    case StepName::MiscSetAutostart: act("add Run key for backdoor"); break;
    case StepName::MiscSqlmap: act("run sqlmap against the web application"); break;
    }
    return out;
}

CoverageMatrix tactic_coverage(std::span<const StepName> steps)
{
    CoverageMatrix m;
    for (auto s : steps) m.emplace_back(s, tactics(s));
    return m;
}

TacticSet coverage_union(const CoverageMatrix& m)
{
    TacticSet u;
    for (const auto& [s, t] : m) u |= t;
    return u;
}

nlohmann::json chain_to_json(const AttackChain& chain)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : chain.entries) {
        nlohmann::json j{{"step", std::string(to_string(e.step))},
                         {"target", e.target},
                         {"offset", e.offset}};
        if (e.stage != StepStage::Full) j["stage"] = to_string(e.stage);
        if (!e.peer.empty()) j["peer"] = e.peer;
        if (!e.label.empty()) j["label"] = e.label;
        entries.push_back(std::move(j));
    }
    return {{"schema", kChainSchema}, {"entries", std::move(entries)}};
}

AttackChain chain_from_json(const nlohmann::json& j)
{
    using detail::ObjectReader;
    try {
        ObjectReader root(j, "");
        const auto schema = root.required<std::string>("schema");
        if (schema != kChainSchema) {
            throw detail::JsonFieldError("schema", "expected " + std::string(kChainSchema));
        }
        const auto& arr = detail::require_array(root.raw("entries"), "entries");
        root.finish();
        AttackChain chain;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ObjectReader r(arr[i], "entries[" + std::to_string(i) + "]");
            ChainEntry e;
            const auto step = r.required<std::string>("step");
            auto parsed = parse_step_name(step);
            if (!parsed) throw detail::JsonFieldError(r.path("step"), "unknown step '" + step + "'");
            e.step = *parsed;
            e.target = r.required<std::string>("target");
            e.offset = r.required<SimTime>("offset");
            if (r.has("stage")) {
                try {
                    e.stage = parse_step_stage(r.required<std::string>("stage"));
                } catch (const std::invalid_argument& ex) {
                    throw detail::JsonFieldError(r.path("stage"), ex.what());
                }
            }
            r.optional("peer", e.peer);
            r.optional("label", e.label);
            r.finish();
            chain.entries.push_back(std::move(e));
        }
        return chain;
    } catch (const detail::JsonFieldError& e) {
        throw std::invalid_argument(std::string("chain: ") + e.what());
    }
}

void save_chain(const AttackChain& chain, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << chain_to_json(chain).dump(2) << '\n';
}

AttackChain load_chain(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
    return chain_from_json(j);
}

} // namespace socsim
