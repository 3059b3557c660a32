#include "socsim/scenario.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "socsim/attack_steps.hpp"
#include "socsim/rng.hpp"

namespace socsim {

using nlohmann::json;
using detail::JsonFieldError;
using detail::ObjectReader;

namespace {

template <class E, std::size_t N>
E parse_enum(const std::string& text, const std::array<std::pair<E, const char*>, N>& table,
             const char* what)
{
    for (const auto& [value, name] : table) {
        if (text == name) return value;
    }
    throw std::invalid_argument(std::string("unknown ") + what + " '" + text + "'");
}

template <class E, std::size_t N>
std::string enum_name(E value, const std::array<std::pair<E, const char*>, N>& table)
{
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    throw std::logic_error("enum value without a name");
}

constexpr std::array<std::pair<HostKind, const char*>, 7> kHostKindNames{{
    {HostKind::Attacker, "Attacker"},
    {HostKind::InternetRouter, "InternetRouter"},
    {HostKind::CompanyRouter, "CompanyRouter"},
    {HostKind::Client, "Client"},
    {HostKind::InternalServer, "InternalServer"},
    {HostKind::DMZServer, "DMZServer"},
    {HostKind::LogServer, "LogServer"},
}};
constexpr std::array<std::pair<OsFamily, const char*>, 2> kOsNames{{
    {OsFamily::Windows, "Windows"},
    {OsFamily::Linux, "Linux"},
}};
constexpr std::array<std::pair<Zone, const char*>, 3> kZoneNames{{
    {Zone::Internet, "Internet"},
    {Zone::DMZ, "DMZ"},
    {Zone::Internal, "Internal"},
}};
constexpr std::array<std::pair<LoggingProfile, const char*>, 2> kProfileNames{{
    {LoggingProfile::Default, "Default"},
    {LoggingProfile::BestPractice, "BestPractice"},
}};
constexpr std::array<std::pair<DwellKind, const char*>, 2> kDwellNames{{
    {DwellKind::Exponential, "exponential"},
    {DwellKind::Fixed, "fixed"},
}};

HostSpec host(std::string id, HostKind kind, std::vector<ServiceSpec> services)
{
    return HostSpec{std::move(id), kind,
                    kind == HostKind::Client ? OsFamily::Windows : OsFamily::Linux,
                    std::move(services), expected_zone(kind)};
}

} // namespace

std::string to_string(HostKind kind) { return enum_name(kind, kHostKindNames); }
std::string to_string(OsFamily os) { return enum_name(os, kOsNames); }
std::string to_string(Zone zone) { return enum_name(zone, kZoneNames); }
std::string to_string(LoggingProfile p) { return enum_name(p, kProfileNames); }
HostKind parse_host_kind(const std::string& t) { return parse_enum(t, kHostKindNames, "host kind"); }
OsFamily parse_os_family(const std::string& t) { return parse_enum(t, kOsNames, "os family"); }
Zone parse_zone(const std::string& t) { return parse_enum(t, kZoneNames, "zone"); }
LoggingProfile parse_logging_profile(const std::string& t)
{
    return parse_enum(t, kProfileNames, "logging profile");
}

Zone expected_zone(HostKind kind)
{
    switch (kind) {
    case HostKind::Attacker:
    case HostKind::InternetRouter: return Zone::Internet;
    case HostKind::DMZServer: return Zone::DMZ;
    default: return Zone::Internal;
    }
}

ScenarioError::ScenarioError(Kind kind, std::string path, const std::string& message,
                             std::vector<Violation> violations)
    : std::runtime_error(path.empty() ? message : path + ": " + message),
      kind_(kind),
      path_(std::move(path)),
      violations_(std::move(violations))
{
}

std::vector<const HostSpec*> ScenarioConfig::clients() const
{
    std::vector<const HostSpec*> out;
    for (const auto& h : hosts) {
        if (h.kind == HostKind::Client) out.push_back(&h);
    }
    return out;
}

const HostSpec* ScenarioConfig::find_kind(HostKind kind) const
{
    for (const auto& h : hosts) {
        if (h.kind == kind) return &h;
    }
    return nullptr;
}

const HostSpec* ScenarioConfig::find_id(const std::string& id) const
{
    for (const auto& h : hosts) {
        if (h.id == id) return &h;
    }
    return nullptr;
}

HostSpec make_client(const std::string& id)
{
    return host(id, HostKind::Client,
                {{"Firefox", "retrieves web pages"},
                 {"User Emulation", "generates user activity, opens email attachments and links"}});
}

ScenarioConfig default_scenario()
{
    ScenarioConfig cfg;
    cfg.hosts = {
        host("attacker", HostKind::Attacker,
             {{"Apache HTTP Server", "serves malicious website"},
              {"Email handler", "responds to emails"},
              {"Metasploit console", "launches cyberattacks"},
              {"Meterpreter HTTP listener", "accepts connections"}}),
        host("internet-router", HostKind::InternetRouter,
             {{"NTP server", "synchronizes time"}, {"Squid", "provides HTTP proxy"}}),
        host("company-router", HostKind::CompanyRouter,
             {{"NTP server", "synchronizes time"}, {"Squid", "provides HTTP proxy"}}),
        host("dmz-server", HostKind::DMZServer,
             {{"Damn Vulnerable Web App", "gets exploited"},
              {"Postfix", "transfers emails"},
              {"Dovecot", "delivers emails"}}),
        host("internal-server", HostKind::InternalServer,
             {{"Samba", "acts as Windows Domain Controller"}}),
        host("log-server", HostKind::LogServer,
             {{"Elasticsearch", "stores log data"},
              {"Logstash", "collects log data"},
              {"Kibana", "searches and visualizes log data"}}),
    };
    for (int i = 1; i <= cfg.client_count; ++i) {
        cfg.hosts.push_back(make_client("client" + std::to_string(i)));
    }
    cfg.emulation.web.sites = {"intranet.company.local", "news.example", "wiki.example",
                               "shop.example", "weather.example", "video.example"};
    cfg.emulation.web.search_terms = {"quarterly report", "train schedule", "python tutorial",
                                      "coffee machine manual", "vpn setup"};
    return cfg;
}

std::vector<Violation> validate_scenario(const ScenarioConfig& cfg)
{
    std::vector<Violation> v;
    auto add = [&](std::string code, std::string path, std::string msg) {
        v.push_back({std::move(code), std::move(path), std::move(msg)});
    };

    if (cfg.schema_version != kScenarioSchema) {
        add("schema-version", "schema_version",
            "expected '" + std::string(kScenarioSchema) + "', got '" + cfg.schema_version + "'");
    }

    std::set<std::string> ids;
    std::map<HostKind, int> kind_count;
    int clients = 0;
    for (std::size_t i = 0; i < cfg.hosts.size(); ++i) {
        const auto& h = cfg.hosts[i];
        const std::string p = "hosts[" + std::to_string(i) + "]";
        if (h.id.empty()) {
            add("empty-host-id", p + ".id", "host id must not be empty");
        } else if (!ids.insert(h.id).second) {
            add("duplicate-host-id", p + ".id", "host id '" + h.id + "' is not unique");
        }
        ++kind_count[h.kind];
        if (h.kind == HostKind::Client) ++clients;
        const OsFamily want_os = h.kind == HostKind::Client ? OsFamily::Windows : OsFamily::Linux;
        if (h.os_family != want_os) {
            add(h.kind == HostKind::Client ? "client-os" : "server-os", p + ".os_family",
                to_string(h.kind) + " hosts must run " + to_string(want_os));
        }
        if (h.zone != expected_zone(h.kind)) {
            add("host-zone", p + ".zone",
                to_string(h.kind) + " hosts belong to zone " + to_string(expected_zone(h.kind)));
        }
        for (std::size_t s = 0; s < h.services.size(); ++s) {
            if (h.services[s].name.empty()) {
                add("empty-service-name", p + ".services[" + std::to_string(s) + "].name",
                    "service name must not be empty");
            }
        }
    }
    for (HostKind kind : kAllHostKinds) {
        if (kind == HostKind::Client) continue;
        const int n = kind_count[kind];
        if (n == 0) {
            add("missing-host-kind", "hosts", "no host of kind " + to_string(kind));
        } else if (n > 1) {
            add("duplicate-host-kind", "hosts",
                std::to_string(n) + " hosts of kind " + to_string(kind) + ", expected exactly one");
        }
    }
    if (cfg.client_count < 1) {
        add("invalid-client-count", "client_count", "client_count must be at least 1");
    } else if (clients != cfg.client_count) {
        add("client-count-mismatch", "client_count",
            "client_count is " + std::to_string(cfg.client_count) + " but " +
                std::to_string(clients) + " Client hosts are listed");
    }

    const auto& lg = cfg.logging;
    const bool best = lg.profile == LoggingProfile::BestPractice;
    if (lg.advanced_host_audit != best || lg.verbose_shell_logging != best) {
        add("logging-profile-inconsistent", "logging",
            "profile " + to_string(lg.profile) + " requires advanced_host_audit and "
                "verbose_shell_logging to be " + (best ? "true" : "false"));
    }

    if (cfg.run_seconds <= 0) add("invalid-run-seconds", "run_seconds", "must be positive");
    if (cfg.warmup_seconds < 0) add("invalid-warmup-seconds", "warmup_seconds", "must be non-negative");
    if (cfg.attack_idle_seconds < 0) {
        add("invalid-idle-seconds", "attack_idle_seconds", "must be non-negative");
    }
    if (cfg.warmup_seconds >= cfg.run_seconds) {
        add("warmup-not-before-end", "warmup_seconds", "warmup_seconds must be < run_seconds");
    }
    if (!(cfg.host_profile.drop_rate >= 0.0 && cfg.host_profile.drop_rate <= 1.0)) {
        add("drop-rate-range", "host_profile.drop_rate", "must lie in [0, 1]");
    }

    const auto& em = cfg.emulation;
    auto check_dwell = [&](const Dwell& d, const std::string& path) {
        if (!(d.mean_seconds > 0.0)) add("invalid-dwell", path, "mean_seconds must be positive");
    };
    auto check_prob = [&](double p, const std::string& path) {
        if (!(p >= 0.0 && p <= 1.0)) add("probability-range", path, "must lie in [0, 1]");
    };
    check_dwell(em.web.session, "emulation.web.session");
    check_dwell(em.web.inactivity, "emulation.web.inactivity");
    check_dwell(em.web.click_delay, "emulation.web.click_delay");
    check_dwell(em.web.routine_gap, "emulation.web.routine_gap");
    check_dwell(em.file.interval, "emulation.file.interval");
    check_prob(em.web.search_probability, "emulation.web.search_probability");
    check_prob(em.email.compose_probability, "emulation.email.compose_probability");
    check_prob(em.email.external_probability, "emulation.email.external_probability");
    check_prob(em.email.attachment_probability, "emulation.email.attachment_probability");
    check_prob(em.email.link_probability, "emulation.email.link_probability");
    if (em.web.mean_follows < 0.0) add("invalid-follows", "emulation.web.mean_follows", "must be >= 0");
    if (em.web.sites.empty()) add("empty-site-list", "emulation.web.sites", "needs at least one site");
    if (em.web.search_terms.empty()) {
        add("empty-search-terms", "emulation.web.search_terms", "needs at least one term");
    }
    if (em.email.poll_interval <= 0) add("invalid-poll-interval", "emulation.email.poll_interval", "must be positive");
    if (em.email.reply_delay < 0) add("invalid-reply-delay", "emulation.email.reply_delay", "must be >= 0");
    if (em.file.filename_pool < 1) add("invalid-filename-pool", "emulation.file.filename_pool", "must be >= 1");
    double weight_sum = 0.0;
    for (double w : em.file.action_weights) {
        if (w < 0.0) add("invalid-action-weight", "emulation.file.action_weights", "weights must be >= 0");
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) add("invalid-action-weight", "emulation.file.action_weights", "weights sum to zero");
    if (em.noise.profile != "windows-top20" && em.noise.profile != "none") {
        add("unknown-noise-profile", "emulation.noise.profile", "unknown noise profile '" + em.noise.profile + "'");
    }
    if (!(em.noise.dispersion > 0.0)) add("invalid-dispersion", "emulation.noise.dispersion", "must be positive");

    if (cfg.attack_graph) {
        auto check_name = [&](const std::string& name, const std::string& path) {
            if (!parse_step_name(name)) add("unknown-attack-step", path, "unknown attack step '" + name + "'");
        };
        for (std::size_t i = 0; i < cfg.attack_graph->entry.size(); ++i) {
            check_name(cfg.attack_graph->entry[i], "attack_graph.entry[" + std::to_string(i) + "]");
        }
        for (const auto& [from, tos] : cfg.attack_graph->successors) {
            check_name(from, "attack_graph.successors." + from);
            for (const auto& to : tos) check_name(to, "attack_graph.successors." + from);
        }
    }
    return v;
}

// --- JSON -------------------------------------------------------------------

namespace {

json dwell_to_json(const Dwell& d)
{
    return {{"kind", enum_name(d.kind, kDwellNames)}, {"mean_seconds", d.mean_seconds}};
}

Dwell dwell_from_json(const json& j, const std::string& path)
{
    ObjectReader r(j, path);
    Dwell d;
    if (r.has("kind")) {
        const auto text = r.required<std::string>("kind");
        try {
            d.kind = parse_enum(text, kDwellNames, "dwell kind");
        } catch (const std::invalid_argument& e) {
            throw JsonFieldError(r.path("kind"), e.what());
        }
    }
    d.mean_seconds = r.required<double>("mean_seconds");
    r.finish();
    return d;
}

template <class E, std::size_t N>
E enum_field(ObjectReader& r, const std::string& key, const std::array<std::pair<E, const char*>, N>& table,
             const char* what)
{
    const auto text = r.required<std::string>(key);
    try {
        return parse_enum(text, table, what);
    } catch (const std::invalid_argument& e) {
        throw JsonFieldError(r.path(key), e.what());
    }
}

std::vector<std::string> string_list(const json& j, const std::string& path)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < detail::require_array(j, path).size(); ++i) {
        out.push_back(ObjectReader::convert<std::string>(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

} // namespace

json scenario_to_json(const ScenarioConfig& cfg)
{
    json hosts = json::array();
    for (const auto& h : cfg.hosts) {
        json services = json::array();
        for (const auto& s : h.services) services.push_back({{"name", s.name}, {"purpose", s.purpose}});
        hosts.push_back({{"id", h.id},
                         {"kind", to_string(h.kind)},
                         {"os_family", to_string(h.os_family)},
                         {"zone", to_string(h.zone)},
                         {"services", services}});
    }
    const auto& em = cfg.emulation;
    json j = {
        {"schema_version", cfg.schema_version},
        {"name", cfg.name},
        {"hosts", hosts},
        {"client_count", cfg.client_count},
        {"logging",
         {{"profile", to_string(cfg.logging.profile)},
          {"advanced_host_audit", cfg.logging.advanced_host_audit},
          {"verbose_shell_logging", cfg.logging.verbose_shell_logging}}},
        {"attack_idle_seconds", cfg.attack_idle_seconds},
        {"warmup_seconds", cfg.warmup_seconds},
        {"run_seconds", cfg.run_seconds},
        {"host_profile", {{"name", cfg.host_profile.name}, {"drop_rate", cfg.host_profile.drop_rate}}},
        {"emulation",
         {{"web",
           {{"session", dwell_to_json(em.web.session)},
            {"inactivity", dwell_to_json(em.web.inactivity)},
            {"click_delay", dwell_to_json(em.web.click_delay)},
            {"routine_gap", dwell_to_json(em.web.routine_gap)},
            {"search_probability", em.web.search_probability},
            {"mean_follows", em.web.mean_follows},
            {"sites", em.web.sites},
            {"search_terms", em.web.search_terms}}},
          {"email",
           {{"poll_interval", em.email.poll_interval},
            {"compose_probability", em.email.compose_probability},
            {"external_probability", em.email.external_probability},
            {"attachment_probability", em.email.attachment_probability},
            {"link_probability", em.email.link_probability},
            {"reply_delay", em.email.reply_delay},
            {"external_address", em.email.external_address}}},
          {"file",
           {{"interval", dwell_to_json(em.file.interval)},
            {"folder", em.file.folder},
            {"filename_pool", em.file.filename_pool},
            {"action_weights", em.file.action_weights}}},
          {"noise", {{"profile", em.noise.profile}, {"dispersion", em.noise.dispersion}}}}},
    };
    if (cfg.attack_graph) {
        j["attack_graph"] = {{"entry", cfg.attack_graph->entry}, {"successors", cfg.attack_graph->successors}};
    }
    return j;
}

ScenarioConfig scenario_from_json(const json& j)
{
    try {
        ObjectReader r(j, "");
        ScenarioConfig cfg;
        cfg.schema_version = r.required<std::string>("schema_version");
        if (cfg.schema_version != kScenarioSchema) {
            throw JsonFieldError("schema_version", "unsupported schema '" + cfg.schema_version +
                                                       "', expected '" + kScenarioSchema + "'");
        }
        r.optional("name", cfg.name);

        cfg.hosts.clear();
        const auto& hosts = detail::require_array(r.raw("hosts"), "hosts");
        for (std::size_t i = 0; i < hosts.size(); ++i) {
            ObjectReader hr(hosts[i], "hosts[" + std::to_string(i) + "]");
            HostSpec h;
            h.id = hr.required<std::string>("id");
            h.kind = enum_field(hr, "kind", kHostKindNames, "host kind");
            h.os_family = h.kind == HostKind::Client ? OsFamily::Windows : OsFamily::Linux;
            if (hr.has("os_family")) h.os_family = enum_field(hr, "os_family", kOsNames, "os family");
            h.zone = expected_zone(h.kind);
            if (hr.has("zone")) h.zone = enum_field(hr, "zone", kZoneNames, "zone");
            if (hr.has("services")) {
                const auto path = hr.path("services");
                const auto& services = detail::require_array(hr.raw("services"), path);
                for (std::size_t s = 0; s < services.size(); ++s) {
                    ObjectReader sr(services[s], path + "[" + std::to_string(s) + "]");
                    ServiceSpec svc;
                    svc.name = sr.required<std::string>("name");
                    sr.optional("purpose", svc.purpose);
                    sr.finish();
                    h.services.push_back(std::move(svc));
                }
            }
            hr.finish();
            cfg.hosts.push_back(std::move(h));
        }

        r.optional("client_count", cfg.client_count);
        // A host list without Client entries gets client_count clones of the
        // built-in client.
        if (cfg.clients().empty()) {
            for (int i = 1; i <= cfg.client_count; ++i) {
                cfg.hosts.push_back(make_client("client" + std::to_string(i)));
            }
        }
        if (r.has("logging")) {
            ObjectReader lr(r.raw("logging"), "logging");
            cfg.logging.profile = enum_field(lr, "profile", kProfileNames, "logging profile");
            cfg.logging = LoggingConfig::for_profile(cfg.logging.profile);
            lr.optional("advanced_host_audit", cfg.logging.advanced_host_audit);
            lr.optional("verbose_shell_logging", cfg.logging.verbose_shell_logging);
            lr.finish();
        }
        r.optional("attack_idle_seconds", cfg.attack_idle_seconds);
        r.optional("warmup_seconds", cfg.warmup_seconds);
        r.optional("run_seconds", cfg.run_seconds);
        if (r.has("host_profile")) {
            ObjectReader pr(r.raw("host_profile"), "host_profile");
            pr.optional("name", cfg.host_profile.name);
            pr.optional("drop_rate", cfg.host_profile.drop_rate);
            pr.finish();
        }

        // Emulation defaults come from the built-in scenario.
        cfg.emulation = default_scenario().emulation;
        if (r.has("emulation")) {
            ObjectReader er(r.raw("emulation"), "emulation");
            auto& em = cfg.emulation;
            if (er.has("web")) {
                ObjectReader w(er.raw("web"), "emulation.web");
                if (w.has("session")) em.web.session = dwell_from_json(w.raw("session"), w.path("session"));
                if (w.has("inactivity")) em.web.inactivity = dwell_from_json(w.raw("inactivity"), w.path("inactivity"));
                if (w.has("click_delay")) em.web.click_delay = dwell_from_json(w.raw("click_delay"), w.path("click_delay"));
                if (w.has("routine_gap")) em.web.routine_gap = dwell_from_json(w.raw("routine_gap"), w.path("routine_gap"));
                w.optional("search_probability", em.web.search_probability);
                w.optional("mean_follows", em.web.mean_follows);
                if (w.has("sites")) em.web.sites = string_list(w.raw("sites"), w.path("sites"));
                if (w.has("search_terms")) em.web.search_terms = string_list(w.raw("search_terms"), w.path("search_terms"));
                w.finish();
            }
            if (er.has("email")) {
                ObjectReader m(er.raw("email"), "emulation.email");
                m.optional("poll_interval", em.email.poll_interval);
                m.optional("compose_probability", em.email.compose_probability);
                m.optional("external_probability", em.email.external_probability);
                m.optional("attachment_probability", em.email.attachment_probability);
                m.optional("link_probability", em.email.link_probability);
                m.optional("reply_delay", em.email.reply_delay);
                m.optional("external_address", em.email.external_address);
                m.finish();
            }
            if (er.has("file")) {
                ObjectReader f(er.raw("file"), "emulation.file");
                if (f.has("interval")) em.file.interval = dwell_from_json(f.raw("interval"), f.path("interval"));
                f.optional("folder", em.file.folder);
                f.optional("filename_pool", em.file.filename_pool);
                if (f.has("action_weights")) {
                    const auto path = f.path("action_weights");
                    const auto& arr = detail::require_array(f.raw("action_weights"), path);
                    if (arr.size() != 6) throw JsonFieldError(path, "expected 6 weights");
                    for (std::size_t i = 0; i < 6; ++i) {
                        em.file.action_weights[i] = ObjectReader::convert<double>(arr[i], path);
                    }
                }
                f.finish();
            }
            if (er.has("noise")) {
                ObjectReader n(er.raw("noise"), "emulation.noise");
                n.optional("profile", em.noise.profile);
                n.optional("dispersion", em.noise.dispersion);
                n.finish();
            }
            er.finish();
        }

        if (r.has("attack_graph")) {
            ObjectReader g(r.raw("attack_graph"), "attack_graph");
            AttackGraphSpec spec;
            spec.entry = string_list(g.raw("entry"), g.path("entry"));
            const auto& succ = g.raw("successors");
            ObjectReader sr(succ, g.path("successors"));
            for (const auto& [from, tos] : succ.items()) {
                spec.successors[from] = string_list(sr.raw(from), sr.path(from));
            }
            sr.finish();
            g.finish();
            cfg.attack_graph = std::move(spec);
        }
        r.finish();
        return cfg;
    } catch (const JsonFieldError& e) {
        throw ScenarioError(ScenarioError::Kind::Parse, e.path, e.what());
    }
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError(ScenarioError::Kind::Parse, "", "cannot open scenario file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(ScenarioError::Kind::Parse, "", std::string("malformed scenario file: ") + e.what());
    }
    ScenarioConfig cfg = scenario_from_json(j);
    auto violations = validate_scenario(cfg);
    if (!violations.empty()) {
        const auto first = violations.front();
        throw ScenarioError(ScenarioError::Kind::Validation, first.path,
                            first.code + ": " + first.message, std::move(violations));
    }
    return cfg;
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file " + path.string());
    out << scenario_to_json(cfg).dump(2) << '\n';
}

std::string scenario_fingerprint(const ScenarioConfig& cfg)
{
    return detail::hex64(mix64(fnv1a64(scenario_to_json(cfg).dump())));
}

} // namespace socsim
