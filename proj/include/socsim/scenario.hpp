#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "socsim/kernel.hpp"

namespace socsim {

inline constexpr const char* kScenarioSchema = "socsim.scenario/1";

enum class HostKind { Attacker, InternetRouter, CompanyRouter, Client, InternalServer, DMZServer, LogServer };
enum class OsFamily { Windows, Linux };
enum class Zone { Internet, DMZ, Internal };
enum class LoggingProfile { Default, BestPractice };

inline constexpr std::array kAllHostKinds = {
    HostKind::Attacker,       HostKind::InternetRouter, HostKind::CompanyRouter, HostKind::Client,
    HostKind::InternalServer, HostKind::DMZServer,      HostKind::LogServer,
};

std::string to_string(HostKind kind);
std::string to_string(OsFamily os);
std::string to_string(Zone zone);
std::string to_string(LoggingProfile profile);
HostKind parse_host_kind(const std::string& text);
OsFamily parse_os_family(const std::string& text);
Zone parse_zone(const std::string& text);
LoggingProfile parse_logging_profile(const std::string& text);

/// Zone a host of the given kind is expected to live in.
Zone expected_zone(HostKind kind);

struct ServiceSpec {
    std::string name;
    std::string purpose;
    bool operator==(const ServiceSpec&) const = default;
};

struct HostSpec {
    std::string id;
    HostKind kind = HostKind::Client;
    OsFamily os_family = OsFamily::Windows;
    std::vector<ServiceSpec> services;
    Zone zone = Zone::Internal;
    bool operator==(const HostSpec&) const = default;
};

struct LoggingConfig {
    LoggingProfile profile = LoggingProfile::Default;
    bool advanced_host_audit = false;
    bool verbose_shell_logging = false;

    static LoggingConfig for_profile(LoggingProfile p)
    {
        const bool best = p == LoggingProfile::BestPractice;
        return {p, best, best};
    }
    bool operator==(const LoggingConfig&) const = default;
};

/// A simulated experiment host; only its sensor packet-drop rate matters.
struct HostProfile {
    std::string name = "host-1";
    double drop_rate = 0.0;
    bool operator==(const HostProfile&) const = default;
};

enum class DwellKind { Exponential, Fixed };

/// Duration distribution in seconds. Draws are rounded up to whole seconds, minimum 1.
struct Dwell {
    DwellKind kind = DwellKind::Exponential;
    double mean_seconds = 60.0;
    bool operator==(const Dwell&) const = default;
};

struct WebParams {
    Dwell session{DwellKind::Exponential, 900.0};
    Dwell inactivity{DwellKind::Exponential, 1800.0};
    Dwell click_delay{DwellKind::Exponential, 20.0};
    Dwell routine_gap{DwellKind::Exponential, 45.0};
    double search_probability = 0.5;
    double mean_follows = 3.0; ///< geometric number of link follows per routine
    std::vector<std::string> sites;
    std::vector<std::string> search_terms;
    bool operator==(const WebParams&) const = default;
};

struct EmailParams {
    SimTime poll_interval = 300;
    double compose_probability = 0.3;
    double external_probability = 0.5;
    double attachment_probability = 0.2;
    double link_probability = 0.3;
    SimTime reply_delay = 60;
    std::string external_address = "responder@external.example";
    bool operator==(const EmailParams&) const = default;
};

struct FileParams {
    Dwell interval{DwellKind::Exponential, 120.0};
    std::string folder = "C:\\Users\\user\\Documents\\emulation";
    int filename_pool = 16;
    /// create, delete, append, read, move, copy
    std::array<double, 6> action_weights{1, 1, 1, 1, 1, 1};
    bool operator==(const FileParams&) const = default;
};

struct NoiseParams {
    std::string profile = "windows-top20";
    double dispersion = 0.005;
    bool operator==(const NoiseParams&) const = default;
};

struct EmulationParams {
    WebParams web;
    EmailParams email;
    FileParams file;
    NoiseParams noise;
    bool operator==(const EmulationParams&) const = default;
};

/// Attack-step prerequisite graph in plain text form (step identifiers).
struct AttackGraphSpec {
    std::vector<std::string> entry;
    std::map<std::string, std::vector<std::string>> successors;
    bool operator==(const AttackGraphSpec&) const = default;
};

struct ScenarioConfig {
    std::string schema_version = kScenarioSchema;
    std::string name = "default";
    std::vector<HostSpec> hosts;
    int client_count = 3;
    LoggingConfig logging;
    SimTime attack_idle_seconds = 180;
    SimTime warmup_seconds = 900;
    SimTime run_seconds = 3600;
    HostProfile host_profile;
    EmulationParams emulation;
    std::optional<AttackGraphSpec> attack_graph;

    std::vector<const HostSpec*> clients() const;
    const HostSpec* find_kind(HostKind kind) const;
    const HostSpec* find_id(const std::string& id) const;

    bool operator==(const ScenarioConfig&) const = default;
};

struct Violation {
    std::string code; ///< machine-readable, e.g. "duplicate-host-kind"
    std::string path; ///< field path, e.g. "hosts[3].os_family"
    std::string message;
};

/// Parse failure (kind == Parse) or invariant failure (kind == Validation).
class ScenarioError : public std::runtime_error {
  public:
    enum class Kind { Parse, Validation };
    ScenarioError(Kind kind, std::string path, const std::string& message,
                  std::vector<Violation> violations = {});
    Kind kind() const noexcept { return kind_; }
    const std::string& path() const noexcept { return path_; }
    const std::vector<Violation>& violations() const noexcept { return violations_; }

  private:
    Kind kind_;
    std::string path_;
    std::vector<Violation> violations_;
};

/// The built-in small-company network: seven host kinds, three clients.
ScenarioConfig default_scenario();

/// Client host spec with the built-in client services.
HostSpec make_client(const std::string& id);

std::vector<Violation> validate_scenario(const ScenarioConfig& cfg);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
/// Strict: unknown keys and schema mismatch are parse errors. Does not validate.
ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Reads, parses, and validates. Throws ScenarioError.
ScenarioConfig load_scenario(const std::filesystem::path& path);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// 16-hex-digit hash of the canonical JSON form.
std::string scenario_fingerprint(const ScenarioConfig& cfg);

} // namespace socsim
