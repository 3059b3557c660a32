#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socsim/adversary.hpp"
#include "socsim/kernel.hpp"
#include "socsim/rng.hpp"
#include "socsim/scenario.hpp"
#include "socsim/useremu.hpp"

namespace socsim {

inline constexpr const char* kDatasetSchema = "socsim.dataset/1";
inline constexpr const char* kTruthSchema = "socsim.truth/1";

enum class LogSource {
    HostAudit,         ///< Windows event log with default audit policy
    AdvancedHostAudit, ///< Sysmon, best-practice only
    ShellLog,          ///< PowerShell script block logging, best-practice only
    Syslog,
    NetworkIDS,
    NetworkFlow,
    ProxyLog,
    FirewallLog,
    UserActivityLog,
};

inline constexpr std::array kAllLogSources = {
    LogSource::HostAudit,   LogSource::AdvancedHostAudit, LogSource::ShellLog,
    LogSource::Syslog,      LogSource::NetworkIDS,        LogSource::NetworkFlow,
    LogSource::ProxyLog,    LogSource::FirewallLog,       LogSource::UserActivityLog,
};

std::string to_string(LogSource s);
std::optional<LogSource> parse_log_source(const std::string& text);
bool is_network_source(LogSource s);

struct LogEvent {
    SimTime timestamp = 0;
    std::string host;
    LogSource source = LogSource::HostAudit;
    std::string provider;
    int event_id = 0;
    std::map<std::string, std::string> fields;
    /// Ground truth: "<chain index>:<step>" for attack events. Never visible to rules.
    std::optional<std::string> cause;

    bool operator==(const LogEvent&) const = default;
};

/// A network-sensor observation. Only drop-eligible observations can be lost;
/// `packets` is how many packets the sensor must capture for the signature to
/// fire, so the observation survives with probability (1 - rate)^packets.
struct NetworkObservation {
    LogEvent event;
    bool drop_eligible = false;
    int packets = 1;
};

/// Removes drop-eligible observations independently, one uniform draw each.
/// Observations that are not drop-eligible consume no draws.
std::vector<NetworkObservation> apply_drop(std::vector<NetworkObservation> observations,
                                           double drop_rate, RngStream& stream);

struct NoiseEntry {
    std::string provider;
    int event_id = 0;
    double mean_count = 0.0; ///< per run
    LogSource source = LogSource::HostAudit;
    bool operator==(const NoiseEntry&) const = default;
};

struct NoiseProfile {
    std::vector<NoiseEntry> entries;
    double dispersion = 0.005; ///< negative binomial: Var = m + dispersion * m^2
};

/// The twenty most frequent Windows event types on the clients.
NoiseProfile default_noise_profile(double dispersion = 0.005);

/// Background events that only exist with Sysmon and script block logging on.
/// The means are placeholders; none of these events matches a shipped rule.
NoiseProfile best_practice_noise_profile(double dispersion = 0.005);

/// Per entry: count ~ NegBin(mean, dispersion) from the entry's sub-stream
/// stream.derive("<provider>/<event_id>"), then uniform timestamps in
/// [0, run_seconds) and uniform hosts. Throws if run_seconds <= 0 or hosts is empty.
std::vector<LogEvent> emit_noise(const NoiseProfile& profile, SimTime run_seconds,
                                 const RngStream& stream, std::span<const std::string> hosts);

/// One attack step's events. Host events absent from the scenario's logging
/// configuration are filtered out; network observations pass through
/// apply_drop with the scenario's host-profile drop rate.
std::vector<LogEvent> emit_attack_events(const ChainEntry& entry, std::size_t chain_index,
                                         const ScenarioConfig& cfg, SimTime now, RngStream& drop_stream);

/// Network observations of one step before drops, for inspection and tests.
std::vector<NetworkObservation> attack_network_observations(const ChainEntry& entry,
                                                            std::size_t chain_index,
                                                            const ScenarioConfig& cfg, SimTime now);

/// Log records for a user-emulation event. Timers produce nothing.
std::vector<LogEvent> user_activity_events(const UserEvent& ev, const ScenarioConfig& cfg);

struct LogDataset {
    std::string schema = kDatasetSchema;
    std::string fingerprint;
    std::uint64_t seed = 0;
    std::vector<LogEvent> events;
    AttackChain ground_truth;
    SimTime attack_start = 0;
    SimTime run_end = 0;

    bool operator==(const LogDataset&) const = default;
};

/// 16 hex digits over the canonical scenario JSON, the seed, and the chain.
std::string dataset_fingerprint(const ScenarioConfig& cfg, std::uint64_t seed, const AttackChain& chain);

struct RunOutputs {
    const ScenarioConfig* scenario = nullptr;
    std::uint64_t seed = 0;
    AttackChain chain;
    std::vector<LogEvent> attack;
    std::vector<LogEvent> user;
    std::vector<LogEvent> noise;
};

/// Merges attack, user, and noise events (in that sequence order) and sorts
/// stably by (timestamp, host).
LogDataset assemble_dataset(RunOutputs outputs);

class DatasetFormatError : public std::runtime_error {
  public:
    DatasetFormatError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Sidecar holding the chain and per-event cause tags.
std::filesystem::path truth_path(const std::filesystem::path& dataset_path);

/// JSON Lines: a header record then one record per event. Cause tags and the
/// chain go to the sidecar unless `with_truth` is false.
void export_dataset(const LogDataset& ds, const std::filesystem::path& path, bool with_truth = true);

/// Throws DatasetFormatError with the offending line. A missing sidecar
/// yields a dataset without ground truth; check `has_truth`.
LogDataset import_dataset(const std::filesystem::path& path, bool* has_truth = nullptr);

/// Copy of the dataset with every cause tag removed.
LogDataset strip_causes(LogDataset ds);

} // namespace socsim
