#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "socsim/attack_steps.hpp"
#include "socsim/kernel.hpp"
#include "socsim/rng.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

inline constexpr const char* kChainSchema = "socsim.chain/1";

/// How much of a step an entry performs. Only infect_email_exe may be split:
/// Deliver sends the phishing mail, Trigger is the user opening the attachment.
enum class StepStage { Full, Deliver, Trigger };

std::string to_string(StepStage stage);
StepStage parse_step_stage(const std::string& text);

struct ChainEntry {
    StepName step = StepName::MiscSqlmap;
    std::string target;
    SimTime offset = 0; ///< seconds after attack launch
    StepStage stage = StepStage::Full;
    std::string peer;   ///< second host touched by lateral movement, may be empty
    std::string label;  ///< human-readable row name, may be empty
    bool operator==(const ChainEntry&) const = default;
};

struct AttackChain {
    std::vector<ChainEntry> entries;
    bool operator==(const AttackChain&) const = default;
};

/// Display name of an entry: its label, or "<step>@<target>".
std::string entry_name(const ChainEntry& e);

/// A host an attack step can be aimed at.
struct Target {
    std::string host;
    HostKind kind = HostKind::Client;
};

/// Targets of a scenario: the DMZ server followed by the clients.
std::vector<Target> scenario_targets(const ScenarioConfig& cfg);

/// misc_sqlmap attacks the DMZ web server; every other step targets a client.
HostKind required_target_kind(StepName step);

struct PrereqDigraph {
    std::vector<StepName> nodes;
    std::set<StepName> entry;
    std::map<StepName, std::set<StepName>> successors;

    bool is_entry(StepName s) const { return entry.count(s) > 0; }
    bool has_edge(StepName from, StepName to) const;
    bool operator==(const PrereqDigraph&) const = default;
};

/// Entry = both infect steps and every misc step. Infect and C2 steps are
/// followed by any C2 step or any entry step; misc steps by any entry step.
PrereqDigraph build_default_digraph();

/// Throws std::invalid_argument on unknown step names.
PrereqDigraph digraph_from_spec(const AttackGraphSpec& spec);
AttackGraphSpec digraph_to_spec(const PrereqDigraph& g);

/// The scenario's attack_graph override, or the default digraph.
PrereqDigraph scenario_digraph(const ScenarioConfig& cfg);

/// Structural problems: misc step not an entry, C2 step with a misc
/// predecessor or in the entry set, or no single chain can cover every node.
std::vector<std::string> digraph_violations(const PrereqDigraph& g);

struct C2Channel {
    SimTime established_at = 0;
    bool alive = true;
    bool operator==(const C2Channel&) const = default;
};

struct AttackerState {
    std::map<std::string, C2Channel> c2_channels;
    std::set<std::string> delivered; ///< clients holding an unopened phishing mail

    bool has_live_channel(const std::string& host) const;
    /// Simulated reboot or process kill on `host`.
    void kill_channel(const std::string& host);
    bool operator==(const AttackerState&) const = default;
};

struct ChainCheck {
    bool valid = true;
    std::size_t index = 0; ///< first violating entry when !valid
    std::string reason;    ///< "not-entry", "no-edge", "offset-order", "no-live-channel", ...
    std::string detail;
};

ChainCheck validate_chain(const AttackChain& chain, const PrereqDigraph& g);

class ChainGenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seeded walk over the digraph. At position i the sub-stream
/// stream.derive("position-i") picks uniformly among enabled steps (digraph
/// successors having at least one eligible target) and then uniformly among
/// eligible targets. C2 steps are eligible only on targets with a live channel.
AttackChain generate_chain(const PrereqDigraph& g, const RngStream& stream, std::size_t length,
                           std::span<const Target> targets, SimTime spacing = 180);

/// Nine-entry espionage chain: sqlmap against the web server, phishing mail
/// sent and opened on the first client, screenshot, credential dump,
/// lateral document theft from the second client, backdoor download,
/// autostart key, backdoor execution.
AttackChain exemplary_killchain(std::span<const Target> targets, SimTime spacing = 180);

class PrerequisiteError : public std::runtime_error {
  public:
    PrerequisiteError(std::string host, const std::string& message)
        : std::runtime_error(message), host_(std::move(host))
    {
    }
    const std::string& host() const noexcept { return host_; }

  private:
    std::string host_;
};

struct AttackAction {
    SimTime at = 0;
    std::string host;
    std::string description;
};

struct StepExecution {
    AttackerState state;
    std::vector<AttackAction> actions;
};

/// Applies one entry to the attacker state. Infect steps (Full or Trigger)
/// open a C2 channel on the target. Throws PrerequisiteError when a C2 step
/// has no live channel or a Trigger has no delivered mail.
StepExecution execute_step(const ChainEntry& entry, const AttackerState& state, SimTime now,
                           const ScenarioConfig& cfg);

using CoverageMatrix = std::vector<std::pair<StepName, TacticSet>>;
CoverageMatrix tactic_coverage(std::span<const StepName> steps);
TacticSet coverage_union(const CoverageMatrix& m);

nlohmann::json chain_to_json(const AttackChain& chain);
/// Throws std::invalid_argument with the offending field.
AttackChain chain_from_json(const nlohmann::json& j);
void save_chain(const AttackChain& chain, const std::filesystem::path& path);
AttackChain load_chain(const std::filesystem::path& path);

} // namespace socsim
