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
#include "socsim/adversary.hpp"
#include "socsim/logemit.hpp"

namespace socsim {

inline constexpr const char* kRulesetSchema = "socsim.ruleset/1";

enum class RuleKind { HostRule, NetworkRule };
enum class MatchOp { Equals, Prefix, Contains };

std::string to_string(RuleKind k);
std::string to_string(MatchOp op);

/// Field is one of "source", "provider", "event_id", "host" or "fields.<key>".
struct Matcher {
    std::string field;
    MatchOp op = MatchOp::Equals;
    std::string value;
    bool operator==(const Matcher&) const = default;
};

struct DetectionRule {
    std::string name;
    RuleKind kind = RuleKind::NetworkRule;
    std::vector<Matcher> predicate; ///< conjunction

    /// Never reads the event's cause tag.
    bool matches(const LogEvent& e) const;
    bool operator==(const DetectionRule&) const = default;
};

class RulesetError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The pinned 25-rule set: 5 host rules, 20 network rules.
std::vector<DetectionRule> default_ruleset();

/// Structural checks: unique names, known fields, no cause reference, and a
/// `source equals` matcher whose source fits the rule kind. Throws RulesetError.
void check_ruleset(std::span<const DetectionRule> rules);

nlohmann::json ruleset_to_json(std::span<const DetectionRule> rules);
/// Parses and checks. Throws RulesetError.
std::vector<DetectionRule> ruleset_from_json(const nlohmann::json& j);
std::vector<DetectionRule> load_ruleset(const std::filesystem::path& path);
void save_ruleset(std::span<const DetectionRule> rules, const std::filesystem::path& path);

struct Alert {
    std::string rule;
    SimTime timestamp = 0;
    std::string host;
    std::size_t event_index = 0; ///< position in the dataset's event list
    bool operator==(const Alert&) const = default;
};

/// One alert per (rule, matching event), ordered by event then rule order.
std::vector<Alert> apply_rules(std::span<const LogEvent> events, std::span<const DetectionRule> rules);
std::vector<Alert> apply_rules(const LogDataset& ds, std::span<const DetectionRule> rules);

struct AttributionWindow {
    std::size_t entry = 0;
    SimTime begin = 0; ///< inclusive
    SimTime end = 0;   ///< exclusive
};

/// [launch + offset_i, launch + offset_{i+1}); the last window runs to run_end.
std::vector<AttributionWindow> attribution_windows(const AttackChain& chain, SimTime attack_start,
                                                   SimTime run_end);

/// Alert count per chain entry by time window. Alerts before the first window
/// or outside the allowlist (when given) are discarded.
std::vector<int> attribute_alerts(std::span<const Alert> alerts, const AttackChain& chain,
                                  SimTime attack_start, SimTime run_end,
                                  const std::set<std::string>* allowlist = nullptr);

/// Entries with at least one alert.
int detected_steps(std::span<const int> counts);

/// First rule name alerting under Default but not under BestPractice.
std::optional<std::string> superset_check(std::span<const Alert> alerts_default,
                                          std::span<const Alert> alerts_best);

std::map<std::string, int> count_by_rule(std::span<const Alert> alerts);

} // namespace socsim
