#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "socsim/adversary.hpp"
#include "socsim/rng.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

struct SelfTestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelfTestReport {
    std::vector<SelfTestCheck> checks; ///< sorted by name
    bool overall = false;
};

using StreamFactory = std::function<RngStream(std::uint64_t, LabelPath)>;

/// Hooks for swapping components under test. Defaults are the shipped ones.
struct SelfTestOptions {
    std::optional<std::filesystem::path> ruleset_path; ///< default: built-in ruleset
    std::optional<PrereqDigraph> digraph;              ///< default: the scenario's digraph
    StreamFactory stream_factory;                       ///< default: derive_stream
    std::optional<std::string> only;                    ///< run a single named check
};

/// Names of all checks, sorted.
std::vector<std::string> selftest_names();

/// Runs the checks in a temporary directory; never touches user files.
/// Unknown `only` names throw std::invalid_argument.
SelfTestReport run_selftests(const ScenarioConfig& scenario, const SelfTestOptions& options = {});

} // namespace socsim
