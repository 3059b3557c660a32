#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socsim/adversary.hpp"
#include "socsim/logemit.hpp"
#include "socsim/scenario.hpp"

namespace socsim {

struct SimulationOptions {
    bool user_activity = true;
    bool noise = true;
    bool record_transcript = false;
};

struct RunResult {
    LogDataset dataset;
    std::vector<std::string> transcript; ///< one line per processed queue event
    std::size_t processed_events = 0;
    AttackerState attacker;
};

/// Problems that keep a chain from running on a scenario: digraph violations
/// plus unknown or wrong-kind targets. Empty means runnable.
std::vector<std::string> check_chain(const AttackChain& chain, const ScenarioConfig& cfg);

/// One run: user FSMs, noise, and the chain launched at warmup_seconds.
/// Every random draw comes from streams derived from `seed`, so the result is
/// a pure function of (cfg, seed, chain, options). Chain entries scheduled at
/// or after run_seconds are not executed. Throws std::invalid_argument if
/// check_chain reports problems.
RunResult run_simulation(const ScenarioConfig& cfg, std::uint64_t seed, const AttackChain& chain,
                         const SimulationOptions& options = {});

} // namespace socsim
