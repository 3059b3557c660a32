#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "socsim/adversary.hpp"
#include "socsim/detection.hpp"
#include "socsim/scenario.hpp"
#include "socsim/simulation.hpp"
#include "socsim/stats.hpp"

namespace socsim {

inline constexpr const char* kPlanSchema = "socsim.plan/1";
inline constexpr const char* kResultsSchema = "socsim.results/1";

/// Auto-extension for the variation analysis: add `batch` iterations at a
/// time until n >= min_iterations and both samples vary, or n reaches cap.
struct VariationPolicy {
    std::size_t min_iterations = 150;
    std::size_t cap = 200;
    std::size_t batch = 10;
    double alpha = 0.05;
    bool operator==(const VariationPolicy&) const = default;
};

struct ExperimentPlan {
    ScenarioConfig scenario; ///< logging and host_profile are replaced per cell
    std::size_t iterations = 10;
    std::vector<HostProfile> profiles;
    std::vector<LoggingProfile> logging;
    std::uint64_t root_seed = 1;
    AttackChain chain;
    std::vector<DetectionRule> rules;
    VariationPolicy variation;
    bool background = true; ///< user activity and noise; attack-only when false
};

/// Default scenario, n = 10, hosts at drop rates 0.0030 and 0.0005, both
/// logging profiles, the exemplary kill chain, and the shipped ruleset.
ExperimentPlan default_plan();

std::vector<std::string> validate_plan(const ExperimentPlan& plan);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
/// Relative ruleset paths resolve against `base_dir`. Throws std::invalid_argument.
ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentPlan load_plan(const std::filesystem::path& path);

/// Iteration seeds ignore the logging profile, so Default and BestPractice
/// cells with the same profile and index form same-seed pairs.
std::uint64_t iteration_seed(std::uint64_t root_seed, const std::string& profile, std::size_t iteration);

ScenarioConfig cell_scenario(const ExperimentPlan& plan, std::size_t profile, std::size_t logging);

struct IterationResult {
    std::size_t profile = 0;
    std::size_t logging = 0;
    std::size_t iteration = 0;
    std::uint64_t seed = 0;
    std::vector<int> step_counts;
    std::map<std::string, int> rule_counts; ///< every plan rule, attributed alerts only
    int detected = 0;
    std::string fingerprint;
    bool operator==(const IterationResult&) const = default;
};

struct ResultsMatrix {
    std::vector<std::string> profile_names;
    std::vector<LoggingProfile> logging;
    std::size_t iterations = 0;
    std::vector<std::string> step_labels;
    std::vector<IterationResult> results; ///< ordered by (profile, logging, iteration)

    const IterationResult& at(std::size_t profile, std::size_t logging, std::size_t iteration) const;
    bool operator==(const ResultsMatrix&) const = default;
};

class ExperimentError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

IterationResult run_iteration(const ExperimentPlan& plan, std::size_t profile, std::size_t logging,
                              std::size_t iteration, bool background);

/// Runs every cell. Iterations may run on `threads` workers (0 = hardware
/// concurrency); the matrix order never depends on completion order.
/// Failures are rethrown as ExperimentError naming the cell.
ResultsMatrix run_experiment(const ExperimentPlan& plan, unsigned threads = 1);

nlohmann::json results_to_json(const ResultsMatrix& m);
ResultsMatrix results_from_json(const nlohmann::json& j);

struct VariationEntry {
    std::string rule;
    LoggingProfile logging = LoggingProfile::Default;
    std::size_t n = 0;
    SummaryStats a;
    SummaryStats b;
    std::optional<WelchResult> welch; ///< absent when both samples stayed constant up to the cap
};

struct VariationReport {
    std::string profile_a;
    std::string profile_b;
    std::vector<VariationEntry> entries;
};

/// Compares the first two profiles for every rule whose count varies in any
/// cell. Extra iterations beyond the matrix are attack-only runs, which give
/// the same network alert counts as full runs with the same seed.
VariationReport variation_report(const ResultsMatrix& m, const ExperimentPlan& plan, unsigned threads = 1);

nlohmann::json variation_to_json(const VariationReport& r);
std::string render_variation(const VariationReport& r);

struct Table2 {
    std::string text;
    nlohmann::json json;
};

/// Per profile: one row per chain entry with mean and SD under each logging
/// profile, plus the detected-step row. Throws on an empty matrix.
Table2 render_table2(const ResultsMatrix& m);

} // namespace socsim
