#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qgrid/gridenv.hpp"
#include "qgrid/ppo.hpp"

namespace qgrid {

struct ContingencyCase {
    std::vector<int> removed_lines;  // k distinct line ids, ascending
    long case_index = 0;             // ordinal within the lexicographic enumeration
};

long binomial(int n, int k);

// All k-subsets of {0..n_lines-1} in lexicographic order.
std::vector<ContingencyCase> enumerate_contingencies(int n_lines, int k);

enum class AgentKind { Policy, DoNothing, Random };

// Policy agents act greedily (argmax over the action distribution); the
// random baseline samples uniformly over the full action space.
struct ScreeningAgent {
    AgentKind kind = AgentKind::DoNothing;
    std::string label = "donothing";
    const PolicyNetwork* net = nullptr;  // required for AgentKind::Policy
    QuantumConfig quantum;               // quantum-path settings for Policy
};

struct ContingencyResult {
    long case_index = 0;
    std::vector<int> removed_lines;
    int steps_survived = 0;
    double cumulative_reward = 0.0;
    int cascade_count = 0;
    bool blackout = false;
};

struct ScreeningReport {
    int k = 0;
    std::string agent_label;
    std::string grid_fingerprint;
    std::vector<ContingencyResult> results;  // ordered by case_index
    double mean_steps_survived = 0.0;
    double mean_cumulative_reward = 0.0;
    double blackout_fraction = 0.0;
    std::map<int, double> cascade_histogram;  // cascade count -> relative frequency
};

// One episode with the case's lines initially out (already on cooldown),
// under the configured opponent and load scale. An initial state that is
// already blacked out records zero steps survived.
ContingencyResult run_case(const GridSpec& grid, const EnvConfig& env_cfg,
                           const ContingencyCase& c, const ScreeningAgent& agent,
                           std::uint64_t case_seed);

// Means plus the normalized cascade-count histogram.
ScreeningReport aggregate(std::vector<ContingencyResult> results);

// Full enumeration at the given k. Per-case seeds derive from (seed,
// case_index), so worker scheduling cannot change any result; n_workers <= 1
// runs sequentially.
ScreeningReport run_screening(const GridSpec& grid, const EnvConfig& env_cfg, int k,
                              const ScreeningAgent& agent, std::uint64_t seed, int n_workers);

void write_cases_csv(const std::string& path, const ScreeningReport& report);
void write_histogram_csv(const std::string& path, const ScreeningReport& report);
void write_summary_json(const std::string& path, const ScreeningReport& report);
ScreeningReport read_summary_json(const std::string& path);

}  // namespace qgrid
