#pragma once

#include <vector>

namespace qgrid {

struct OpponentConfig {
    int budget = 0;      // total lines attackable per episode
    int interval = 10;   // steps between attack opportunities
    int per_attack = 1;  // max lines removed per attack
};

struct AttackState {
    int remaining_budget = 0;
};

// True iff step is an attack step (step mod interval == 0) and budget remains.
bool should_attack(int step, const AttackState& state, const OpponentConfig& cfg);

// Top min(per_attack, remaining_budget, in-service count) in-service lines by
// loading descending, ties broken by lower line id. Greedy selection maximizes
// the summed loading over all subsets of that size.
std::vector<int> select_targets(const std::vector<double>& loading,
                                const std::vector<bool>& line_in_service,
                                const OpponentConfig& cfg,
                                const AttackState& state);

}  // namespace qgrid
