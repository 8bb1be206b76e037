#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qgrid/gcn.hpp"
#include "qgrid/grid.hpp"
#include "qgrid/opponent.hpp"
#include "qgrid/rng.hpp"

namespace qgrid {

enum class ActionKind { Noop, Disconnect, Reconnect };

struct Action {
    ActionKind kind = ActionKind::Noop;
    int line = -1;
};

// Discrete action indexing: 0 = noop, 1 + 2*line = disconnect(line),
// 2 + 2*line = reconnect(line).
int action_space_size(int n_lines);
Action decode_action(int index, int n_lines);
int encode_action(const Action& a, int n_lines);

struct RewardCoefficients {
    double overload = 0.5;
    double topo_change = 0.1;
    double action = 0.05;
};

struct RewardBreakdown {
    double survival = 0.0;
    double overload = 0.0;
    double topo_change = 0.0;
    double action = 0.0;
    double total() const { return survival + overload + topo_change + action; }
};

// survival +1 when alive; overload -c_o * sum_i max(0, loading_i - 1);
// topo_change -c_c when the agent changed the in-service set; action -c_a
// when the submitted action was not noop.
RewardBreakdown compute_reward(bool alive, const std::vector<double>& loading,
                               bool agent_changed_topology, bool action_not_noop,
                               const RewardCoefficients& coef);

struct EnvConfig {
    double load_scale = 1.0;
    double load_sigma = 0.02;          // per-step multiplicative lognormal noise
    int overload_window = 3;           // consecutive overloaded steps before a trip
    int reconnect_cooldown = 5;        // steps a line stays locked out
    int max_steps = 100;
    double blackout_unserved_fraction = 0.5;
    RewardCoefficients reward;
    OpponentConfig opponent;
};

struct TripOutcome {
    std::vector<int> tripped;  // line ids in trip order
    int passes_with_trips = 0;
};

struct StepRecord {
    int step = 0;
    int action_index = 0;
    bool action_legal = true;
    std::vector<int> attacked;
    std::vector<int> tripped;
    double reward = 0.0;
    double max_loading = 0.0;
    double unserved_mw = 0.0;
    int cascade_passes = 0;
    bool blackout = false;
    bool done = false;
};

struct StepResult {
    RewardBreakdown reward;
    bool done = false;
    bool blackout = false;
    bool action_was_legal = true;
    std::vector<int> attacked;
    std::vector<int> tripped;
};

class GridEnv {
public:
    GridEnv(GridSpec spec, EnvConfig cfg);

    // Fresh episode. The overload with initially_out starts the episode with
    // those lines already on cooldown; an initial state that already meets
    // the blackout condition ends the episode at zero steps survived.
    void reset(std::uint64_t seed);
    void reset(std::uint64_t seed, const std::vector<int>& initially_out);

    // One transition: cooldowns tick, opponent attacks, agent acts (an
    // illegal action degrades to noop, penalized and logged), loads jitter,
    // power flow resolves, overloads trip, blackout/step-limit checked.
    StepResult step(const Action& action);
    StepResult step_index(int action_index);

    // Per-bus features: net injection p.u., mean incident in-service loading,
    // incident out-of-service count, normalized step index. Edges are the
    // in-service lines.
    ObservationGraph observe() const;
    static constexpr int kObservationDim = 4;

    // Overload aging and trip/re-solve loop; exposed for direct testing.
    // Trips never add lines to service; cascade_count grows by one per pass
    // after the first that tripped anything.
    TripOutcome trip_overloads();

    const GridSpec& spec() const { return spec_; }
    const std::vector<bool>& line_in_service() const { return in_service_; }
    const std::vector<double>& loading() const { return pf_.loading; }
    const std::vector<int>& overload_age() const { return overload_age_; }
    const std::vector<int>& reconnect_cooldown() const { return cooldown_; }
    const PowerFlowResult& power_flow() const { return pf_; }
    const std::vector<double>& bus_load_mw() const { return load_mw_; }
    int step_index() const { return step_count_; }
    bool done() const { return done_; }
    bool blackout() const { return blackout_; }
    bool alive() const { return !blackout_; }
    int steps_survived() const { return steps_survived_; }
    int cascade_count() const { return cascade_count_; }
    double cumulative_reward() const { return cumulative_reward_; }
    const AttackState& attack_state() const { return attack_; }
    int n_lines() const { return spec_.n_lines(); }
    int n_buses() const { return spec_.n_buses(); }

    const std::vector<StepRecord>& trace() const { return trace_; }
    void write_trace_csv(const std::string& path) const;

private:
    void solve();
    bool blackout_condition() const;

    GridSpec spec_;
    EnvConfig cfg_;
    Rng rng_;
    std::vector<bool> in_service_;
    std::vector<int> cooldown_;
    std::vector<int> overload_age_;
    std::vector<double> load_mw_;
    PowerFlowResult pf_;
    AttackState attack_;
    int step_count_ = 0;
    int steps_survived_ = 0;
    int cascade_count_ = 0;
    bool done_ = true;
    bool blackout_ = false;
    double cumulative_reward_ = 0.0;
    std::vector<StepRecord> trace_;
};

}  // namespace qgrid
