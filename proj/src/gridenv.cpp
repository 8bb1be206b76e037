#include "qgrid/gridenv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qgrid {

int action_space_size(int n_lines) { return 1 + 2 * n_lines; }

Action decode_action(int index, int n_lines) {
    if (index < 0 || index >= action_space_size(n_lines)) {
        throw std::invalid_argument("action index out of range: " + std::to_string(index));
    }
    if (index == 0) return {ActionKind::Noop, -1};
    const int line = (index - 1) / 2;
    const bool disconnect = ((index - 1) % 2) == 0;
    return {disconnect ? ActionKind::Disconnect : ActionKind::Reconnect, line};
}

int encode_action(const Action& a, int n_lines) {
    switch (a.kind) {
        case ActionKind::Noop:
            return 0;
        case ActionKind::Disconnect:
        case ActionKind::Reconnect:
            if (a.line < 0 || a.line >= n_lines) {
                throw std::invalid_argument("action line out of range: " + std::to_string(a.line));
            }
            return 1 + 2 * a.line + (a.kind == ActionKind::Reconnect ? 1 : 0);
    }
    throw std::invalid_argument("action kind invalid");
}

RewardBreakdown compute_reward(bool alive, const std::vector<double>& loading,
                               bool agent_changed_topology, bool action_not_noop,
                               const RewardCoefficients& coef) {
    RewardBreakdown r;
    r.survival = alive ? 1.0 : 0.0;
    double excess = 0.0;
    for (double rho : loading) excess += std::max(0.0, rho - 1.0);
    r.overload = -coef.overload * excess;
    r.topo_change = agent_changed_topology ? -coef.topo_change : 0.0;
    r.action = action_not_noop ? -coef.action : 0.0;
    return r;
}

GridEnv::GridEnv(GridSpec spec, EnvConfig cfg) : spec_(std::move(spec)), cfg_(cfg), rng_(0) {
    spec_.validate();
    if (cfg_.max_steps < 1) throw std::invalid_argument("env: max_steps must be >= 1");
    if (cfg_.overload_window < 1) throw std::invalid_argument("env: overload_window must be >= 1");
    if (cfg_.reconnect_cooldown < 0) throw std::invalid_argument("env: negative reconnect_cooldown");
    if (cfg_.load_scale <= 0.0) throw std::invalid_argument("env: load_scale must be positive");
    if (cfg_.load_sigma < 0.0) throw std::invalid_argument("env: negative load_sigma");
}

void GridEnv::reset(std::uint64_t seed) { reset(seed, {}); }

void GridEnv::reset(std::uint64_t seed, const std::vector<int>& initially_out) {
    rng_ = Rng(seed);
    in_service_.assign(static_cast<std::size_t>(spec_.n_lines()), true);
    cooldown_.assign(static_cast<std::size_t>(spec_.n_lines()), 0);
    overload_age_.assign(static_cast<std::size_t>(spec_.n_lines()), 0);
    load_mw_.resize(static_cast<std::size_t>(spec_.n_buses()));
    for (int i = 0; i < spec_.n_buses(); ++i) {
        load_mw_[static_cast<std::size_t>(i)] =
            spec_.buses[static_cast<std::size_t>(i)].load_mw * cfg_.load_scale;
    }
    for (int li : initially_out) {
        if (li < 0 || li >= spec_.n_lines()) {
            throw std::invalid_argument("reset: initial outage line out of range: " +
                                        std::to_string(li));
        }
        in_service_[static_cast<std::size_t>(li)] = false;
        cooldown_[static_cast<std::size_t>(li)] = cfg_.reconnect_cooldown;
    }
    attack_.remaining_budget = cfg_.opponent.budget;
    step_count_ = 0;
    steps_survived_ = 0;
    cascade_count_ = 0;
    cumulative_reward_ = 0.0;
    trace_.clear();
    solve();
    blackout_ = blackout_condition();
    done_ = blackout_;
}

void GridEnv::solve() { pf_ = solve_dc_power_flow(spec_, in_service_, load_mw_); }

bool GridEnv::blackout_condition() const {
    if (!pf_.slack_component_alive) return true;
    const double total = pf_.served_load_mw + pf_.unserved_load_mw;
    if (total <= 0.0) return false;
    return pf_.unserved_load_mw >= cfg_.blackout_unserved_fraction * total;
}

TripOutcome GridEnv::trip_overloads() {
    TripOutcome out;
    const int nl = spec_.n_lines();
    while (true) {
        std::vector<int> to_trip;
        for (int li = 0; li < nl; ++li) {
            const auto i = static_cast<std::size_t>(li);
            if (!in_service_[i]) continue;
            if (pf_.loading[i] > 1.0) {
                ++overload_age_[i];
                if (overload_age_[i] >= cfg_.overload_window) to_trip.push_back(li);
            }
        }
        if (to_trip.empty()) break;
        for (int li : to_trip) {
            const auto i = static_cast<std::size_t>(li);
            in_service_[i] = false;
            overload_age_[i] = 0;
            cooldown_[i] = cfg_.reconnect_cooldown;
            out.tripped.push_back(li);
        }
        ++out.passes_with_trips;
        solve();
    }
    // Ages persist only for lines overloaded in the final solved state.
    for (int li = 0; li < nl; ++li) {
        const auto i = static_cast<std::size_t>(li);
        if (!in_service_[i] || pf_.loading[i] <= 1.0) overload_age_[i] = 0;
    }
    cascade_count_ += std::max(0, out.passes_with_trips - 1);
    return out;
}

StepResult GridEnv::step_index(int action_index) {
    return step(decode_action(action_index, spec_.n_lines()));
}

StepResult GridEnv::step(const Action& action) {
    if (done_) throw std::logic_error("step called on a finished episode");
    const int t = step_count_;

    for (auto& c : cooldown_) {
        if (c > 0) --c;
    }

    StepResult result;
    if (should_attack(t, attack_, cfg_.opponent)) {
        result.attacked = select_targets(pf_.loading, in_service_, cfg_.opponent, attack_);
        for (int li : result.attacked) {
            const auto i = static_cast<std::size_t>(li);
            in_service_[i] = false;
            overload_age_[i] = 0;
            cooldown_[i] = cfg_.reconnect_cooldown;
        }
        attack_.remaining_budget -= static_cast<int>(result.attacked.size());
    }

    bool legal = true;
    bool agent_changed = false;
    if (action.kind != ActionKind::Noop) {
        if (action.line < 0 || action.line >= spec_.n_lines()) {
            legal = false;
        } else {
            const auto i = static_cast<std::size_t>(action.line);
            if (action.kind == ActionKind::Disconnect) {
                legal = in_service_[i];
                if (legal) {
                    in_service_[i] = false;
                    overload_age_[i] = 0;
                    cooldown_[i] = cfg_.reconnect_cooldown;
                    agent_changed = true;
                }
            } else {
                legal = !in_service_[i] && cooldown_[i] == 0;
                if (legal) {
                    in_service_[i] = true;
                    overload_age_[i] = 0;
                    agent_changed = true;
                }
            }
        }
    }

    if (cfg_.load_sigma > 0.0) {
        for (auto& load : load_mw_) load *= std::exp(cfg_.load_sigma * rng_.normal());
    }

    solve();
    const TripOutcome trips = trip_overloads();

    blackout_ = blackout_condition();
    ++step_count_;
    if (!blackout_) ++steps_survived_;
    done_ = blackout_ || step_count_ >= cfg_.max_steps;

    result.reward = compute_reward(!blackout_, pf_.loading, agent_changed,
                                   action.kind != ActionKind::Noop, cfg_.reward);
    result.done = done_;
    result.blackout = blackout_;
    result.action_was_legal = legal;
    result.tripped = trips.tripped;
    cumulative_reward_ += result.reward.total();

    StepRecord rec;
    rec.step = t;
    rec.action_index = encode_action(action, spec_.n_lines());
    rec.action_legal = legal;
    rec.attacked = result.attacked;
    rec.tripped = trips.tripped;
    rec.reward = result.reward.total();
    rec.max_loading =
        pf_.loading.empty() ? 0.0 : *std::max_element(pf_.loading.begin(), pf_.loading.end());
    rec.unserved_mw = pf_.unserved_load_mw;
    rec.cascade_passes = trips.passes_with_trips;
    rec.blackout = blackout_;
    rec.done = done_;
    trace_.push_back(std::move(rec));
    return result;
}

ObservationGraph GridEnv::observe() const {
    ObservationGraph obs;
    const int nb = spec_.n_buses();
    const int nl = spec_.n_lines();
    obs.node_features = Eigen::MatrixXd::Zero(nb, kObservationDim);
    for (int i = 0; i < nb; ++i) {
        const auto& bus = spec_.buses[static_cast<std::size_t>(i)];
        double loading_sum = 0.0;
        int in_count = 0;
        int out_count = 0;
        for (int li = 0; li < nl; ++li) {
            const Line& l = spec_.lines[static_cast<std::size_t>(li)];
            if (l.from_bus != i && l.to_bus != i) continue;
            if (in_service_[static_cast<std::size_t>(li)]) {
                loading_sum += pf_.loading[static_cast<std::size_t>(li)];
                ++in_count;
            } else {
                ++out_count;
            }
        }
        obs.node_features(i, 0) =
            (bus.gen_mw - load_mw_[static_cast<std::size_t>(i)]) / spec_.base_mva;
        obs.node_features(i, 1) = in_count > 0 ? loading_sum / in_count : 0.0;
        obs.node_features(i, 2) = static_cast<double>(out_count);
        obs.node_features(i, 3) = static_cast<double>(step_count_) / cfg_.max_steps;
    }
    for (int li = 0; li < nl; ++li) {
        if (!in_service_[static_cast<std::size_t>(li)]) continue;
        const Line& l = spec_.lines[static_cast<std::size_t>(li)];
        obs.edges.push_back({l.from_bus, l.to_bus});
    }
    return obs;
}

namespace {

std::string join_ids(const std::vector<int>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0) s += '|';
        s += std::to_string(ids[i]);
    }
    return s;
}

}  // namespace

void GridEnv::write_trace_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "step,action,action_legal,attacked_lines,tripped_lines,total_reward,"
           "max_loading,unserved_mw,cascade_passes,blackout,done\n";
    for (const auto& r : trace_) {
        out << r.step << ',' << r.action_index << ',' << (r.action_legal ? 1 : 0) << ','
            << join_ids(r.attacked) << ',' << join_ids(r.tripped) << ',' << r.reward << ','
            << r.max_loading << ',' << r.unserved_mw << ',' << r.cascade_passes << ','
            << (r.blackout ? 1 : 0) << ',' << (r.done ? 1 : 0) << '\n';
    }
}

}  // namespace qgrid
