#include "qgrid/opponent.hpp"

#include <algorithm>
#include <stdexcept>

namespace qgrid {

bool should_attack(int step, const AttackState& state, const OpponentConfig& cfg) {
    if (step < 0) throw std::invalid_argument("opponent: negative step index");
    if (cfg.interval < 1) throw std::invalid_argument("opponent: interval must be >= 1");
    return step % cfg.interval == 0 && state.remaining_budget > 0;
}

std::vector<int> select_targets(const std::vector<double>& loading,
                                const std::vector<bool>& line_in_service,
                                const OpponentConfig& cfg,
                                const AttackState& state) {
    if (loading.size() != line_in_service.size()) {
        throw std::invalid_argument("opponent: loading/in_service size mismatch");
    }
    if (cfg.per_attack < 1) throw std::invalid_argument("opponent: per_attack must be >= 1");
    std::vector<int> candidates;
    for (std::size_t i = 0; i < loading.size(); ++i) {
        if (line_in_service[i]) candidates.push_back(static_cast<int>(i));
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        const double la = loading[static_cast<std::size_t>(a)];
        const double lb = loading[static_cast<std::size_t>(b)];
        if (la != lb) return la > lb;
        return a < b;
    });
    const std::size_t take = std::min({candidates.size(),
                                       static_cast<std::size_t>(cfg.per_attack),
                                       static_cast<std::size_t>(std::max(0, state.remaining_budget))});
    candidates.resize(take);
    return candidates;
}

}  // namespace qgrid
