#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "oracles.hpp"
#include "qgrid/opponent.hpp"
#include "qgrid/rng.hpp"

using namespace qgrid;

TEST_CASE("attacks land on the schedule while budget lasts") {
    OpponentConfig cfg;
    cfg.budget = 2;
    cfg.interval = 5;
    AttackState state{2};

    CHECK(should_attack(0, state, cfg));   // first opportunity is step 0
    CHECK_FALSE(should_attack(7, state, cfg));
    CHECK(should_attack(10, state, cfg));

    state.remaining_budget = 0;
    CHECK_FALSE(should_attack(0, state, cfg));
    CHECK_FALSE(should_attack(10, state, cfg));
}

TEST_CASE("attack schedule validates its inputs") {
    OpponentConfig cfg;
    cfg.budget = 1;
    AttackState state{1};
    CHECK_THROWS_AS(should_attack(-1, state, cfg), std::invalid_argument);
    cfg.interval = 0;
    CHECK_THROWS_AS(should_attack(0, state, cfg), std::invalid_argument);
}

TEST_CASE("targets are the most loaded in-service lines") {
    OpponentConfig cfg;
    cfg.budget = 5;
    cfg.per_attack = 1;
    AttackState state{5};

    std::vector<double> loading{0.9, 0.5, 1.2};
    std::vector<bool> svc{true, true, true};
    CHECK(select_targets(loading, svc, cfg, state) == std::vector<int>{2});

    cfg.per_attack = 2;
    std::vector<double> tied{0.9, 0.9, 0.1};
    CHECK(select_targets(tied, svc, cfg, state) == std::vector<int>{0, 1});
}

TEST_CASE("ties resolve toward the lower line id") {
    OpponentConfig cfg;
    cfg.budget = 1;
    cfg.per_attack = 1;
    AttackState state{1};
    std::vector<double> loading{0.7, 0.7, 0.7};
    std::vector<bool> svc{true, true, true};
    CHECK(select_targets(loading, svc, cfg, state) == std::vector<int>{0});
}

TEST_CASE("out-of-service lines are never targeted") {
    OpponentConfig cfg;
    cfg.budget = 3;
    cfg.per_attack = 3;
    AttackState state{3};
    std::vector<double> loading{1.5, 1.4, 1.3, 0.2};
    std::vector<bool> svc{false, true, false, true};
    CHECK(select_targets(loading, svc, cfg, state) == std::vector<int>{1, 3});
}

TEST_CASE("selection size is capped by budget and service count") {
    OpponentConfig cfg;
    cfg.per_attack = 3;
    std::vector<double> loading{0.5, 0.6, 0.7, 0.8};
    std::vector<bool> svc{true, true, true, true};

    AttackState low_budget{1};
    CHECK(select_targets(loading, svc, cfg, low_budget).size() == 1);

    AttackState rich{10};
    std::vector<bool> mostly_out{false, false, true, false};
    CHECK(select_targets(loading, mostly_out, cfg, rich) == std::vector<int>{2});

    AttackState none{0};
    CHECK(select_targets(loading, svc, cfg, none).empty());
}

TEST_CASE("greedy selection maximizes summed loading over all subsets") {
    Rng rng(201);
    OpponentConfig cfg;
    for (int n = 1; n <= 10; ++n) {
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<double> loading(static_cast<std::size_t>(n));
            std::vector<bool> svc(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                // Coarse values provoke ties; service flips provoke gaps.
                loading[static_cast<std::size_t>(i)] =
                    0.25 * static_cast<double>(rng.uniform_int(8));
                svc[static_cast<std::size_t>(i)] = rng.uniform() < 0.8;
            }
            for (int m = 1; m <= n; ++m) {
                cfg.per_attack = m;
                cfg.budget = n;
                AttackState state{n};
                // Selection returns loading-descending order; compare as sets.
                auto greedy = select_targets(loading, svc, cfg, state);
                std::sort(greedy.begin(), greedy.end());
                auto best = oracle::best_subset_by_loading(loading, svc, m);
                CHECK(greedy == best);
            }
        }
    }
}
