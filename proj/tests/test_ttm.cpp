#include "doctest.h"

#include <cmath>

#include "cempac/summation.hpp"
#include "cempac/ttm.hpp"
#include "support.hpp"

using namespace cempac;

TEST_CASE("tree sizes") {
    CHECK(tree_node_count(2, 2) == 7);
    CHECK(tree_node_count(1, 5) == 6);
    CHECK(!tree_node_count(1000, 40));
    RandomMdpOptions o;
    const MdpSpec m = random_mdp(o, 1);
    const TrajectoryTree t = build_tree(m, 0, 5);
    CHECK(t.states.size() == 7);
    CHECK(t.states[0] == 0);
    CHECK_THROWS_AS(build_tree(m, 0, 5, 6), CapExceeded);
}

TEST_CASE("single action gives a path") {
    RandomMdpOptions o;
    o.num_actions = 1;
    o.horizon = 4;
    const TrajectoryTree t = build_tree(random_mdp(o, 2), 1, 3);
    CHECK(t.states.size() == 5);
}

TEST_CASE("deterministic trees follow the rollout closure") {
    const MdpSpec m = testing::deterministic_mdp(3, 2, 3);
    const TrajectoryTree t = build_tree(m, 2, 9);
    // node v at depth t has child v*A + 1 + a
    for (std::size_t v = 0; v * 2 + 2 < t.states.size(); ++v) {
        int depth = 0;
        for (std::size_t u = v; u > 0; u = (u - 1) / 2) ++depth;
        for (int a = 0; a < 2; ++a) CHECK(t.states[v * 2 + 1 + a] == (t.states[v] + a + depth) % 3);
    }
}

TEST_CASE("tree values on constant rewards") {
    const MdpSpec zero = testing::constant_mdp(Kind::nonstationary, 2, 2, 3, 1.0, 0.0);
    const MdpSpec one = testing::constant_mdp(Kind::nonstationary, 2, 2, 3, 1.0, 1.0);
    const Policy pi = Policy::uniform_action(Kind::nonstationary, 2, 3, 1);
    CHECK(eval_policy_on_tree(build_tree(zero, 0, 1), pi, 1.0) == 0.0);
    CHECK(eval_policy_on_tree(build_tree(one, 1, 1), pi, 1.0) == 3.0);
}

TEST_CASE("tree estimates are unbiased") {
    RandomMdpOptions o;
    const MdpSpec m = random_mdp(o, 7);
    Policy pi = Policy::uniform_action(Kind::nonstationary, 2, 2, 0);
    pi.action(1, 0) = 1;
    const double exact = evaluate_policy(m, pi).at(0, 0);
    const int trees = 100000;
    CompensatedSum sum, sum_sq;
    for (int i = 0; i < trees; ++i) {
        const double v = eval_policy_on_tree(build_tree(m, 0, tree_seed(3, i)), pi, 1.0);
        sum.add(v);
        sum_sq.add(v * v);
    }
    const double mean = sum.value() / trees;
    const double se = std::sqrt((sum_sq.value() / trees - mean * mean) / trees);
    CHECK(std::abs(mean - exact) <= 4.0 * se);
}

TEST_CASE("selection") {
    RandomMdpOptions o;
    const MdpSpec m = random_mdp(o, 8);
    const std::vector<Policy> only{Policy::uniform_action(Kind::nonstationary, 2, 2, 1)};
    CHECK(ttm_select(m, 0, only, 3, 1).index == 0);

    const MdpSpec det = testing::deterministic_mdp(3, 2, 3);
    std::vector<Policy> all;
    PolicyEnumerator it = enumerate_policies(det, Kind::nonstationary);
    while (it.next()) all.push_back(it.current());
    const TtmResult r = ttm_select(det, 0, all, 1, 4);
    const double best = optimal_policy(det).values.at(0, 0);
    CHECK(evaluate_policy(det, all[r.index]).at(0, 0) == best);
}

TEST_CASE("tree count formula") {
    // ceil(2 * 4 / 1 * ln(2 * 16 / 0.2)) = ceil(8 ln 160) = 41
    CHECK(ttm_tree_count(2.0, 1.0, 0.2, 16) == 41);
}
