#include "doctest.h"

#include <algorithm>
#include <set>

#include "cempac/cem.hpp"
#include "cempac/reference.hpp"
#include "cempac/worlds.hpp"
#include "support.hpp"

using namespace cempac;

namespace {

MdpSpec stationary_table_skeleton() {
    MdpSpec m = MdpSpec::zeros(Kind::stationary, 2, 2, std::nullopt, 0.5, 2.0);
    for (double& p : m.transitions) p = 0.5;
    m.reward(1, 0) = 1.0;
    m.reward(1, 1) = 1.0;
    return m;
}

// Every N-subset of X that is pairwise coordinate-disjoint.
std::uint64_t filtered_batch_count(const WorldShape& shape) {
    std::vector<World> all;
    WorldEnumerator it(shape);
    while (it.next()) all.push_back(it.current());
    std::uint64_t count = 0;
    std::vector<int> pick(all.size(), 0);
    std::fill(pick.end() - shape.batch_size(), pick.end(), 1);
    do {
        std::vector<World> members;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (pick[i]) members.push_back(all[i]);
        }
        if (is_batch(members, shape)) ++count;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return count;
}

}  // namespace

TEST_CASE("table worlds decode column by column") {
    const Dataset d = sample_table_dataset();
    const MdpSpec skeleton = sample_table_skeleton();
    const WorldShape shape = world_shape(d);
    CHECK(shape.coordinates() == 12);
    const World x = world_from_string("132121123211", shape);
    const MdpSpec mx = world_mdp(x, d, skeleton);
    CHECK(mx.transition_row(0, 0, 0)[1] == 1.0);
    CHECK(mx.transition_row(0, 0, 1)[0] == 1.0);
    CHECK(mx.transition_row(0, 0, 2)[1] == 1.0);
    const MdpSpec my = world_mdp(world_from_string("122121123211", shape), d, skeleton);
    CHECK(my.transitions == mx.transitions);
    CHECK(world_to_string(x) == "132121123211");
}

TEST_CASE("table world and distinct MDP counts") {
    const Dataset d = sample_table_dataset();
    CHECK(count_worlds(world_shape(d)) == 531441);
    CHECK(count_distinct_world_mdps(d) == 256);
}

TEST_CASE("pooled stationary reading of the table") {
    const Dataset pooled = pooled_view(sample_table_dataset());
    const WorldShape shape = world_shape(pooled, 3);
    CHECK(shape.n == 9);
    const MdpSpec mx = world_mdp(world_from_string("571634978542", shape), pooled, stationary_table_skeleton(), 3);
    CHECK(mx.transition_row(0, 0, 0)[0] == 1.0);
    CHECK(mx.transition_row(0, 0, 1)[1] == 1.0);  // 7th pooled sample of (s0, a0) is s1
}

TEST_CASE("world strings are validated") {
    const WorldShape shape{2, 2, 3, 3, false};
    CHECK_THROWS_AS(world_from_string("13212112321", shape), InvalidInput);
    CHECK_THROWS_AS(world_from_string("132121123214", shape), InvalidInput);
    CHECK_THROWS_AS(world_from_string("032121123211", shape), InvalidInput);
    const WorldShape wide{1, 1, 2, 12, false};
    const World x = world_from_string("3,11", wide);
    CHECK(world_to_string(x) == "3,11");
}

TEST_CASE("single-sample world reproduces the empirical model") {
    RandomMdpOptions o;
    o.num_states = 3;
    o.horizon = 3;
    const MdpSpec m = random_mdp(o, 2);
    const Dataset d = sample_dataset(m, 1, 8);
    const WorldShape shape = world_shape(d);
    CHECK(count_worlds(shape) == 1);
    const MdpSpec mx = world_mdp(World{std::vector<std::uint32_t>(shape.coordinates(), 1)}, d, m);
    CHECK(mx.transitions == build_empirical_ns(d, m).mdp.transitions);
}

TEST_CASE("singleton set equals the world's own value") {
    const Dataset d = sample_table_dataset();
    const MdpSpec skeleton = sample_table_skeleton();
    const World x = world_from_string("231312213123", world_shape(d));
    const Policy pi = optimal_policy(skeleton).policy;
    const std::vector<World> one{x};
    const ValueTable v = eval_world_set(one, pi, d, skeleton);
    CHECK(max_abs_difference(v, evaluate_policy(world_mdp(x, d, skeleton), pi)) == 0.0);
    CHECK(max_abs_difference(WorldEvaluator(d, skeleton).evaluate(x, pi), v) == 0.0);
}

TEST_CASE("full world set agrees with the empirical model") {
    const Dataset d = sample_table_dataset();
    const MdpSpec skeleton = sample_table_skeleton();
    const MdpSpec mhat = build_empirical_ns(d, skeleton).mdp;
    std::vector<Policy> policies;
    PolicyEnumerator it = enumerate_policies(skeleton, Kind::nonstationary);
    while (it.next()) policies.push_back(it.current());
    const auto averages = eval_all_worlds(policies, d, skeleton);
    for (std::size_t p = 0; p < policies.size(); ++p) {
        CHECK(max_abs_difference(averages[p], evaluate_policy(mhat, policies[p])) <= 1e-9);
    }
}

TEST_CASE("stationary world set agrees with the truncated empirical model") {
    RandomMdpOptions o;
    o.kind = Kind::stationary;
    o.horizon = std::nullopt;
    o.discount = 0.5;
    const MdpSpec m = random_mdp(o, 13);
    const Dataset d = sample_dataset(m, 3, 14);
    const MdpSpec mhat = truncate_to(build_empirical_s(d, m).mdp, 2);
    std::vector<Policy> policies;
    PolicyEnumerator it = enumerate_policies(mhat, Kind::nonstationary);
    while (it.next()) policies.push_back(it.current());
    const auto averages = eval_all_worlds(policies, d, m, 2);
    for (std::size_t p = 0; p < policies.size(); ++p) {
        CHECK(max_abs_difference(averages[p], evaluate_policy(mhat, policies[p])) <= 1e-9);
    }
}

TEST_CASE("world enumeration cap") {
    CHECK_THROWS_AS(enumerate_worlds(WorldShape{2, 2, 3, 3, false}, 1000), CapExceeded);
}

TEST_CASE("constant worlds form a batch") {
    const WorldShape shape{2, 2, 3, 3, false};
    const Batch b = canonical_batch(shape);
    REQUIRE(b.worlds.size() == 3);
    CHECK(world_to_string(b.worlds[0]) == "111111111111");
    CHECK(world_to_string(b.worlds[2]) == "333333333333");
    CHECK(is_batch(b.worlds, shape));
    CHECK(canonical_batch(WorldShape{1, 1, 4, 1, false}).worlds.size() == 1);
}

TEST_CASE("a listed triple is a batch of the table shape") {
    const WorldShape shape{2, 2, 3, 3, false};
    const std::vector<World> members{world_from_string("132212312132", shape),
                                     world_from_string("221323121321", shape),
                                     world_from_string("313131233213", shape)};
    CHECK(is_batch(members, shape));
    std::vector<World> broken = members;
    broken[1] = world_from_string("121323121321", shape);
    CHECK_FALSE(is_batch(broken, shape));
}

TEST_CASE("batch enumeration matches generate-and-filter") {
    for (const auto& [n, k] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 3}}) {
        const WorldShape shape{1, 1, k, n, false};
        std::uint64_t enumerated = 0;
        BatchEnumerator it(shape);
        while (it.next()) ++enumerated;
        CHECK(enumerated == filtered_batch_count(shape));
        CHECK(BigInt(enumerated) == count_batches(shape));
    }
    CHECK(count_batches(WorldShape{1, 1, 2, 2, false}) == 2);
    CHECK(count_batches(WorldShape{1, 1, 2, 3, false}) == 6);
    CHECK(count_batches_containing(WorldShape{1, 1, 2, 3, false}) == 2);
    CHECK(count_batches(WorldShape{1, 1, 3, 2, false}) == 4);
    CHECK(count_batches_containing(WorldShape{1, 1, 3, 2, false}) == 1);
    CHECK(count_batches(WorldShape{1, 1, 9, 1, false}) == 1);
}

TEST_CASE("stationary batch enumeration matches generate-and-filter") {
    const WorldShape shape{2, 1, 2, 4, true};
    std::uint64_t enumerated = 0;
    BatchEnumerator it(shape);
    while (it.next()) ++enumerated;
    CHECK(BigInt(enumerated) == count_batches(shape));
    CHECK(enumerated == filtered_batch_count(shape));
}

TEST_CASE("biased worlds") {
    const WorldShape shape{2, 2, 3, 9, true};
    CHECK(is_biased(world_from_string("441682329512", shape), shape));
    CHECK_FALSE(is_biased(world_from_string("123456789123", shape), shape));
    const WorldShape small{1, 1, 2, 3, true};
    const PartitionCounts counts = partition_biased(small);
    CHECK(counts.unbiased == 6);
    CHECK(counts.biased == 3);
    CHECK(count_unbiased(small) == 6);
    CHECK(biased_fraction_exact(small) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(biased_fraction_exact(WorldShape{3, 1, 1, 4, true}) == 0.0);
}

TEST_CASE("batch decomposition on tiny instances") {
    RandomMdpOptions o;
    o.num_actions = 1;
    o.horizon = 1;
    const MdpSpec m = random_mdp(o, 30);
    for (int n : {1, 2, 3}) {
        const Dataset d = sample_dataset(m, n, 31);
        const Policy pi = Policy::uniform_action(Kind::nonstationary, 2, 1, 0);
        const DecompositionResult r = batch_decomposition_check(d, pi, m);
        CHECK(r.max_discrepancy <= 1e-12);
        if (n == 1) CHECK(r.max_discrepancy == 0.0);
    }
}

TEST_CASE("stationary batch decomposition over unbiased worlds") {
    RandomMdpOptions o;
    o.kind = Kind::stationary;
    o.num_actions = 1;
    o.horizon = std::nullopt;
    o.discount = 0.5;
    const MdpSpec m = random_mdp(o, 40);
    const Dataset d = sample_dataset(m, 4, 41);
    const Policy pi = Policy::uniform_action(Kind::nonstationary, 2, 2, 0);
    const DecompositionResult r = batch_decomposition_check(d, pi, m, 2);
    CHECK(r.max_discrepancy <= 1e-12);
    CHECK(r.worlds == count_unbiased(world_shape(d, 2)));
}
