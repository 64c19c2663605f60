#include "doctest.h"

#include <cmath>

#include "cempac/reference.hpp"
#include "cempac/sampling.hpp"
#include "support.hpp"

using namespace cempac;

TEST_CASE("deterministic transitions always sample the successor") {
    const MdpSpec m = testing::deterministic_mdp(3, 2, 3);
    const Dataset d = sample_dataset(m, 7, 99);
    for (int s = 0; s < 3; ++s) {
        for (int a = 0; a < 2; ++a) {
            for (int t = 0; t < 3; ++t) {
                for (int i = 0; i < 7; ++i) CHECK(d.sample(s, a, t, i) == static_cast<std::uint32_t>((s + a + t) % 3));
                const auto counts = empirical_counts(d, s, a, t);
                CHECK(counts[(s + a + t) % 3] == 7);
            }
        }
    }
}

TEST_CASE("uniform row frequencies stay within four standard errors") {
    const MdpSpec m = testing::constant_mdp(Kind::nonstationary, 2, 1, 1, 1.0, 0.0);
    const int n = 100000;
    const Dataset d = sample_dataset(m, n, 2024);
    const auto counts = empirical_counts(d, 0, 0, 0);
    const double freq = counts[0] / static_cast<double>(n);
    CHECK(std::abs(freq - 0.5) <= 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("counts partition N and indices stay in range") {
    RandomMdpOptions o;
    o.num_states = 4;
    o.num_actions = 3;
    o.horizon = 3;
    const MdpSpec m = random_mdp(o, 8);
    const Dataset d = sample_dataset(m, 9, 4);
    CHECK(validate_dataset(d).empty());
    for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 3; ++a) {
            for (int t = 0; t < 3; ++t) {
                int total = 0;
                for (int c : empirical_counts(d, s, a, t)) total += c;
                CHECK(total == 9);
            }
        }
    }
    for (std::uint32_t x : d.samples) CHECK(x < 4U);
    CHECK(d.source_seed == 4);
    CHECK(d.source_mdp_digest == mdp_digest(m));
}

TEST_CASE("datasets are a pure function of the seed") {
    RandomMdpOptions o;
    const MdpSpec m = random_mdp(o, 1);
    CHECK(sample_dataset(m, 20, 5).samples == sample_dataset(m, 20, 5).samples);
    CHECK(sample_dataset(m, 20, 5).samples != sample_dataset(m, 20, 6).samples);
    // A larger N extends the same per-tuple streams.
    const Dataset small = sample_dataset(m, 3, 5);
    const Dataset large = sample_dataset(m, 6, 5);
    for (int i = 0; i < 3; ++i) CHECK(small.sample(1, 1, 1, i) == large.sample(1, 1, 1, i));
}

TEST_CASE("sample table counts") {
    const Dataset d = sample_table_dataset();
    const auto counts = empirical_counts(d, 0, 0, 0);
    CHECK(counts == std::vector<int>{1, 2});
    CHECK(validate_dataset(d).empty());
}

TEST_CASE("pooling reads the table row by row") {
    const Dataset pooled = pooled_view(sample_table_dataset());
    CHECK(pooled.kind == Kind::stationary);
    CHECK(pooled.n == 9);
    const std::uint32_t expected[] = {1, 1, 1, 0, 0, 1, 1, 0, 0};
    for (int i = 0; i < 9; ++i) CHECK(pooled.sample(0, 0, 0, i) == expected[i]);
    CHECK(empirical_counts(pooled, 0, 0) == std::vector<int>{4, 5});
}

TEST_CASE("dataset JSON round trips in both encodings") {
    RandomMdpOptions o;
    const Dataset d = sample_dataset(random_mdp(o, 2), 5, 3);
    for (bool plain : {false, true}) {
        const Dataset back = dataset_from_json(dataset_to_json(d, plain));
        CHECK(back.samples == d.samples);
        CHECK(back.source_seed == d.source_seed);
        CHECK(back.source_mdp_digest == d.source_mdp_digest);
    }
    nlohmann::json bad = dataset_to_json(d, true);
    bad["samples"][0] = 7;
    CHECK_THROWS_AS(dataset_from_json(bad), InvalidInput);
}

TEST_CASE("sample budget is enforced") {
    RandomMdpOptions o;
    Caps caps;
    caps.sample_budget = 10;
    CHECK_THROWS_AS(sample_dataset(random_mdp(o, 1), 5, 0, caps), CapExceeded);
}
