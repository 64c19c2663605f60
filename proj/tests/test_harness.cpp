#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "cempac/harness.hpp"
#include "cempac/io.hpp"
#include "cempac/reference.hpp"
#include "support.hpp"

using namespace cempac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "cempac-tests";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    fs::remove(p);
    return p;
}

MdpSpec two_by_two() {
    RandomMdpOptions o;
    return random_mdp(o, 2024);
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("Wilson interval") {
    const Interval none = wilson_interval(0, 200);
    CHECK(none.lo == 0.0);
    CHECK(none.hi == doctest::Approx(0.018845).epsilon(1e-4));
    const Interval half = wilson_interval(50, 100);
    CHECK(half.lo == doctest::Approx(0.40383).epsilon(1e-4));
    CHECK(half.hi == doctest::Approx(0.59617).epsilon(1e-4));
    CHECK(wilson_interval(10, 10).hi == 1.0);
    CHECK_THROWS_AS(wilson_interval(0, 0), InvalidInput);
}

TEST_CASE("deterministic MDP never produces a mistake") {
    const MdpSpec m = testing::deterministic_mdp(3, 2, 3);
    for (Solver s : {Solver::cem_ns, Solver::ttm}) {
        TrialConfig c;
        c.solver = s;
        c.eps = 0.01;
        c.delta = 0.1;
        c.n_override = 1;
        c.trials = 20;
        const TrialReport r = run_pac_trials(m, c);
        CHECK(r.mistakes == 0);
        CHECK(r.max_gap == 0.0);
    }
}

TEST_CASE("trial reports do not depend on the thread count") {
    const MdpSpec m = two_by_two();
    TrialConfig c;
    c.eps = 0.1;
    c.delta = 0.2;
    c.n_override = 4;
    c.trials = 64;
    c.base_seed = 9;
    const std::string one = to_json(run_pac_trials(m, c)).dump();
    c.threads = 4;
    CHECK(to_json(run_pac_trials(m, c)).dump() == one);
}

TEST_CASE("trial records are consistent") {
    const MdpSpec m = two_by_two();
    TrialConfig c;
    c.eps = 0.05;
    c.delta = 0.2;
    c.n_override = 2;
    c.trials = 50;
    c.base_seed = 100;
    const TrialReport r = run_pac_trials(m, c);
    std::uint64_t flags = 0;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        CHECK(r.records[i].seed == 100 + i);
        CHECK(r.records[i].mistake == (r.records[i].gap > c.eps));
        flags += r.records[i].mistake;
    }
    CHECK(flags == r.mistakes);
    CHECK(r.mistake_rate == static_cast<double>(flags) / 50.0);
}

TEST_CASE("infeasible sample sizes are rejected with the computed N") {
    const MdpSpec m = two_by_two();
    TrialConfig c;
    c.eps = 1e-4;
    c.delta = 0.1;
    c.caps.sample_budget = 1000;
    try {
        run_pac_trials(m, c);
        FAIL("expected CapExceeded");
    } catch (const CapExceeded& e) {
        CHECK(std::string(e.what()).find("N = " + std::to_string(default_sample_size(m, c))) != std::string::npos);
    }
}

TEST_CASE("solver preconditions") {
    TrialConfig c;
    c.solver = Solver::cem_s;
    c.eps = 0.5;
    c.delta = 0.1;
    CHECK_THROWS_AS(run_pac_trials(two_by_two(), c), InvalidInput);
    CHECK(solver_from_string("ttm") == Solver::ttm);
    CHECK_THROWS_AS(solver_from_string("q-learning"), InvalidInput);
}

TEST_CASE("verification suite scopes") {
    CHECK(run_verification_suite({}, Caps{}).checks.empty());
    const VerificationReport counting = run_verification_suite({"counting"}, Caps{});
    REQUIRE(counting.checks.size() == 1);
    CHECK(counting.checks[0].passed);
    CHECK_THROWS_AS(run_verification_suite({"nope"}, Caps{}), InvalidInput);
    Caps tiny;
    tiny.worlds = 10;
    const VerificationReport capped = run_verification_suite({"consistency"}, tiny);
    CHECK_FALSE(capped.checks[0].passed);
    CHECK_FALSE(capped.checks[0].error.empty());
}

TEST_CASE("dataset world checks on the sample table") {
    const VerificationReport r = verify_worlds(sample_table_dataset(), sample_table_skeleton(), 0,
                                               {"consistency", "counting", "biased-fraction"}, Caps{});
    REQUIRE(r.checks.size() == 3);
    CHECK(r.checks[0].passed);
    CHECK(r.checks[0].max_discrepancy <= 1e-9);
    CHECK_FALSE(r.checks[1].passed);  // 3!^11 batches exceed the default cap
    CHECK(r.checks[2].details.contains("skipped"));
}

TEST_CASE("sweep writes one row per grid point and resumes") {
    const MdpSpec m = two_by_two();
    SweepGrid grid;
    grid.solvers = {Solver::cem_ns};
    grid.eps = {0.1};
    grid.delta = {0.2};
    grid.n = {4};
    TrialConfig base;
    base.trials = 30;
    base.base_seed = 5;
    const fs::path path = scratch("one.csv");
    CHECK(sweep(m, grid, base, path.string()) == 1);
    const auto rows = lines(read_text_file(path.string()));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == sweep_header(m, grid, base));
    CHECK(rows[0].rfind("# cempac-sweep v1", 0) == 0);
    CHECK(sweep(m, grid, base, path.string()) == 0);
    CHECK(lines(read_text_file(path.string())) == rows);
}

TEST_CASE("interrupted sweep completes to the same file") {
    const MdpSpec m = two_by_two();
    SweepGrid grid;
    grid.solvers = {Solver::cem_ns, Solver::ttm};
    grid.eps = {0.1};
    grid.delta = {0.2};
    grid.n = {2, 8};
    TrialConfig base;
    base.trials = 25;
    const fs::path full = scratch("full.csv");
    CHECK(sweep(m, grid, base, full.string()) == 4);
    const std::string expected = read_text_file(full.string());

    // Drop the last two rows as an interrupted run would.
    auto rows = lines(expected);
    std::string partial;
    for (std::size_t i = 0; i + 2 < rows.size(); ++i) partial += rows[i] + "\n";
    const fs::path resumed = scratch("resumed.csv");
    write_text_file(resumed.string(), partial);
    CHECK(sweep(m, grid, base, resumed.string()) == 2);
    CHECK(read_text_file(resumed.string()) == expected);
}

TEST_CASE("sweep rows match single runs exactly") {
    const MdpSpec m = two_by_two();
    SweepGrid grid;
    grid.solvers = {Solver::cem_ns};
    grid.eps = {0.1};
    grid.delta = {0.2};
    grid.n = {3};
    TrialConfig base;
    base.trials = 40;
    base.base_seed = 77;
    const fs::path path = scratch("match.csv");
    sweep(m, grid, base, path.string());
    TrialConfig c = base;
    c.eps = 0.1;
    c.delta = 0.2;
    c.n_override = 3;
    const TrialReport r = run_pac_trials(m, c);
    const auto row = lines(read_text_file(path.string())).at(2);
    CHECK(row.find("cem-ns,0.1,0.2,3,3,40," + std::to_string(r.mistakes) + ",") == 0);
}

TEST_CASE("sweep errors") {
    const MdpSpec m = two_by_two();
    SweepGrid grid;
    grid.solvers = {Solver::cem_ns};
    grid.eps = {0.1};
    grid.delta = {0.2};
    grid.n = {2};
    TrialConfig base;
    CHECK_THROWS_AS(sweep(m, grid, base, "/nonexistent-dir/x.csv"), InvalidInput);
    const fs::path path = scratch("other.csv");
    sweep(m, grid, base, path.string());
    base.trials = 2;
    CHECK_THROWS_AS(sweep(m, grid, base, path.string()), InvalidInput);
}

TEST_CASE("dependent-average tail estimate") {
    const TailEstimate t = dependent_average_tail(4, 0.0, 2000, 1);
    CHECK(t.probability > 0.3);
    CHECK(t.probability < 0.7);
    CHECK(dependent_average_tail(4, 0.6, 2000, 1).probability == 0.0);
}
