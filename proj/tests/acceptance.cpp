// Acceptance run: one PASS/FAIL line per criterion, plus "info" lines with
// the measured quantities. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cempac/bounds.hpp"
#include "cempac/cem.hpp"
#include "cempac/harness.hpp"
#include "cempac/io.hpp"
#include "cempac/lower_bound.hpp"
#include "cempac/reference.hpp"
#include "cempac/rng.hpp"
#include "cempac/sampling.hpp"
#include "cempac/summation.hpp"
#include "cempac/ttm.hpp"
#include "cempac/worlds.hpp"

using namespace cempac;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void verdict(int id, const std::string& name, bool passed, const std::string& detail, double seconds) {
    std::printf("[%s] %2d %-22s %s (%.1f s)\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!passed) ++failures;
}

void info(const std::string& text) {
    std::printf("       info: %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& body) {
    const auto start = std::chrono::steady_clock::now();
    bool passed = false;
    std::string detail;
    try {
        passed = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("threw: ") + e.what();
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    verdict(id, name, passed, detail, elapsed.count());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<Policy> policies_of(const MdpSpec& m, Kind kind) {
    std::vector<Policy> out;
    PolicyEnumerator it = enumerate_policies(m, kind);
    while (it.next()) out.push_back(it.current());
    return out;
}

MdpSpec random_ns(std::uint64_t seed, int states, int actions, int horizon) {
    RandomMdpOptions o;
    o.kind = Kind::nonstationary;
    o.num_states = states;
    o.num_actions = actions;
    o.horizon = horizon;
    return random_mdp(o, seed);
}

MdpSpec random_stationary(std::uint64_t seed, int states, int actions, double discount) {
    RandomMdpOptions o;
    o.kind = Kind::stationary;
    o.num_states = states;
    o.num_actions = actions;
    o.horizon = std::nullopt;
    o.discount = discount;
    return random_mdp(o, seed);
}

// The MDP shared by criteria 9 and 11.
MdpSpec pac_mdp() { return random_ns(4, 2, 2, 2); }

bool table_reproduction(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    const Dataset d = sample_table_dataset();
    const MdpSpec skeleton = sample_table_skeleton();
    const WorldShape shape = world_shape(d);
    const BigInt worlds = count_worlds(shape);
    const std::uint64_t distinct = count_distinct_world_mdps(d);
    const MdpSpec mx = world_mdp(world_from_string("132121123211", shape), d, skeleton);
    const MdpSpec my = world_mdp(world_from_string("122121123211", shape), d, skeleton);
    const bool literal = mx.transition_row(0, 0, 0)[1] == 1.0 && mx.transition_row(0, 0, 1)[0] == 1.0 &&
                         mx.transition_row(0, 0, 2)[1] == 1.0;

    const Dataset pooled = pooled_view(d);
    MdpSpec stationary = MdpSpec::zeros(Kind::stationary, 2, 2, std::nullopt, 0.5, 2.0);
    for (double& p : stationary.transitions) p = 0.5;
    const WorldShape pooled_shape = world_shape(pooled, 3);
    const MdpSpec mz = world_mdp(world_from_string("571634978542", pooled_shape), pooled, stationary, 3);
    // The fifth pooled draw of (s0, a0) is s0.
    const bool pooled_ok = mz.transition_row(0, 0, 0)[0] == 1.0;
    const double elapsed = seconds_since(start);
    detail = "worlds=" + worlds.str() + " distinct=" + std::to_string(distinct) +
             " same_mdp=" + (mx.transitions == my.transitions ? "yes" : "no") +
             " pooled_decode=" + (pooled_ok ? "ok" : "wrong");
    return worlds == 531441 && distinct == 256 && literal && mx.transitions == my.transitions && pooled_ok &&
           elapsed < 60.0;
}

bool consistency(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    int instances = 0;
    std::uint64_t largest = 0;
    auto run = [&](const Dataset& d, const MdpSpec& skeleton, int steps) {
        const MdpSpec mhat = d.kind == Kind::nonstationary ? build_empirical_ns(d, skeleton).mdp
                                                           : truncate_to(build_empirical_s(d, skeleton).mdp, steps);
        const auto policies = policies_of(mhat, Kind::nonstationary);
        const auto averages = eval_all_worlds(policies, d, skeleton, steps);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            worst = std::max(worst, max_abs_difference(averages[p], evaluate_policy(mhat, policies[p])));
        }
        largest = std::max(largest, count_worlds(world_shape(d, steps)).convert_to<std::uint64_t>());
        ++instances;
    };
    run(sample_table_dataset(), sample_table_skeleton(), 0);
    for (int k = 0; instances < 100; ++k) {
        const std::uint64_t seed = stream_key(1, {2, static_cast<std::uint64_t>(k)});
        switch (k % 4) {
            case 0: {
                const MdpSpec m = random_ns(seed, 2, 2, 2);
                run(sample_dataset(m, 1 + k % 5, seed + 1), m, 0);
                break;
            }
            case 1: {
                const MdpSpec m = random_ns(seed, 3, 2, 2);
                run(sample_dataset(m, 2, seed + 1), m, 0);
                break;
            }
            case 2: {
                const MdpSpec m = random_stationary(seed, 2, 2, 0.6);
                run(sample_dataset(m, 2 + k % 4, seed + 1), m, 2);
                break;
            }
            default: {
                const MdpSpec m = random_stationary(seed, 2, 2, 0.8);
                run(sample_dataset(m, 3, seed + 1), m, 3);
                break;
            }
        }
    }
    const double elapsed = seconds_since(start);
    detail = std::to_string(instances) + " instances, largest |X|=" + std::to_string(largest) +
             ", max |V_X - V_Mhat|=" + fmt(worst);
    return worst <= 1e-9 && largest <= 1'000'000 && elapsed < 600.0;
}

bool batch_decomposition(std::string& detail) {
    double worst = 0.0;
    int instances = 0;
    int nontrivial = 0;
    std::uint64_t seed = 300;
    auto run_ns = [&](int s, int a, int h, int n) {
        const MdpSpec m = random_ns(++seed, s, a, h);
        const Dataset d = sample_dataset(m, n, ++seed);
        for (const Policy& pi : policies_of(m, Kind::nonstationary)) {
            worst = std::max(worst, batch_decomposition_check(d, pi, m).max_discrepancy);
        }
        ++instances;
    };
    auto run_s = [&](int s, int a, int steps, int n) {
        const MdpSpec m = random_stationary(++seed, s, a, 0.5);
        const Dataset d = sample_dataset(m, n, ++seed);
        for (const Policy& pi : policies_of(truncate_to(m, steps), Kind::nonstationary)) {
            worst = std::max(worst, batch_decomposition_check(d, pi, m, steps).max_discrepancy);
        }
        ++instances;
    };
    // Every shape with at most three coordinates.
    const int dims[][3] = {{1, 1, 1}, {1, 1, 2}, {1, 1, 3}, {1, 2, 1}, {2, 1, 1}, {1, 3, 1}, {3, 1, 1}};
    for (const auto& dim : dims) {
        for (int n = 1; n <= 3; ++n) run_ns(dim[0], dim[1], dim[2], n);
    }
    for (const auto& dim : dims) {
        for (int n = 1; n <= 3; ++n) {
            if (n % dim[2] == 0) run_s(dim[0], dim[1], dim[2], n);
        }
    }
    // Larger shapes where the batches are not forced by the coordinate count.
    const int before = instances;
    for (int n = 1; n <= 3; ++n) run_ns(2, 1, 2, n);
    run_ns(2, 2, 2, 2);
    run_s(2, 1, 2, 2);
    run_s(2, 1, 2, 4);
    run_s(2, 2, 2, 2);
    nontrivial = instances - before;
    detail = std::to_string(instances) + " instances (" + std::to_string(nontrivial) +
             " beyond three coordinates), max discrepancy=" + fmt(worst);
    return worst <= 1e-12;
}

bool counting(std::string& detail) {
    const VerificationReport r = run_verification_suite({"counting"}, Caps{});
    const CheckResult& c = r.checks.at(0);
    detail = std::to_string(c.details.at("cases").size()) + " shapes, mismatches=" + fmt(c.max_discrepancy);
    return c.passed;
}

// Mean of V^pi_x over fresh datasets against the exact value.
double world_mean_z(const MdpSpec& m, const MdpSpec& reference, const Policy& pi, int n, int steps,
                    const std::vector<std::string>& codes, int replications, std::uint64_t seed) {
    const ValueTable exact = evaluate_policy(reference, pi);
    const std::size_t table = exact.values.size();
    std::vector<CompensatedSum> sum(codes.size() * table), sum_sq(codes.size() * table);
    for (int r = 0; r < replications; ++r) {
        const Dataset d = sample_dataset(m, n, stream_key(seed, {static_cast<std::uint64_t>(r)}));
        const WorldEvaluator ev(d, m, steps);
        for (std::size_t w = 0; w < codes.size(); ++w) {
            const ValueTable v = ev.evaluate(world_from_string(codes[w], ev.shape()), pi);
            for (std::size_t k = 0; k < table; ++k) {
                sum[w * table + k].add(v.values[k]);
                sum_sq[w * table + k].add(v.values[k] * v.values[k]);
            }
        }
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < sum.size(); ++k) {
        const double mean = sum[k].value() / replications;
        const double var = std::max(0.0, sum_sq[k].value() / replications - mean * mean);
        const double se = std::sqrt(var / (replications - 1));
        const double diff = std::abs(mean - exact.values[k % table]);
        if (se == 0.0) {
            if (diff > 1e-12) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, diff / se);
    }
    return worst;
}

bool unbiasedness(std::string& detail) {
    constexpr int kReplications = 100000;
    const MdpSpec ns = random_ns(501, 2, 2, 2);
    Policy pi = optimal_policy(ns).policy;
    pi.action(0, 0) = 1 - pi.action(0, 0);
    const double z_ns =
        world_mean_z(ns, ns, pi, 2, 0, {"11111111", "12121212", "21122112"}, kReplications, 502);

    const MdpSpec st = random_stationary(503, 2, 2, 0.5);
    const MdpSpec truncated = truncate_to(st, 2);
    const Policy pis = optimal_policy(truncated).policy;
    const double z_s =
        world_mean_z(st, truncated, pis, 3, 2, {"12231321", "21323121", "13213212"}, kReplications, 504);
    detail = "1e5 datasets each; max |z| time-indexed=" + fmt(z_ns) + ", stationary unbiased worlds=" + fmt(z_s);
    return z_ns <= 4.0 && z_s <= 4.0;
}

bool truncation(std::string& detail) {
    double worst = -std::numeric_limits<double>::infinity();
    int checked = 0;
    const double discounts[] = {0.3, 0.5, 0.7, 0.9, 0.95};
    for (int k = 0; k < 50; ++k) {
        const int states = 2 + k % 2;
        const MdpSpec m = random_stationary(stream_key(6, {static_cast<std::uint64_t>(k)}), states, 2, discounts[k % 5]);
        const double eps = m.v_max * (0.1 + 0.2 * (k % 4));
        const MdpSpec mhat = build_empirical_s(sample_dataset(m, 5, 600 + k), m).mdp;
        for (const MdpSpec* model : {&m, &mhat}) {
            const Truncation cut = truncate_horizon(*model, eps);
            for (const Policy& pi : policies_of(*model, Kind::stationary)) {
                const ValueTable full = evaluate_policy(*model, pi);
                const ValueTable part = evaluate_policy(cut.mdp, pi);
                for (int s = 0; s < model->num_states; ++s) {
                    worst = std::max(worst, part.at(s, 0) - full.at(s));
                    worst = std::max(worst, full.at(s) + full.error_bound - eps / 4.0 - part.at(s, 0));
                    ++checked;
                }
            }
        }
    }
    detail = std::to_string(checked) + " (model, policy, state) triples, largest violation=" + fmt(worst);
    return worst <= 1e-12;
}

bool biased_fraction(std::string& detail) {
    double worst_excess = -std::numeric_limits<double>::infinity();
    double fraction_error = 0.0;
    int instances = 0;
    std::uint64_t seed = 700;
    const int pairs[][2] = {{1, 1}, {2, 1}, {3, 1}, {1, 2}, {2, 2}};
    for (const auto& sa : pairs) {
        for (int steps = 1; steps <= 3; ++steps) {
            for (int n = steps; n <= 6; ++n) {
                const WorldShape shape{sa[0], sa[1], steps, n, true};
                if (count_worlds(shape) > 200000) continue;
                const MdpSpec m = random_stationary(++seed, sa[0], sa[1], 0.6);
                const Dataset d = sample_dataset(m, n, ++seed);
                const MdpSpec truncated = truncate_to(m, steps);
                const auto policies = policies_of(truncated, Kind::nonstationary);
                const auto all = eval_all_worlds(policies, d, m, steps, WorldFilter::all);
                const auto unbiased = eval_all_worlds(policies, d, m, steps, WorldFilter::unbiased);
                const double bound =
                    biased_fraction_bound(shape.blocks(), steps, static_cast<std::uint64_t>(n), truncated.v_max);
                for (std::size_t p = 0; p < policies.size(); ++p) {
                    worst_excess = std::max(worst_excess, max_abs_difference(all[p], unbiased[p]) - bound);
                }
                const PartitionCounts counts = partition_biased(shape);
                const double enumerated =
                    boost::multiprecision::cpp_rational(counts.biased, count_worlds(shape)).convert_to<double>();
                fraction_error = std::max(fraction_error, std::abs(enumerated - biased_fraction_exact(shape)));
                ++instances;
            }
        }
    }
    detail = std::to_string(instances) + " instances, max(|V_X - V_unbiased| - bound)=" + fmt(worst_excess) +
             ", fraction error=" + fmt(fraction_error);
    return worst_excess <= 0.0 && fraction_error <= 1e-12;
}

bool dependent_hoeffding(std::string& detail) {
    bool ok = true;
    double tightest = std::numeric_limits<double>::infinity();
    for (std::uint64_t m : {1, 4, 16}) {
        for (double gap : {0.05, 0.1, 0.2}) {
            const TailEstimate t = dependent_average_tail(m, gap, 100000, 8);
            const double bound = hoeffding_dep_tail(m, gap, 0.0, 1.0);
            ok = ok && t.probability <= bound + 3.0 * t.std_error;
            tightest = std::min(tightest, bound - t.probability);
        }
    }
    detail = "3x3 grid, 1e5 replications, smallest bound - tail=" + fmt(tightest);
    return ok;
}

bool scaled_pac(std::string& detail) {
    const MdpSpec m = pac_mdp();
    TrialConfig c;
    c.solver = Solver::cem_ns;
    c.eps = m.v_max / 2.0;
    c.delta = 0.2;
    c.trials = 200;
    c.base_seed = 9000;
    const TrialReport r = run_pac_trials(m, c);
    const bool pac_ok = r.wilson.lo <= c.delta;

    auto sweep_monotone = [&](double eps, std::string& line) {
        std::vector<TrialReport> points;
        for (std::uint64_t n : {4, 16, 64, 256}) {
            TrialConfig s = c;
            s.eps = eps;
            s.n_override = n;
            points.push_back(run_pac_trials(m, s));
        }
        bool ok = true;
        for (std::size_t i = 0; i < points.size(); ++i) {
            line += (i ? " " : "") + std::string("N=") + std::to_string(points[i].n) + ":" + fmt(points[i].mistake_rate);
            if (i == 0) continue;
            const double width = std::max(points[i].wilson.hi - points[i].wilson.lo,
                                          points[i - 1].wilson.hi - points[i - 1].wilson.lo);
            ok = ok && points[i].mistake_rate <= points[i - 1].mistake_rate + 2.0 * width;
        }
        return ok;
    };
    std::string at_half, at_tenth;
    const bool mono = sweep_monotone(c.eps, at_half);
    const bool mono_small = sweep_monotone(0.1, at_tenth);
    info("sweep at eps=v_max/2: " + at_half);
    info("sweep at eps=0.1: " + at_tenth);
    detail = "N=" + std::to_string(r.n) + " mistakes " + std::to_string(r.mistakes) + "/200, Wilson [" +
             fmt(r.wilson.lo) + ", " + fmt(r.wilson.hi) + "], monotone=" + (mono && mono_small ? "yes" : "no");
    return pac_ok && mono && mono_small;
}

bool lower_bound(std::string& detail) {
    double closed_worst = 0.0;
    for (int h : {1, 2, 10, 201}) {
        for (double p : {0.6, 0.9, 1.0 - 1.0 / h}) {
            if (!(p >= 0.5 && p < 1.0)) continue;
            for (double alpha : {0.0, (1.0 - p) / 4.0}) {
                const LowerBoundFamily f{2, 2, p, alpha, h};
                std::vector<FamilyMember> members{std::nullopt};
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) members.emplace_back(std::make_pair(i, j));
                }
                for (const auto& which : members) {
                    const Solution sol = optimal_policy(build_family_member(f, which));
                    for (int i = 0; i < 2; ++i) {
                        for (int j = 0; j < 2; ++j) {
                            closed_worst = std::max(closed_worst, std::abs(sol.values.at(f.y_state(i, j), 0) -
                                                                           closed_form_value(f, which, i, j)));
                        }
                    }
                }
            }
        }
    }
    bool gaps = true;
    for (int h : {201, 500, 1000}) {
        for (double eps : {0.1, 0.5, 0.9}) gaps = gaps && gap_certificate(h, eps).holds;
    }

    const VerificationReport lb = run_verification_suite({"lb-chernoff", "lb-likelihood"}, Caps{});
    const CheckResult& chernoff = lb.checks.at(0);
    const CheckResult& likelihood = lb.checks.at(1);
    info("closed form max discrepancy " + fmt(closed_worst) + "; gap certificates " + (gaps ? "hold" : "fail"));
    info("Chernoff event: " + std::string(chernoff.passed ? "exact probability >= bound" : "violated") +
         " on " + std::to_string(chernoff.details.at("points").get<int>()) +
         " grid points");
    info("likelihood ratio over s <= p l + Delta: " +
         std::to_string(likelihood.details.at("violating_s_values").get<std::uint64_t>()) + " violations across " +
         std::to_string(likelihood.details.at("grid_points_failing").get<std::uint64_t>()) +
         " grid points; first " + likelihood.details.at("first_failure").dump());
    info("likelihood ratio restricted to p l - Delta <= s <= p l + Delta: " +
         std::to_string(likelihood.details.at("violations_within_p_l_pm_Delta").get<std::uint64_t>()) +
         " violations");

    // Larger alpha widens the value gap between the bumped and a base pair.
    double previous = -1.0;
    bool monotone = true;
    for (double alpha : {0.0, 0.01, 0.02, 0.04}) {
        const LowerBoundFamily f{1, 2, 0.9, alpha, 201};
        const FamilyMember bumped = std::make_pair(0, 0);
        const double gap = closed_form_value(f, bumped, 0, 0) - closed_form_value(f, bumped, 0, 1);
        monotone = monotone && gap > previous;
        previous = gap;
    }
    info(std::string("gap grows with alpha: ") + (monotone ? "yes" : "no"));

    detail = std::string("closed form ") + (closed_worst <= 1e-9 ? "ok" : "off") + ", gaps " + (gaps ? "ok" : "fail") +
             ", Chernoff " + (chernoff.passed ? "ok" : "fail") + ", likelihood ratio " +
             (likelihood.passed ? "ok" : "fails at small s");
    return closed_worst <= 1e-9 && gaps && chernoff.passed && likelihood.passed && monotone;
}

bool ttm(std::string& detail) {
    const MdpSpec m = pac_mdp();
    const auto policies = policies_of(m, Kind::nonstationary);
    constexpr int kTrees = 100000;
    std::vector<CompensatedSum> sum(policies.size()), sum_sq(policies.size());
    for (int i = 0; i < kTrees; ++i) {
        const TrajectoryTree tree = build_tree(m, 0, tree_seed(1100, i));
        for (std::size_t p = 0; p < policies.size(); ++p) {
            const double v = eval_policy_on_tree(tree, policies[p], m.discount);
            sum[p].add(v);
            sum_sq[p].add(v * v);
        }
    }
    double worst_z = 0.0;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        const double mean = sum[p].value() / kTrees;
        const double se = std::sqrt(std::max(0.0, sum_sq[p].value() / kTrees - mean * mean) / (kTrees - 1));
        const double diff = std::abs(mean - evaluate_policy(m, policies[p]).at(0, 0));
        worst_z = std::max(worst_z, se > 0.0 ? diff / se : (diff > 1e-12 ? 1e9 : 0.0));
    }

    TrialConfig c;
    c.solver = Solver::ttm;
    c.eps = m.v_max / 2.0;
    c.delta = 0.2;
    c.trials = 200;
    c.base_seed = 1200;
    const TrialReport r = run_pac_trials(m, c);
    detail = "max |z| over " + std::to_string(policies.size()) + " policies=" + fmt(worst_z) + "; m=" +
             std::to_string(r.n) + " trees, mistakes " + std::to_string(r.mistakes) + "/200, Wilson [" +
             fmt(r.wilson.lo) + ", " + fmt(r.wilson.hi) + "]";
    return worst_z <= 4.0 && r.wilson.lo <= c.delta;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files[entry.path().filename().string()] = read_text_file(entry.path().string());
    }
    return files;
}

bool determinism(std::string& detail) {
    const std::string cli = CEMPAC_CLI_PATH;
    const fs::path root = fs::temp_directory_path() / "cempac-acceptance-determinism";
    fs::remove_all(root);
    const std::vector<std::string> commands = {
        "--seed 3 gen-mdp --states 2 --actions 2 --horizon 2 --out mdp.json",
        "--seed 4 gen-mdp --kind stationary --states 2 --actions 2 --horizon inf --discount 0.5 --out smdp.json",
        "--seed 5 sample --mdp mdp.json --n 3 --out data.json",
        "--seed 6 sample --mdp smdp.json --n 4 --plain --out sdata.json",
        "sample --sample-table --out table.json",
        "gen-mdp --preset sample-table --out table_mdp.json",
        "solve cem-ns --dataset data.json --mdp mdp.json --out pi_ns.json",
        "solve cem-s --dataset sdata.json --mdp smdp.json --out pi_s.json",
        "--seed 7 solve ttm --mdp mdp.json --root 0 --eps 1 --delta 0.2 --out pi_ttm.json",
        "eval --mdp mdp.json --policy pi_ns.json --out eval.json",
        "eval --mdp smdp.json --out eval_s.json",
        "worlds verify --dataset data.json --mdp mdp.json --check all --out worlds.json",
        "worlds verify --dataset sdata.json --mdp smdp.json --steps 2 --check all --out worlds_s.json",
        "worlds verify --dataset table.json --mdp table_mdp.json --check consistency --out worlds_table.json",
        "bounds cem-ns --eps 1 --delta 0.1 --vmax 3 --states 2 --actions 2 --horizon 3 --out b_ns.json",
        "bounds cem-s --eps 1 --delta 0.1 --vmax 2 --states 2 --actions 2 --discount 0.5 --out b_s.json",
        "bounds hoeffding --m 10 --gap 0.5 --out b_h.json",
        "bounds biased-fraction --sa 4 --hbar 3 --n 72 --vmax 3 --out b_b.json",
        "lb-family build --K 2 --L 2 --p 0.9 --alpha 0.02 --H 10 --member 1,0 --out lb_build.json",
        "lb-family closed-form --K 2 --L 2 --p 0.9 --alpha 0.02 --H 10 --member 1,0 --out lb_cf.json",
        "lb-family gap --H 201 --eps 0.5 --out lb_gap.json",
        "--seed 8 lb-family chernoff --l 20000 --p 0.9 --alpha 0.001 --out lb_ch.json",
        "lb-family likelihood --l 1000 --p 0.9 --alpha 0.01 --s 950 --out lb_lr.json",
        "lb-family floor --H 201 --eps 0.5 --delta 0.1 --K 2 --L 2 --out lb_floor.json",
        "--seed 9 pac-trials --mdp mdp.json --solver cem-ns --eps 0.2 --delta 0.2 --n 8 --trials 64 --out pac.json",
        "--seed 9 pac-trials --mdp smdp.json --solver cem-s --eps 0.5 --delta 0.2 --n 6 --trials 32 --out pac_s.json",
        "--seed 9 pac-trials --mdp mdp.json --solver ttm --eps 0.5 --delta 0.2 --trials 32 --out pac_ttm.json",
        "--seed 10 sweep --mdp mdp.json --solvers cem-ns,ttm --eps 0.2,0.5 --delta 0.2 --n 2,8 --trials 20 "
        "--out sweep.csv",
        "--seed 11 verify-all --check counting --check lb-gap --check truncation --out verify.json",
    };
    std::vector<std::map<std::string, std::string>> runs;
    for (const auto& [label, threads] : {std::pair{"a", 1}, std::pair{"b", 1}, std::pair{"c", 4}}) {
        const fs::path dir = root / label;
        fs::create_directories(dir);
        for (const auto& cmd : commands) {
            const std::string line = "cd '" + dir.string() + "' && '" + cli + "' --threads " +
                                     std::to_string(threads) + " " + cmd + " 2>/dev/null";
            const int status = std::system(line.c_str());
            if (status != 0 && cmd.find("verify") == std::string::npos) {
                detail = "command failed: " + cmd;
                return false;
            }
        }
        runs.push_back(snapshot(dir));
    }
    int differing = 0;
    for (const auto& [name, bytes] : runs[0]) {
        for (std::size_t r = 1; r < runs.size(); ++r) {
            const auto it = runs[r].find(name);
            if (it == runs[r].end() || it->second != bytes) ++differing;
        }
    }
    detail = std::to_string(runs[0].size()) + " output files x 3 runs (threads 1, 1, 4), differing=" +
             std::to_string(differing);
    fs::remove_all(root);
    return differing == 0 && runs[0].size() == commands.size();
}

}  // namespace

int main() {
    criterion(1, "table reproduction", table_reproduction);
    criterion(2, "consistency", consistency);
    criterion(3, "batch decomposition", batch_decomposition);
    criterion(4, "counting", counting);
    criterion(5, "unbiasedness", unbiasedness);
    criterion(6, "truncation", truncation);
    criterion(7, "biased fraction", biased_fraction);
    criterion(8, "dependent Hoeffding", dependent_hoeffding);
    criterion(9, "scaled PAC", scaled_pac);
    criterion(10, "lower-bound family", lower_bound);
    criterion(11, "trajectory trees", ttm);
    criterion(12, "determinism", determinism);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
