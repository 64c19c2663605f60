#include "cempac/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <algorithm>
#include <limits>

#include "cempac/bounds.hpp"
#include "cempac/cem.hpp"
#include "cempac/io.hpp"
#include "cempac/lower_bound.hpp"
#include "cempac/reference.hpp"
#include "cempac/rng.hpp"
#include "cempac/sampling.hpp"
#include "cempac/summation.hpp"
#include "cempac/ttm.hpp"
#include "cempac/worlds.hpp"

namespace cempac {

namespace {

constexpr const char* kToolVersion = "cempac-0.1.0";
constexpr double kWilsonZ = 1.959963984540054;

std::uint64_t to_u64(const BigInt& v, const std::string& what) {
    if (v > BigInt(std::numeric_limits<std::uint64_t>::max())) {
        throw CapExceeded(what + " does not fit in 64 bits", v.str());
    }
    return static_cast<std::uint64_t>(v);
}

std::string format_double(double x) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, result.ptr);
}

PacParams pac_params(const MdpSpec& m, const TrialConfig& c) {
    return {c.eps, c.delta, m.v_max, m.num_states, m.num_actions, m.horizon, m.discount};
}

std::vector<Policy> all_policies(const MdpSpec& m, Kind kind, std::uint64_t cap) {
    std::vector<Policy> out;
    PolicyEnumerator it = enumerate_policies(m, kind, cap);
    while (it.next()) out.push_back(it.current());
    return out;
}

template <typename Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(count, 1024))));
    if (threads <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::uint64_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string to_string(Solver solver) {
    switch (solver) {
        case Solver::cem_ns: return "cem-ns";
        case Solver::cem_s: return "cem-s";
        case Solver::ttm: return "ttm";
    }
    return "unknown";
}

Solver solver_from_string(std::string_view text) {
    if (text == "cem-ns") return Solver::cem_ns;
    if (text == "cem-s") return Solver::cem_s;
    if (text == "ttm") return Solver::ttm;
    throw InvalidInput("unknown solver '" + std::string(text) + "'");
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw InvalidInput("Wilson interval needs at least one trial");
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = kWilsonZ * kWilsonZ;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = kWilsonZ * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    const double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

std::uint64_t default_sample_size(const MdpSpec& m, const TrialConfig& c) {
    switch (c.solver) {
        case Solver::cem_ns:
            return to_u64(cem_ns_sample_size(pac_params(m, c)).n, "sample size");
        case Solver::cem_s:
            return to_u64(cem_s_sample_size(pac_params(m, c)).n, "sample size");
        case Solver::ttm: {
            const auto count = count_policies(m, Kind::nonstationary);
            if (!count) throw CapExceeded("policy class size overflows", "inf");
            return ttm_tree_count(m.v_max, c.eps, c.delta, *count);
        }
    }
    throw InvalidInput("unknown solver");
}

TrialReport run_pac_trials(const MdpSpec& m, const TrialConfig& c) {
    require_valid(m);
    if (c.trials < 1) throw InvalidInput("need at least one trial");
    if (!(c.eps > 0.0)) throw InvalidInput("eps must be positive");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (c.solver != Solver::cem_s && !m.horizon) {
        throw InvalidInput(to_string(c.solver) + " needs a finite-horizon MDP");
    }
    if (c.solver == Solver::cem_s && m.kind != Kind::stationary) {
        throw InvalidInput("cem-s needs a stationary MDP");
    }
    if (c.solver == Solver::ttm && (c.root < 0 || c.root >= m.num_states)) {
        throw InvalidInput("root state out of range");
    }

    const std::uint64_t n = c.n_override ? *c.n_override : default_sample_size(m, c);
    if (n < 1) throw InvalidInput("sample size must be positive");
    std::uint64_t per_unit = 0;
    if (c.solver == Solver::ttm) {
        const auto nodes = tree_node_count(m.num_actions, *m.horizon);
        per_unit = nodes ? *nodes - 1 : std::numeric_limits<std::uint64_t>::max();
    } else {
        per_unit = c.solver == Solver::cem_ns ? as_nonstationary(m).tuple_count() : m.tuple_count();
    }
    if (per_unit != 0 && n > c.caps.sample_budget / per_unit) {
        throw CapExceeded("per-trial samples exceed the budget " + std::to_string(c.caps.sample_budget) +
                              " at N = " + std::to_string(n),
                          (BigInt(n) * per_unit).str());
    }

    const MdpSpec sampled = c.solver == Solver::cem_ns ? as_nonstationary(m) : m;
    const Solution best = optimal_policy(m);
    std::vector<Policy> policies;
    if (c.solver == Solver::ttm) policies = all_policies(m, Kind::nonstationary, c.caps.policies);

    TrialReport report;
    report.solver = to_string(c.solver);
    report.mdp_digest = mdp_digest(m);
    report.eps = c.eps;
    report.delta = c.delta;
    report.n = n;
    report.trials = c.trials;
    report.base_seed = c.base_seed;
    report.records.resize(c.trials);

    parallel_for(c.trials, c.threads, [&](std::uint64_t i) {
        TrialRecord rec;
        rec.seed = c.base_seed + i;
        rec.n = n;
        Policy pi;
        switch (c.solver) {
            case Solver::cem_ns:
                pi = cem_ns_solve(sample_dataset(sampled, static_cast<int>(n), rec.seed, c.caps), m).policy;
                break;
            case Solver::cem_s:
                pi = cem_s_solve(sample_dataset(sampled, static_cast<int>(n), rec.seed, c.caps), m).policy;
                break;
            case Solver::ttm:
                pi = policies[ttm_select(m, c.root, policies, n, rec.seed, c.caps.tree_nodes).index];
                break;
        }
        const ValueTable v = evaluate_policy(m, pi);
        rec.policy_digest = sha256_hex(nlohmann::json(pi).dump()).substr(0, 16);
        rec.values.resize(static_cast<std::size_t>(m.num_states));
        rec.gap = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < m.num_states; ++s) {
            rec.values[s] = v.at(s, 0);
            if (c.solver == Solver::ttm && s != c.root) continue;
            rec.gap = std::max(rec.gap, best.values.at(s, 0) - v.at(s, 0));
        }
        rec.mistake = rec.gap > c.eps;
        report.records[i] = std::move(rec);
    });

    CompensatedSum gaps;
    report.max_gap = -std::numeric_limits<double>::infinity();
    for (const auto& rec : report.records) {
        if (rec.mistake) ++report.mistakes;
        gaps.add(rec.gap);
        report.max_gap = std::max(report.max_gap, rec.gap);
    }
    report.mistake_rate = static_cast<double>(report.mistakes) / static_cast<double>(report.trials);
    report.mean_gap = gaps.value() / static_cast<double>(report.trials);
    report.wilson = wilson_interval(report.mistakes, report.trials);
    return report;
}

nlohmann::json to_json(const TrialReport& r, bool include_records) {
    using nlohmann::json;
    json j{{"solver", r.solver},
           {"mdp_digest", r.mdp_digest},
           {"eps", r.eps},
           {"delta", r.delta},
           {"N", r.n},
           {"trials", r.trials},
           {"base_seed", r.base_seed},
           {"mistakes", r.mistakes},
           {"mistake_rate", r.mistake_rate},
           {"wilson95", {r.wilson.lo, r.wilson.hi}},
           {"mean_gap", r.mean_gap},
           {"max_gap", r.max_gap}};
    if (include_records) {
        json records = json::array();
        for (const auto& rec : r.records) {
            records.push_back({{"seed", rec.seed},
                               {"N", rec.n},
                               {"policy_digest", rec.policy_digest},
                               {"values", rec.values},
                               {"gap", rec.gap},
                               {"mistake", rec.mistake}});
        }
        j["records"] = std::move(records);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Verification suite

bool VerificationReport::passed() const noexcept {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

const std::vector<std::string>& verification_checks() {
    static const std::vector<std::string> names = {
        "unbiasedness",   "consistency", "batch-decomposition", "truncation",
        "stationary-consistency", "stationary-unbiasedness", "biased-fraction", "counting",
        "dependent-hoeffding", "lb-closed-form", "lb-gap", "lb-chernoff", "lb-likelihood", "lb-floor"};
    return names;
}

TailEstimate dependent_average_tail(std::uint64_t m, double gap, std::uint64_t replications, std::uint64_t seed) {
    if (m < 1 || replications < 1) throw InvalidInput("need m >= 1 and at least one replication");
    constexpr int kGroups = 4;
    const std::uint64_t pool = m + 3;
    const double weight_total = kGroups * (kGroups + 1) / 2.0;
    std::vector<double> draws(pool);
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < replications; ++r) {
        KeyedStream stream(stream_key(seed, {0x6465702d686f6566ULL, m, r}));
        for (double& u : draws) u = stream.next_unit();
        double u_total = 0.0;
        for (int i = 0; i < kGroups; ++i) {
            double group = 0.0;
            for (std::uint64_t j = 0; j < m; ++j) group += draws[(i + j) % pool];
            u_total += (i + 1) / weight_total * (group / static_cast<double>(m));
        }
        if (u_total >= 0.5 + gap) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(replications);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(replications))};
}

namespace {

struct Tracker {
    CheckResult& out;
    void observe(double discrepancy) { out.max_discrepancy = std::max(out.max_discrepancy, discrepancy); }
};

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return stream_key(seed, {tag, index});
}

MdpSpec small_ns_mdp(std::uint64_t seed, int states, int actions, int horizon) {
    RandomMdpOptions o;
    o.kind = Kind::nonstationary;
    o.num_states = states;
    o.num_actions = actions;
    o.horizon = horizon;
    o.discount = 1.0;
    return random_mdp(o, seed);
}

MdpSpec small_stationary_mdp(std::uint64_t seed, int states, int actions, double discount) {
    RandomMdpOptions o;
    o.kind = Kind::stationary;
    o.num_states = states;
    o.num_actions = actions;
    o.horizon = std::nullopt;
    o.discount = discount;
    return random_mdp(o, seed);
}

// Mean of V^pi_x over independently sampled datasets against the exact value;
// the discrepancy is the largest |mean - exact| in standard errors.
void world_mean_check(CheckResult& out, const MdpSpec& m, const MdpSpec& skeleton, const MdpSpec& reference,
                      const Policy& pi, int n, int steps, const std::vector<std::string>& codes,
                      std::uint64_t replications, std::uint64_t seed) {
    const ValueTable exact = evaluate_policy(reference, pi);
    const std::size_t table = exact.values.size();
    std::vector<CompensatedSum> sum(codes.size() * table);
    std::vector<CompensatedSum> sum_sq(codes.size() * table);
    for (std::uint64_t r = 0; r < replications; ++r) {
        const Dataset d = sample_dataset(m, n, trial_seed(seed, 0x756e62ULL, r));
        const WorldEvaluator ev(d, skeleton, steps);
        for (std::size_t w = 0; w < codes.size(); ++w) {
            const ValueTable v = ev.evaluate(world_from_string(codes[w], ev.shape()), pi);
            for (std::size_t k = 0; k < table; ++k) {
                sum[w * table + k].add(v.values[k]);
                sum_sq[w * table + k].add(v.values[k] * v.values[k]);
            }
        }
    }
    const double R = static_cast<double>(replications);
    bool ok = true;
    nlohmann::json worst = nlohmann::json::array();
    for (std::size_t w = 0; w < codes.size(); ++w) {
        double world_worst = 0.0;
        for (std::size_t k = 0; k < table; ++k) {
            const double mean = sum[w * table + k].value() / R;
            const double var = std::max(0.0, sum_sq[w * table + k].value() / R - mean * mean) * R / (R - 1.0);
            const double se = std::sqrt(var / R);
            const double diff = std::abs(mean - exact.values[k]);
            if (diff > 4.0 * se + 1e-12) ok = false;
            const double z = se > 0.0 ? diff / se : (diff > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
            world_worst = std::max(world_worst, z);
        }
        out.max_discrepancy = std::max(out.max_discrepancy, world_worst);
        worst.push_back({{"world", codes[w]}, {"max_z", world_worst}});
    }
    out.tolerance = 4.0;
    out.passed = ok;
    out.details["worlds"] = std::move(worst);
    out.details["replications"] = replications;
}

void check_unbiasedness(CheckResult& out, const Caps&, std::uint64_t seed) {
    const MdpSpec m = small_ns_mdp(trial_seed(seed, 1, 0), 2, 2, 2);
    const Policy pi = optimal_policy(m).policy;
    world_mean_check(out, m, m, m, pi, 2, 0, {"11111111", "12121212", "21122112"}, 20000, seed);
}

void check_stationary_unbiasedness(CheckResult& out, const Caps&, std::uint64_t seed) {
    const MdpSpec m = small_stationary_mdp(trial_seed(seed, 2, 0), 2, 2, 0.5);
    const MdpSpec truncated = truncate_to(m, 2);
    const Policy pi = optimal_policy(truncated).policy;
    world_mean_check(out, m, m, truncated, pi, 3, 2, {"12231321", "21323121", "13213212"}, 20000, seed);
}

// max over policies of |V_X - V_Mhat|; stationary data is compared with the
// empirical model truncated to `steps`.
double consistency_discrepancy(const Dataset& d, const MdpSpec& skeleton, int steps, const Caps& caps) {
    const MdpSpec mhat = d.kind == Kind::nonstationary ? build_empirical_ns(d, skeleton).mdp
                                                       : truncate_to(build_empirical_s(d, skeleton).mdp, steps);
    const auto policies = all_policies(mhat, Kind::nonstationary, caps.policies);
    const auto averages = eval_all_worlds(policies, d, skeleton, steps, WorldFilter::all, caps.worlds);
    double worst = 0.0;
    for (std::size_t p = 0; p < policies.size(); ++p) {
        worst = std::max(worst, max_abs_difference(averages[p], evaluate_policy(mhat, policies[p])));
    }
    return worst;
}

void check_consistency(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.tolerance = 1e-9;
    for (int k = 0; k < 10; ++k) {
        const MdpSpec m = small_ns_mdp(trial_seed(seed, 3, k), 2, 2, 2);
        const Dataset d = sample_dataset(m, 1 + k % 3, trial_seed(seed, 4, k), caps);
        out.max_discrepancy = std::max(out.max_discrepancy, consistency_discrepancy(d, m, 0, caps));
    }
    const double table = consistency_discrepancy(sample_table_dataset(), sample_table_skeleton(), 0, caps);
    out.max_discrepancy = std::max(out.max_discrepancy, table);
    out.passed = out.max_discrepancy <= out.tolerance;
    out.details["instances"] = 11;
    out.details["sample_table_discrepancy"] = table;
}

void check_stationary_consistency(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.tolerance = 1e-9;
    constexpr int kSteps = 2;
    for (int k = 0; k < 5; ++k) {
        const MdpSpec m = small_stationary_mdp(trial_seed(seed, 5, k), 2, 2, 0.5);
        const Dataset d = sample_dataset(m, 3, trial_seed(seed, 6, k), caps);
        out.max_discrepancy = std::max(out.max_discrepancy, consistency_discrepancy(d, m, kSteps, caps));
    }
    out.passed = out.max_discrepancy <= out.tolerance;
    out.details["instances"] = 5;
    out.details["steps"] = kSteps;
}

void check_batch_decomposition(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.tolerance = 1e-12;
    nlohmann::json cases = nlohmann::json::array();
    auto record = [&](const DecompositionResult& r, const std::string& label) {
        out.max_discrepancy = std::max(out.max_discrepancy, r.max_discrepancy);
        cases.push_back({{"case", label}, {"batches", r.batches.str()}, {"discrepancy", r.max_discrepancy}});
    };
    int k = 0;
    for (int n = 1; n <= 3; ++n) {
        const MdpSpec m = small_ns_mdp(trial_seed(seed, 7, k), 2, 1, 2);
        const Dataset d = sample_dataset(m, n, trial_seed(seed, 8, k++), caps);
        const Policy pi = optimal_policy(build_empirical_ns(d, m).mdp).policy;
        record(batch_decomposition_check(d, pi, m, 0, caps), "nonstationary S=2 A=1 H=2 N=" + std::to_string(n));
    }
    {
        const MdpSpec m = small_ns_mdp(trial_seed(seed, 7, k), 2, 2, 2);
        const Dataset d = sample_dataset(m, 2, trial_seed(seed, 8, k++), caps);
        const Policy pi = optimal_policy(build_empirical_ns(d, m).mdp).policy;
        record(batch_decomposition_check(d, pi, m, 0, caps), "nonstationary S=2 A=2 H=2 N=2");
    }
    for (int n : {2, 4}) {
        const MdpSpec m = small_stationary_mdp(trial_seed(seed, 7, k), 2, 1, 0.5);
        const Dataset d = sample_dataset(m, n, trial_seed(seed, 8, k++), caps);
        const Policy pi = optimal_policy(truncate_to(build_empirical_s(d, m).mdp, 2)).policy;
        record(batch_decomposition_check(d, pi, m, 2, caps), "stationary S=2 A=1 steps=2 N=" + std::to_string(n));
    }
    out.passed = out.max_discrepancy <= out.tolerance;
    out.details["cases"] = std::move(cases);
}

void check_truncation(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.tolerance = 1e-12;
    out.max_discrepancy = -std::numeric_limits<double>::infinity();
    const double discounts[] = {0.5, 0.7, 0.9};
    for (int k = 0; k < 10; ++k) {
        const MdpSpec m = small_stationary_mdp(trial_seed(seed, 9, k), 2, 2, discounts[k % 3]);
        const double eps = m.v_max / 4.0;
        const Dataset d = sample_dataset(m, 4, trial_seed(seed, 10, k), caps);
        const MdpSpec mhat = build_empirical_s(d, m).mdp;
        for (const MdpSpec* model : {&m, &mhat}) {
            const Truncation cut = truncate_horizon(*model, eps);
            for (const Policy& pi : all_policies(*model, Kind::stationary, caps.policies)) {
                const ValueTable full = evaluate_policy(*model, pi);
                const ValueTable part = evaluate_policy(cut.mdp, pi);
                for (int s = 0; s < model->num_states; ++s) {
                    const double upper = full.at(s) + full.error_bound;
                    out.max_discrepancy = std::max(out.max_discrepancy, part.at(s, 0) - full.at(s));
                    out.max_discrepancy = std::max(out.max_discrepancy, (upper - eps / 4.0) - part.at(s, 0));
                }
            }
        }
    }
    out.passed = out.max_discrepancy <= out.tolerance;
    out.details["instances"] = 10;
    out.details["note"] = "discrepancy is the largest violation of either inequality chain";
}

// Largest |V_X - V_unbiased| over every policy minus the bound; also records
// the enumerated biased fraction against the closed form.
double biased_fraction_case(const Dataset& d, const MdpSpec& skeleton, int steps, const Caps& caps,
                            nlohmann::json& cases, double& fraction_error) {
    const MdpSpec truncated = truncate_to(skeleton, steps);
    const WorldShape shape = world_shape(d, steps);
    const auto policies = all_policies(truncated, Kind::nonstationary, caps.policies);
    const auto all = eval_all_worlds(policies, d, skeleton, steps, WorldFilter::all, caps.worlds);
    const auto unbiased = eval_all_worlds(policies, d, skeleton, steps, WorldFilter::unbiased, caps.worlds);
    const double bound = biased_fraction_bound(shape.blocks(), steps, static_cast<std::uint64_t>(d.n), truncated.v_max);
    double worst = 0.0;
    for (std::size_t p = 0; p < policies.size(); ++p) worst = std::max(worst, max_abs_difference(all[p], unbiased[p]));
    const PartitionCounts counts = partition_biased(shape, caps.worlds);
    const double enumerated =
        boost::multiprecision::cpp_rational(counts.biased, count_worlds(shape)).convert_to<double>();
    fraction_error = std::max(fraction_error, std::abs(enumerated - biased_fraction_exact(shape)));
    cases.push_back({{"blocks", shape.blocks()},
                     {"steps", steps},
                     {"N", d.n},
                     {"max_difference", worst},
                     {"bound", bound},
                     {"biased_fraction", enumerated},
                     {"closed_form_fraction", biased_fraction_exact(shape)}});
    return worst - bound;
}

void check_biased_fraction(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.tolerance = 0.0;
    out.max_discrepancy = -std::numeric_limits<double>::infinity();
    double fraction_error = 0.0;
    nlohmann::json cases = nlohmann::json::array();
    int k = 0;
    struct Case {
        int states, actions, steps, n;
    };
    for (const Case c : {Case{2, 1, 2, 2}, Case{2, 1, 2, 3}, Case{2, 1, 2, 4}, Case{2, 2, 2, 3}, Case{2, 1, 3, 4}}) {
        const MdpSpec m = small_stationary_mdp(trial_seed(seed, 11, k), c.states, c.actions, 0.5);
        const Dataset d = sample_dataset(m, c.n, trial_seed(seed, 12, k++), caps);
        out.max_discrepancy =
            std::max(out.max_discrepancy, biased_fraction_case(d, m, c.steps, caps, cases, fraction_error));
    }
    out.passed = out.max_discrepancy <= 0.0 && fraction_error <= 1e-12;
    out.details["cases"] = std::move(cases);
    out.details["fraction_error"] = fraction_error;
    out.details["note"] = "discrepancy is max |V_X - V_unbiased| minus the bound";
}

// Enumerated batch counts, per-world batch memberships and (stationary)
// unbiased-world counts against the closed forms.
bool counting_case(const WorldShape& shape, const Caps& caps, nlohmann::json& cases) {
    std::map<std::vector<std::uint32_t>, std::uint64_t> occurrences;
    std::set<std::vector<std::vector<std::uint32_t>>> distinct;
    std::uint64_t batches = 0;
    bool all_batches = true;
    BatchEnumerator it = enumerate_batches(shape, caps.batches);
    while (it.next()) {
        ++batches;
        std::vector<std::vector<std::uint32_t>> members;
        for (const World& x : it.current().worlds) {
            ++occurrences[x.indices];
            members.push_back(x.indices);
        }
        all_batches = all_batches && is_batch(it.current().worlds, shape);
        std::sort(members.begin(), members.end());
        distinct.insert(std::move(members));
    }
    const BigInt expected_worlds = shape.stationary ? count_unbiased(shape) : count_worlds(shape);
    const BigInt expected_batches = count_batches(shape);
    const BigInt expected_containing = count_batches_containing(shape);
    bool ok = all_batches && distinct.size() == batches && BigInt(batches) == expected_batches &&
              BigInt(occurrences.size()) == expected_worlds;
    for (const auto& [x, c] : occurrences) ok = ok && BigInt(c) == expected_containing;
    if (shape.stationary) ok = ok && partition_biased(shape, caps.worlds).unbiased == count_unbiased(shape);
    cases.push_back({{"stationary", shape.stationary},
                     {"blocks", shape.blocks()},
                     {"steps", shape.steps},
                     {"N", shape.n},
                     {"batches", batches},
                     {"closed_form_batches", expected_batches.str()},
                     {"closed_form_batches_per_world", expected_containing.str()},
                     {"match", ok}});
    return ok;
}

void check_counting(CheckResult& out, const Caps& caps, std::uint64_t) {
    out.tolerance = 0.0;
    int mismatches = 0;
    nlohmann::json cases = nlohmann::json::array();
    for (int n = 1; n <= 4; ++n) {
        for (int k = 1; k <= 3; ++k) mismatches += !counting_case(WorldShape{1, 1, k, n, false}, caps, cases);
    }
    for (int hbar = 1; hbar <= 2; ++hbar) {
        for (int blocks = 1; blocks <= 3; ++blocks) {
            for (int n = hbar; n <= 4; n += hbar) {
                mismatches += !counting_case(WorldShape{blocks, 1, hbar, n, true}, caps, cases);
            }
        }
    }
    out.max_discrepancy = mismatches;
    out.passed = mismatches == 0;
    out.details["cases"] = std::move(cases);
}

void check_dependent_hoeffding(CheckResult& out, const Caps&, std::uint64_t seed) {
    out.tolerance = 0.0;
    out.max_discrepancy = -std::numeric_limits<double>::infinity();
    nlohmann::json cases = nlohmann::json::array();
    bool ok = true;
    for (std::uint64_t m : {1, 4, 16}) {
        for (double gap : {0.05, 0.1, 0.2}) {
            const TailEstimate t = dependent_average_tail(m, gap, 20000, seed);
            const double bound = hoeffding_dep_tail(m, gap, 0.0, 1.0);
            const double excess = t.probability - (bound + 3.0 * t.std_error);
            ok = ok && excess <= 0.0;
            out.max_discrepancy = std::max(out.max_discrepancy, t.probability - bound);
            cases.push_back({{"m", m}, {"gap", gap}, {"empirical", t.probability}, {"bound", bound}});
        }
    }
    out.passed = ok;
    out.details["cases"] = std::move(cases);
    out.details["note"] = "pass iff empirical tail <= bound + 3 standard errors";
}

void check_lb_closed_form(CheckResult& out, const Caps&, std::uint64_t) {
    out.tolerance = 1e-9;
    int points = 0;
    for (int H : {1, 2, 10, 201}) {
        for (double p : {0.6, 0.9, 1.0 - 1.0 / H}) {
            if (!(p > 0.5 && p < 1.0)) continue;
            for (double alpha : {0.0, (1.0 - p) / 4.0}) {
                const LowerBoundFamily f{2, 2, p, alpha, H};
                for (const FamilyMember& which : {FamilyMember{}, FamilyMember{{1, 0}}}) {
                    const Solution sol = optimal_policy(build_family_member(f, which));
                    for (int i = 0; i < f.K; ++i) {
                        for (int j = 0; j < f.L; ++j) {
                            out.max_discrepancy =
                                std::max(out.max_discrepancy, std::abs(sol.values.at(f.y_state(i, j), 0) -
                                                                       closed_form_value(f, which, i, j)));
                        }
                    }
                    ++points;
                }
            }
        }
    }
    out.passed = out.max_discrepancy <= out.tolerance;
    out.details["members_checked"] = points;
}

void check_lb_gap(CheckResult& out, const Caps&, std::uint64_t) {
    bool ok = true;
    double smallest_margin = std::numeric_limits<double>::infinity();
    for (int H : {201, 500, 1000}) {
        for (double eps : {0.1, 0.5, 0.9}) {
            const GapCertificate g = gap_certificate(H, eps);
            ok = ok && g.holds;
            smallest_margin = std::min(smallest_margin, g.gap - 2.0 * eps);
        }
    }
    out.passed = ok;
    out.max_discrepancy = -smallest_margin;
    out.details["smallest_margin"] = smallest_margin;
    out.details["note"] = "discrepancy is 2 eps minus the smallest gap";
}

struct LbGridPoint {
    std::uint64_t l;
    double p;
    double alpha;
};

std::vector<LbGridPoint> lb_grid() {
    std::vector<LbGridPoint> grid;
    for (std::uint64_t l : {1, 10, 100, 1000, 2000}) {
        for (double p : {0.6, 0.9, 1.0 - 1.0 / 201.0}) {
            for (double alpha : {0.0, (1.0 - p) / 4.0, (1.0 - p) / 2.0, 20.0 / (201.0 * 201.0)}) {
                grid.push_back({l, p, alpha});
            }
        }
    }
    return grid;
}

void check_lb_chernoff(CheckResult& out, const Caps& caps, std::uint64_t seed) {
    out.max_discrepancy = -std::numeric_limits<double>::infinity();
    bool ok = true;
    for (const auto& g : lb_grid()) {
        const ChernoffEvent e = chernoff_event_probability(g.l, g.p, g.alpha, 20.0, 6.0, caps.exact_cdf_trials, seed);
        ok = ok && e.probability >= e.bound;
        out.max_discrepancy = std::max(out.max_discrepancy, e.bound - e.probability);
    }
    out.passed = ok;
    out.details["points"] = lb_grid().size();
    out.details["note"] = "discrepancy is the largest bound minus exact probability";
}

void check_lb_likelihood(CheckResult& out, const Caps&, std::uint64_t) {
    std::uint64_t violations = 0;
    std::uint64_t corrected_violations = 0;
    std::uint64_t points_failing = 0;
    out.max_discrepancy = -std::numeric_limits<double>::infinity();
    nlohmann::json first_failure;
    for (const auto& g : lb_grid()) {
        const ChernoffEvent e = chernoff_event_probability(g.l, g.p, g.alpha);
        const double log_floor = std::log(2.0 / 6.0) - 20.0 * g.alpha * g.alpha * static_cast<double>(g.l) /
                                                          (g.p * (1.0 - g.p));
        const double ld = static_cast<double>(g.l);
        const auto upper = static_cast<std::uint64_t>(std::min(ld, std::floor(e.threshold)));
        const double lower_real = g.p * ld - e.delta_cap;
        const auto lower = static_cast<std::uint64_t>(std::max(0.0, std::ceil(lower_real)));
        bool point_ok = true;
        for (std::uint64_t s = 0; s <= g.l; ++s) {
            const double shortfall = log_floor - log_likelihood_ratio(s, g.l, g.p, g.alpha);
            if (s <= upper) {
                out.max_discrepancy = std::max(out.max_discrepancy, shortfall);
                if (shortfall > 0.0) {
                    ++violations;
                    point_ok = false;
                    if (first_failure.is_null()) {
                        first_failure = {{"l", g.l}, {"p", g.p}, {"alpha", g.alpha}, {"s", s},
                                         {"log_ratio", log_likelihood_ratio(s, g.l, g.p, g.alpha)},
                                         {"log_floor", log_floor}};
                    }
                }
            }
            if (s >= lower && s <= upper && shortfall > 0.0) ++corrected_violations;
        }
        if (!point_ok) ++points_failing;
    }
    out.passed = violations == 0;
    out.details["note"] =
        "checks ratio >= 2 theta / c2' for every s <= p l + Delta; the ratio grows with s, so the binding "
        "case is s = 0";
    out.details["violating_s_values"] = violations;
    out.details["grid_points_failing"] = points_failing;
    out.details["first_failure"] = first_failure;
    out.details["violations_within_p_l_pm_Delta"] = corrected_violations;
}

void check_lb_floor(CheckResult& out, const Caps&, std::uint64_t) {
    out.tolerance = 1e-12;
    const SampleFloor base = sample_floor(201, 0.5, 0.1);
    const double expected = 201.0 * 201.0 * 201.0 / (64000.0 * 0.25) * std::log(1.0 / 0.6);
    const SampleFloor doubled = sample_floor(402, 0.5, 0.1);
    const SampleFloor family = sample_floor(201, 0.5, 0.1, 3, 4);
    const SampleFloor vacuous = sample_floor(201, 0.5, 0.2);
    out.max_discrepancy = std::max({std::abs(base.tau_star - expected) / expected,
                                    std::abs(doubled.tau_star / base.tau_star - 8.0) / 8.0,
                                    std::abs(family.total - 12.0 * base.tau_star) / family.total});
    out.passed = out.max_discrepancy <= out.tolerance && !base.vacuous && vacuous.vacuous;
    out.details["tau_star"] = base.tau_star;
}

using CheckFn = void (*)(CheckResult&, const Caps&, std::uint64_t);

CheckFn check_function(const std::string& name) {
    static const std::map<std::string, CheckFn> table = {
        {"unbiasedness", check_unbiasedness},
        {"consistency", check_consistency},
        {"batch-decomposition", check_batch_decomposition},
        {"truncation", check_truncation},
        {"stationary-consistency", check_stationary_consistency},
        {"stationary-unbiasedness", check_stationary_unbiasedness},
        {"biased-fraction", check_biased_fraction},
        {"counting", check_counting},
        {"dependent-hoeffding", check_dependent_hoeffding},
        {"lb-closed-form", check_lb_closed_form},
        {"lb-gap", check_lb_gap},
        {"lb-chernoff", check_lb_chernoff},
        {"lb-likelihood", check_lb_likelihood},
        {"lb-floor", check_lb_floor},
    };
    return table.at(name);
}

}  // namespace

VerificationReport run_verification_suite(const std::set<std::string>& scope, const Caps& caps, std::uint64_t seed) {
    for (const auto& name : scope) {
        const auto& known = verification_checks();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw InvalidInput("unknown verification check '" + name + "'");
        }
    }
    VerificationReport report;
    for (const auto& name : verification_checks()) {
        if (!scope.contains(name)) continue;
        CheckResult result;
        result.name = name;
        result.details = nlohmann::json::object();
        try {
            check_function(name)(result, caps, seed);
        } catch (const std::exception& e) {
            result.passed = false;
            result.error = e.what();
        }
        report.checks.push_back(std::move(result));
    }
    return report;
}

const std::vector<std::string>& world_checks() {
    static const std::vector<std::string> names = {"consistency", "batches", "counting", "biased-fraction"};
    return names;
}

VerificationReport verify_worlds(const Dataset& d, const MdpSpec& skeleton, int steps,
                                 const std::set<std::string>& scope, const Caps& caps) {
    for (const auto& name : scope) {
        const auto& known = world_checks();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw InvalidInput("unknown worlds check '" + name + "'");
        }
    }
    const WorldShape shape = world_shape(d, steps);
    const int used_steps = shape.steps;
    const bool stationary = d.kind == Kind::stationary;
    VerificationReport report;
    for (const auto& name : world_checks()) {
        if (!scope.contains(name)) continue;
        CheckResult out;
        out.name = name;
        out.details = nlohmann::json::object();
        try {
            if (name == "consistency") {
                out.tolerance = 1e-9;
                out.max_discrepancy = consistency_discrepancy(d, skeleton, used_steps, caps);
                out.passed = out.max_discrepancy <= out.tolerance;
            } else if (name == "batches") {
                out.tolerance = 1e-12;
                const MdpSpec mhat = stationary ? truncate_to(build_empirical_s(d, skeleton).mdp, used_steps)
                                                : build_empirical_ns(d, skeleton).mdp;
                const Policy candidates[] = {optimal_policy(mhat).policy,
                                             Policy::uniform_action(Kind::nonstationary, d.num_states, used_steps, 0)};
                for (const Policy& pi : candidates) {
                    const DecompositionResult r = batch_decomposition_check(d, pi, skeleton, steps, caps);
                    out.max_discrepancy = std::max(out.max_discrepancy, r.max_discrepancy);
                    out.details["batches"] = r.batches.str();
                    out.details["worlds"] = r.worlds.str();
                }
                out.passed = out.max_discrepancy <= out.tolerance;
            } else if (name == "counting") {
                if (stationary && d.n % used_steps != 0) {
                    out.passed = true;
                    out.details["skipped"] = "closed forms need steps to divide N";
                } else {
                    nlohmann::json cases = nlohmann::json::array();
                    const bool ok = counting_case(shape, caps, cases);
                    out.max_discrepancy = ok ? 0.0 : 1.0;
                    out.passed = ok;
                    out.details = cases.at(0);
                }
            } else {
                if (!stationary) {
                    out.passed = true;
                    out.details["skipped"] = "applies to stationary datasets only";
                } else {
                    nlohmann::json cases = nlohmann::json::array();
                    double fraction_error = 0.0;
                    out.max_discrepancy = biased_fraction_case(d, skeleton, used_steps, caps, cases, fraction_error);
                    out.passed = out.max_discrepancy <= 0.0 && fraction_error <= 1e-12;
                    out.details = cases.at(0);
                    out.details["fraction_error"] = fraction_error;
                }
            }
        } catch (const std::exception& e) {
            out.passed = false;
            out.error = e.what();
        }
        report.checks.push_back(std::move(out));
    }
    return report;
}

nlohmann::json to_json(const VerificationReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json j{{"name", c.name},
                         {"passed", c.passed},
                         {"max_discrepancy", c.max_discrepancy},
                         {"tolerance", c.tolerance},
                         {"details", c.details}};
        if (!c.error.empty()) j["error"] = c.error;
        checks.push_back(std::move(j));
    }
    return {{"passed", r.passed()}, {"checks", std::move(checks)}};
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

constexpr const char* kSweepColumns =
    "solver,eps,delta,n_requested,n,trials,mistakes,mistake_rate,wilson_lo,wilson_hi,mean_gap,max_gap";

std::string grid_key(Solver solver, double eps, double delta, const std::optional<std::uint64_t>& n) {
    return to_string(solver) + "," + format_double(eps) + "," + format_double(delta) + "," +
           (n ? std::to_string(*n) : std::string("formula"));
}

std::string key_of_row(const std::string& row) {
    std::size_t pos = 0;
    for (int field = 0; field < 4; ++field) {
        pos = row.find(',', pos);
        if (pos == std::string::npos) throw InvalidInput("malformed sweep row: " + row);
        ++pos;
    }
    return row.substr(0, pos - 1);
}

std::string format_row(const std::string& key, const TrialReport& r) {
    std::ostringstream os;
    os << key << ',' << r.n << ',' << r.trials << ',' << r.mistakes << ',' << format_double(r.mistake_rate) << ','
       << format_double(r.wilson.lo) << ',' << format_double(r.wilson.hi) << ',' << format_double(r.mean_gap)
       << ',' << format_double(r.max_gap);
    return os.str();
}

}  // namespace

std::string sweep_header(const MdpSpec& m, const SweepGrid& grid, const TrialConfig& base) {
    nlohmann::json solvers = nlohmann::json::array();
    for (Solver s : grid.solvers) solvers.push_back(to_string(s));
    nlohmann::json ns = nlohmann::json::array();
    for (const auto& n : grid.n) {
        if (n) {
            ns.push_back(*n);
        } else {
            ns.push_back("formula");
        }
    }
    const nlohmann::json config{{"mdp", mdp_digest(m)},
                                {"solvers", solvers},
                                {"eps", grid.eps},
                                {"delta", grid.delta},
                                {"n", ns},
                                {"trials", base.trials},
                                {"base_seed", base.base_seed},
                                {"root", base.root}};
    return std::string("# cempac-sweep v1 tool=") + kToolVersion + " config=" + sha256_hex(config.dump());
}

std::size_t sweep(const MdpSpec& m, const SweepGrid& grid, const TrialConfig& base, const std::string& path) {
    if (grid.solvers.empty() || grid.eps.empty() || grid.delta.empty() || grid.n.empty()) {
        throw InvalidInput("sweep grid has an empty axis");
    }
    const std::string header = sweep_header(m, grid, base);
    std::map<std::string, std::string> rows;
    if (std::filesystem::exists(path)) {
        std::istringstream in(read_text_file(path));
        std::string line;
        std::getline(in, line);
        if (line != header) {
            throw InvalidInput("existing sweep file " + path + " was written for a different configuration");
        }
        std::getline(in, line);
        if (line != kSweepColumns) throw InvalidInput("existing sweep file " + path + " has unexpected columns");
        while (std::getline(in, line)) {
            if (!line.empty()) rows[key_of_row(line)] = line;
        }
    }

    std::vector<std::string> order;
    for (Solver solver : grid.solvers) {
        for (double eps : grid.eps) {
            for (double delta : grid.delta) {
                for (const auto& n : grid.n) order.push_back(grid_key(solver, eps, delta, n));
            }
        }
    }
    auto flush = [&] {
        std::string text = header + "\n" + kSweepColumns + "\n";
        for (const auto& key : order) {
            if (auto it = rows.find(key); it != rows.end()) text += it->second + "\n";
        }
        write_text_file(path, text);
    };

    std::size_t computed = 0;
    std::size_t index = 0;
    for (Solver solver : grid.solvers) {
        for (double eps : grid.eps) {
            for (double delta : grid.delta) {
                for (const auto& n : grid.n) {
                    const std::string& key = order[index++];
                    if (rows.contains(key)) continue;
                    TrialConfig c = base;
                    c.solver = solver;
                    c.eps = eps;
                    c.delta = delta;
                    c.n_override = n;
                    rows[key] = format_row(key, run_pac_trials(m, c));
                    ++computed;
                    flush();
                }
            }
        }
    }
    if (computed == 0) flush();
    return computed;
}

}  // namespace cempac
