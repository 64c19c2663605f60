#pragma once

// Seeded PAC trials, verification campaigns and parameter sweeps.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "cempac/common.hpp"
#include "cempac/mdp.hpp"
#include "cempac/sampling.hpp"

namespace cempac {

enum class Solver { cem_ns, cem_s, ttm };

std::string to_string(Solver solver);
Solver solver_from_string(std::string_view text);

struct TrialConfig {
    Solver solver = Solver::cem_ns;
    double eps = 0.0;
    double delta = 0.0;
    std::optional<std::uint64_t> n_override;  ///< samples per tuple, or trees for TTM
    std::uint64_t trials = 1;
    std::uint64_t base_seed = 0;
    unsigned threads = 1;
    int root = 0;  ///< TTM root state
    Caps caps;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::uint64_t n = 0;
    std::string policy_digest;
    std::vector<double> values;  ///< V^pi(s, 0) on the true MDP
    double gap = 0.0;            ///< max over checked states of V*(s,0) - V^pi(s,0)
    bool mistake = false;        ///< gap > eps
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval at z = 1.96 (95%).
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials);

struct TrialReport {
    std::string solver;
    std::string mdp_digest;
    double eps = 0.0;
    double delta = 0.0;
    std::uint64_t n = 0;
    std::uint64_t trials = 0;
    std::uint64_t base_seed = 0;
    std::vector<TrialRecord> records;
    std::uint64_t mistakes = 0;
    double mistake_rate = 0.0;
    Interval wilson;
    double mean_gap = 0.0;
    double max_gap = 0.0;
};

/// Sample size the solver would use without an override: the CEM-NS or CEM-S
/// formula, or the TTM tree count over all Markovian policies.
std::uint64_t default_sample_size(const MdpSpec& m, const TrialConfig& c);

/// Trial i uses seed base_seed + i. Results are merged in trial order, so the
/// report does not depend on the thread count. CEM-NS and CEM-S flag a mistake
/// when any state falls more than eps short of optimal; TTM checks its root.
TrialReport run_pac_trials(const MdpSpec& m, const TrialConfig& c);

nlohmann::json to_json(const TrialReport& r, bool include_records = true);

struct CheckResult {
    std::string name;
    bool passed = false;
    double max_discrepancy = 0.0;
    double tolerance = 0.0;
    nlohmann::json details;
    std::string error;  ///< set when the check could not run (e.g. a cap)
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    bool passed() const noexcept;
};

/// Names accepted by run_verification_suite, in execution order.
const std::vector<std::string>& verification_checks();

/// Runs the selected checks on small seeded instances. Cap violations are
/// recorded per check instead of aborting the suite.
VerificationReport run_verification_suite(const std::set<std::string>& scope, const Caps& caps,
                                          std::uint64_t seed = 0);

nlohmann::json to_json(const VerificationReport& r);

/// Checks accepted by verify_worlds: consistency, batches, counting,
/// biased-fraction.
const std::vector<std::string>& world_checks();

/// World-level checks on a user dataset. Stationary datasets need steps > 0;
/// checks that do not apply to the dataset pass with a "skipped" note.
VerificationReport verify_worlds(const Dataset& d, const MdpSpec& skeleton, int steps,
                                 const std::set<std::string>& scope, const Caps& caps);

/// Shared-draw construction: l = 4 groups, group i averages m consecutive
/// draws (i .. i+m-1, mod m+3) from a pool of m+3 uniforms, weights 1..4
/// normalized. Returns the empirical P(U >= E[U] + gap) and its standard error.
struct TailEstimate {
    double probability = 0.0;
    double std_error = 0.0;
};
TailEstimate dependent_average_tail(std::uint64_t m, double gap, std::uint64_t replications, std::uint64_t seed);

struct SweepGrid {
    std::vector<Solver> solvers;
    std::vector<double> eps;
    std::vector<double> delta;
    std::vector<std::optional<std::uint64_t>> n;  ///< nullopt = formula
};

/// Writes one CSV row per grid point. Rows already present in `path` (under
/// the same configuration digest) are kept and not recomputed; the file is
/// rewritten in grid order after each new row. Returns the number of rows
/// computed by this call.
std::size_t sweep(const MdpSpec& m, const SweepGrid& grid, const TrialConfig& base, const std::string& path);

/// Header comment carrying the tool version and the configuration digest.
std::string sweep_header(const MdpSpec& m, const SweepGrid& grid, const TrialConfig& base);

}  // namespace cempac
