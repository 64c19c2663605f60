#pragma once

// Tabular MDPs (stationary or time-indexed, finite or infinite horizon),
// exact policy evaluation and optimal planning.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cempac/common.hpp"

namespace cempac {

/// Row sums of a transition tensor must equal 1 within this tolerance.
inline constexpr double kRowSumTolerance = 1e-12;

/**
 * A tabular MDP (S, A, T, R, H, gamma) with a declared return ceiling v_max.
 *
 * Tensors are stored flat. For a nonstationary MDP the layout is
 * T[s][a][t][s'] and R[s][a][t]; a stationary MDP drops the t index.
 * The struct is a plain value; validate_mdp() reports broken invariants and
 * every solver calls require_valid() on entry.
 */
struct MdpSpec {
    Kind kind = Kind::stationary;
    int num_states = 0;
    int num_actions = 0;
    std::optional<int> horizon;  ///< nullopt means infinite
    double discount = 1.0;
    double v_max = 1.0;
    std::vector<double> transitions;
    std::vector<double> rewards;
    /// Free-form annotations (e.g. state naming); serialized when non-null.
    nlohmann::json meta;

    /// Zero-initialized tensors of the right shape.
    static MdpSpec zeros(Kind kind, int states, int actions, std::optional<int> horizon,
                         double discount, double v_max);

    bool finite_horizon() const noexcept { return horizon.has_value(); }
    /// Number of time layers stored in the tensors (1 when stationary).
    int layers() const noexcept {
        return kind == Kind::nonstationary && horizon ? *horizon : 1;
    }
    std::size_t tuple_count() const noexcept {
        return static_cast<std::size_t>(num_states) * num_actions * layers();
    }
    std::size_t tuple_index(int s, int a, int t) const noexcept {
        const int layer = kind == Kind::nonstationary ? t : 0;
        return (static_cast<std::size_t>(s) * num_actions + a) * layers() + layer;
    }

    std::span<const double> transition_row(int s, int a, int t = 0) const noexcept {
        return {transitions.data() + tuple_index(s, a, t) * num_states,
                static_cast<std::size_t>(num_states)};
    }
    std::span<double> transition_row(int s, int a, int t = 0) noexcept {
        return {transitions.data() + tuple_index(s, a, t) * num_states,
                static_cast<std::size_t>(num_states)};
    }
    double reward(int s, int a, int t = 0) const noexcept { return rewards[tuple_index(s, a, t)]; }
    double& reward(int s, int a, int t = 0) noexcept { return rewards[tuple_index(s, a, t)]; }
};

/// Deterministic Markovian policy. Stationary policies store one action per
/// state; nonstationary ones store one per (s, t) with t in [0, steps).
struct Policy {
    Kind kind = Kind::stationary;
    int num_states = 0;
    int steps = 1;  ///< 1 for stationary policies
    std::vector<int> actions;  ///< [s][t]

    static Policy uniform_action(Kind kind, int states, int steps, int action);

    int action(int s, int t = 0) const noexcept {
        return actions[static_cast<std::size_t>(s) * steps + (kind == Kind::stationary ? 0 : t)];
    }
    int& action(int s, int t = 0) noexcept {
        return actions[static_cast<std::size_t>(s) * steps + (kind == Kind::stationary ? 0 : t)];
    }

    friend bool operator==(const Policy&, const Policy&) = default;
};

/// V(s, t) for t in [0, steps). Infinite-horizon tables have a single step and
/// carry the iteration error bound.
struct ValueTable {
    int num_states = 0;
    int steps = 1;
    bool infinite_horizon = false;
    double error_bound = 0.0;
    std::vector<double> values;  ///< [t][s]

    static ValueTable zeros(int states, int steps, bool infinite);

    double at(int s, int t = 0) const noexcept {
        return values[static_cast<std::size_t>(t) * num_states + s];
    }
    double& at(int s, int t = 0) noexcept {
        return values[static_cast<std::size_t>(t) * num_states + s];
    }
    std::span<const double> layer(int t) const noexcept {
        return {values.data() + static_cast<std::size_t>(t) * num_states,
                static_cast<std::size_t>(num_states)};
    }
};

struct Solution {
    Policy policy;
    ValueTable values;
};

struct SolveOptions {
    /// Sup-norm stopping tolerance for infinite-horizon iteration.
    double tolerance = 1e-12;
    std::uint64_t max_iterations = 50'000'000;
};

/// All broken invariants, each naming its coordinate. Empty iff valid.
std::vector<std::string> validate_mdp(const MdpSpec& m);

/// Throws InvalidInput listing the violations when `m` is not valid.
void require_valid(const MdpSpec& m);

/// Checks that `pi` can be evaluated on `m`; throws InvalidInput otherwise.
void require_compatible(const MdpSpec& m, const Policy& pi);

/// Exact backward induction for finite horizons (V(., H) = 0). Infinite
/// horizons iterate from V = 0 until the sup-norm change is at most the
/// tolerance; the table then reports error bound tol * gamma / (1 - gamma).
ValueTable evaluate_policy(const MdpSpec& m, const Policy& pi, const SolveOptions& opts = {});

/// Bellman-optimal values and the greedy policy. Argmax ties go to the lowest
/// action index. Finite horizons yield nonstationary policies; infinite
/// horizons yield stationary ones.
Solution optimal_policy(const MdpSpec& m, const SolveOptions& opts = {});

/// Odometer over every deterministic Markovian policy, lexicographic in the
/// flattened [s][t] action vector (last position fastest).
class PolicyEnumerator {
  public:
    PolicyEnumerator(Kind kind, int states, int steps, int actions);

    /// Advances to the next policy; false once all have been produced.
    bool next();
    const Policy& current() const noexcept { return current_; }

  private:
    Policy current_;
    int num_actions_;
    bool started_ = false;
    bool done_ = false;
};

/// Number of policies of the given kind, or nullopt if it overflows 64 bits.
std::optional<std::uint64_t> count_policies(const MdpSpec& m, Kind kind);

/// Default policy kind for `m`: nonstationary for finite horizons.
Kind default_policy_kind(const MdpSpec& m);

/// Lexicographic enumeration of |A|^(|S|H) nonstationary (or |A|^|S|
/// stationary) policies. Throws CapExceeded when the count exceeds `cap`.
PolicyEnumerator enumerate_policies(const MdpSpec& m, std::optional<Kind> kind = std::nullopt,
                                    std::uint64_t cap = Caps{}.policies);

struct RandomMdpOptions {
    Kind kind = Kind::nonstationary;
    int num_states = 2;
    int num_actions = 2;
    std::optional<int> horizon = 2;
    double discount = 1.0;
};

/// Rewards uniform on [0, 1], transition rows from the flat Dirichlet, and
/// v_max = min(H, 1 / (1 - gamma)).
MdpSpec random_mdp(const RandomMdpOptions& opts, std::uint64_t seed);

/// Same MDP with the time index made explicit. Requires a finite horizon.
MdpSpec as_nonstationary(const MdpSpec& m);

/// Rescales every transition row to sum to 1. Only applied on request.
MdpSpec renormalized(const MdpSpec& m);

/// Max over (s, t) of |a(s,t) - b(s,t)|; tables must share a shape.
double max_abs_difference(const ValueTable& a, const ValueTable& b);

void to_json(nlohmann::json& j, const MdpSpec& m);
void from_json(const nlohmann::json& j, MdpSpec& m);
void to_json(nlohmann::json& j, const Policy& pi);
void from_json(const nlohmann::json& j, Policy& pi);
void to_json(nlohmann::json& j, const ValueTable& v);

MdpSpec read_mdp_file(const std::string& path);
void write_mdp_file(const MdpSpec& m, const std::string& path);

/// SHA-256 of the canonical JSON serialization, lowercase hex.
std::string mdp_digest(const MdpSpec& m);

}  // namespace cempac
