#include "cempac/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cempac/io.hpp"
#include "cempac/rng.hpp"

namespace cempac {

std::string to_string(Kind kind) {
    return kind == Kind::stationary ? "stationary" : "nonstationary";
}

Kind kind_from_string(std::string_view text) {
    if (text == "stationary") return Kind::stationary;
    if (text == "nonstationary") return Kind::nonstationary;
    throw InvalidInput("unknown kind '" + std::string(text) + "'");
}

MdpSpec MdpSpec::zeros(Kind kind, int states, int actions, std::optional<int> horizon,
                       double discount, double v_max) {
    if (states < 1 || actions < 1) throw InvalidInput("MDP needs at least one state and action");
    if (horizon && *horizon < 1) throw InvalidInput("horizon must be positive");
    if (kind == Kind::nonstationary && !horizon) {
        throw InvalidInput("nonstationary MDPs need a finite horizon");
    }
    MdpSpec m;
    m.kind = kind;
    m.num_states = states;
    m.num_actions = actions;
    m.horizon = horizon;
    m.discount = discount;
    m.v_max = v_max;
    m.rewards.assign(m.tuple_count(), 0.0);
    m.transitions.assign(m.tuple_count() * static_cast<std::size_t>(states), 0.0);
    return m;
}

Policy Policy::uniform_action(Kind kind, int states, int steps, int action) {
    Policy pi;
    pi.kind = kind;
    pi.num_states = states;
    pi.steps = kind == Kind::stationary ? 1 : steps;
    pi.actions.assign(static_cast<std::size_t>(states) * pi.steps, action);
    return pi;
}

ValueTable ValueTable::zeros(int states, int steps, bool infinite) {
    ValueTable v;
    v.num_states = states;
    v.steps = steps;
    v.infinite_horizon = infinite;
    v.values.assign(static_cast<std::size_t>(states) * steps, 0.0);
    return v;
}

namespace {

std::string coordinate(const MdpSpec& m, int s, int a, int t) {
    std::ostringstream os;
    os << '(' << s << ',' << a;
    if (m.kind == Kind::nonstationary) os << ',' << t;
    os << ')';
    return os.str();
}

}  // namespace

std::vector<std::string> validate_mdp(const MdpSpec& m) {
    std::vector<std::string> issues;
    if (m.num_states < 1) issues.push_back("num_states must be positive");
    if (m.num_actions < 1) issues.push_back("num_actions must be positive");
    if (m.horizon && *m.horizon < 1) issues.push_back("horizon must be positive");
    if (!(m.discount >= 0.0 && m.discount <= 1.0)) issues.push_back("discount must lie in [0, 1]");
    if (!m.horizon && m.discount >= 1.0) {
        issues.push_back("discount 1 is only permitted with a finite horizon");
    }
    if (m.kind == Kind::nonstationary && !m.horizon) {
        issues.push_back("nonstationary MDPs need a finite horizon");
    }
    if (!(m.v_max > 0.0) || !std::isfinite(m.v_max)) issues.push_back("v_max must be positive and finite");
    if (!issues.empty()) return issues;

    const std::size_t tuples = m.tuple_count();
    if (m.rewards.size() != tuples) {
        issues.push_back("reward tensor has " + std::to_string(m.rewards.size()) +
                         " entries, expected " + std::to_string(tuples));
    }
    if (m.transitions.size() != tuples * static_cast<std::size_t>(m.num_states)) {
        issues.push_back("transition tensor has " + std::to_string(m.transitions.size()) +
                         " entries, expected " +
                         std::to_string(tuples * static_cast<std::size_t>(m.num_states)));
    }
    if (!issues.empty()) return issues;

    bool rewards_in_unit = true;
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            for (int t = 0; t < m.layers(); ++t) {
                const double r = m.reward(s, a, t);
                if (!std::isfinite(r)) issues.push_back("R" + coordinate(m, s, a, t) + " is not finite");
                if (r < 0.0 || r > 1.0) rewards_in_unit = false;
                double mass = 0.0;
                bool bad_entry = false;
                for (double p : m.transition_row(s, a, t)) {
                    if (!std::isfinite(p) || p < 0.0) bad_entry = true;
                    mass += p;
                }
                if (bad_entry) {
                    issues.push_back("T" + coordinate(m, s, a, t) + " has a negative or non-finite entry");
                } else if (std::abs(mass - 1.0) > kRowSumTolerance) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "T" << coordinate(m, s, a, t) << " sums to " << mass;
                    issues.push_back(os.str());
                }
            }
        }
    }
    if (rewards_in_unit) {
        double ceiling = std::numeric_limits<double>::infinity();
        if (m.horizon) ceiling = *m.horizon;
        if (m.discount < 1.0) ceiling = std::min(ceiling, 1.0 / (1.0 - m.discount));
        if (m.v_max > ceiling * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "v_max " << m.v_max << " exceeds min(H, 1/(1-gamma)) = " << ceiling
               << " for rewards in [0, 1]";
            issues.push_back(os.str());
        }
    }
    return issues;
}

void require_valid(const MdpSpec& m) {
    const auto issues = validate_mdp(m);
    if (issues.empty()) return;
    std::string msg = "invalid MDP: " + issues.front();
    if (issues.size() > 1) msg += " (and " + std::to_string(issues.size() - 1) + " more)";
    throw InvalidInput(msg);
}

void require_compatible(const MdpSpec& m, const Policy& pi) {
    if (pi.num_states != m.num_states) throw InvalidInput("policy state count does not match MDP");
    if (pi.kind == Kind::nonstationary) {
        if (!m.horizon) throw InvalidInput("nonstationary policy on an infinite-horizon MDP");
        if (pi.steps != *m.horizon) throw InvalidInput("policy horizon does not match MDP horizon");
    } else if (pi.steps != 1) {
        throw InvalidInput("stationary policy must have a single step");
    }
    if (pi.actions.size() != static_cast<std::size_t>(pi.num_states) * pi.steps) {
        throw InvalidInput("policy action table has the wrong size");
    }
    for (int a : pi.actions) {
        if (a < 0 || a >= m.num_actions) throw InvalidInput("policy action out of range");
    }
}

namespace {

// R(s,a,t) + gamma * sum_{s'} T(s,a,t,s') V(s'), summed in ascending s'.
inline double backup(const MdpSpec& m, int s, int a, int t, std::span<const double> next) {
    const auto row = m.transition_row(s, a, t);
    double expected = 0.0;
    for (int sp = 0; sp < m.num_states; ++sp) expected += row[sp] * next[sp];
    return m.reward(s, a, t) + m.discount * expected;
}

void require_solvable(const MdpSpec& m) {
    require_valid(m);
    if (!m.horizon && m.discount >= 1.0) throw InvalidInput("infinite horizon requires discount < 1");
}

}  // namespace

ValueTable evaluate_policy(const MdpSpec& m, const Policy& pi, const SolveOptions& opts) {
    require_solvable(m);
    require_compatible(m, pi);
    const int S = m.num_states;

    if (m.horizon) {
        const int H = *m.horizon;
        ValueTable v = ValueTable::zeros(S, H, false);
        const std::vector<double> terminal(static_cast<std::size_t>(S), 0.0);
        for (int t = H - 1; t >= 0; --t) {
            const std::span<const double> next =
                t + 1 < H ? v.layer(t + 1) : std::span<const double>(terminal);
            for (int s = 0; s < S; ++s) v.at(s, t) = backup(m, s, pi.action(s, t), t, next);
        }
        return v;
    }

    ValueTable v = ValueTable::zeros(S, 1, true);
    std::vector<double> next(static_cast<std::size_t>(S));
    for (std::uint64_t it = 0; it < opts.max_iterations; ++it) {
        double change = 0.0;
        for (int s = 0; s < S; ++s) {
            next[s] = backup(m, s, pi.action(s), 0, v.values);
            change = std::max(change, std::abs(next[s] - v.values[s]));
        }
        v.values.swap(next);
        if (change <= opts.tolerance) {
            v.error_bound = opts.tolerance * m.discount / (1.0 - m.discount);
            return v;
        }
    }
    throw InvalidInput("policy evaluation did not converge within the iteration limit");
}

Solution optimal_policy(const MdpSpec& m, const SolveOptions& opts) {
    require_solvable(m);
    const int S = m.num_states;
    const int A = m.num_actions;

    auto greedy = [&](int s, int t, std::span<const double> next, double& best) {
        int best_action = 0;
        best = backup(m, s, 0, t, next);
        for (int a = 1; a < A; ++a) {
            const double q = backup(m, s, a, t, next);
            if (q > best) {
                best = q;
                best_action = a;
            }
        }
        return best_action;
    };

    if (m.horizon) {
        const int H = *m.horizon;
        Solution sol{Policy::uniform_action(Kind::nonstationary, S, H, 0),
                     ValueTable::zeros(S, H, false)};
        const std::vector<double> terminal(static_cast<std::size_t>(S), 0.0);
        for (int t = H - 1; t >= 0; --t) {
            const std::span<const double> next =
                t + 1 < H ? sol.values.layer(t + 1) : std::span<const double>(terminal);
            for (int s = 0; s < S; ++s) {
                double best = 0.0;
                sol.policy.action(s, t) = greedy(s, t, next, best);
                sol.values.at(s, t) = best;
            }
        }
        return sol;
    }

    ValueTable v = ValueTable::zeros(S, 1, true);
    std::vector<double> next(static_cast<std::size_t>(S));
    bool converged = false;
    for (std::uint64_t it = 0; it < opts.max_iterations && !converged; ++it) {
        double change = 0.0;
        for (int s = 0; s < S; ++s) {
            double best = 0.0;
            greedy(s, 0, v.values, best);
            next[s] = best;
            change = std::max(change, std::abs(next[s] - v.values[s]));
        }
        v.values.swap(next);
        converged = change <= opts.tolerance;
    }
    if (!converged) throw InvalidInput("value iteration did not converge within the iteration limit");
    v.error_bound = opts.tolerance * m.discount / (1.0 - m.discount);

    Solution sol{Policy::uniform_action(Kind::stationary, S, 1, 0), v};
    for (int s = 0; s < S; ++s) {
        double best = 0.0;
        sol.policy.action(s) = greedy(s, 0, v.values, best);
    }
    return sol;
}

PolicyEnumerator::PolicyEnumerator(Kind kind, int states, int steps, int actions)
    : current_(Policy::uniform_action(kind, states, steps, 0)), num_actions_(actions) {}

bool PolicyEnumerator::next() {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        return true;
    }
    for (auto it = current_.actions.rbegin(); it != current_.actions.rend(); ++it) {
        if (++*it < num_actions_) return true;
        *it = 0;
    }
    done_ = true;
    return false;
}

Kind default_policy_kind(const MdpSpec& m) {
    return m.horizon ? Kind::nonstationary : Kind::stationary;
}

std::optional<std::uint64_t> count_policies(const MdpSpec& m, Kind kind) {
    if (kind == Kind::nonstationary && !m.horizon) return std::nullopt;
    const std::uint64_t positions =
        static_cast<std::uint64_t>(m.num_states) * (kind == Kind::nonstationary ? *m.horizon : 1);
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < positions; ++i) {
        if (count > std::numeric_limits<std::uint64_t>::max() / m.num_actions) return std::nullopt;
        count *= static_cast<std::uint64_t>(m.num_actions);
    }
    return count;
}

PolicyEnumerator enumerate_policies(const MdpSpec& m, std::optional<Kind> kind, std::uint64_t cap) {
    require_valid(m);
    const Kind k = kind.value_or(default_policy_kind(m));
    if (k == Kind::nonstationary && !m.horizon) {
        throw InvalidInput("nonstationary policies need a finite horizon");
    }
    const auto count = count_policies(m, k);
    if (!count || *count > cap) {
        std::ostringstream required;
        required << m.num_actions << "^" << m.num_states * (k == Kind::nonstationary ? *m.horizon : 1);
        if (count) required.str(std::to_string(*count));
        throw CapExceeded("policy enumeration exceeds cap " + std::to_string(cap), required.str());
    }
    return PolicyEnumerator(k, m.num_states, k == Kind::nonstationary ? *m.horizon : 1,
                            m.num_actions);
}

MdpSpec random_mdp(const RandomMdpOptions& opts, std::uint64_t seed) {
    double v_max = std::numeric_limits<double>::infinity();
    if (opts.horizon) v_max = *opts.horizon;
    if (opts.discount < 1.0) v_max = std::min(v_max, 1.0 / (1.0 - opts.discount));
    MdpSpec m = MdpSpec::zeros(opts.kind, opts.num_states, opts.num_actions, opts.horizon,
                               opts.discount, v_max);
    KeyedStream stream(stream_key(seed, {0x6d6470 /* "mdp" */}));
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            for (int t = 0; t < m.layers(); ++t) {
                m.reward(s, a, t) = stream.next_unit();
                auto row = m.transition_row(s, a, t);
                double total = 0.0;
                for (double& p : row) {
                    p = stream.next_exponential();
                    total += p;
                }
                for (double& p : row) p /= total;
            }
        }
    }
    return m;
}

MdpSpec as_nonstationary(const MdpSpec& m) {
    if (!m.horizon) throw InvalidInput("time-indexed form needs a finite horizon");
    if (m.kind == Kind::nonstationary) return m;
    MdpSpec out = MdpSpec::zeros(Kind::nonstationary, m.num_states, m.num_actions, m.horizon,
                                 m.discount, m.v_max);
    out.meta = m.meta;
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            for (int t = 0; t < *m.horizon; ++t) {
                out.reward(s, a, t) = m.reward(s, a);
                std::ranges::copy(m.transition_row(s, a), out.transition_row(s, a, t).begin());
            }
        }
    }
    return out;
}

MdpSpec renormalized(const MdpSpec& m) {
    MdpSpec out = m;
    for (std::size_t i = 0; i < out.tuple_count(); ++i) {
        std::span<double> row(out.transitions.data() + i * out.num_states,
                              static_cast<std::size_t>(out.num_states));
        double total = 0.0;
        for (double p : row) total += p;
        if (total <= 0.0) throw InvalidInput("cannot renormalize a row with no mass");
        for (double& p : row) p /= total;
    }
    return out;
}

double max_abs_difference(const ValueTable& a, const ValueTable& b) {
    if (a.num_states != b.num_states || a.steps != b.steps) {
        throw InvalidInput("value tables have different shapes");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const MdpSpec& m) {
    using nlohmann::json;
    json T = json::array();
    json R = json::array();
    for (int s = 0; s < m.num_states; ++s) {
        json Ts = json::array();
        json Rs = json::array();
        for (int a = 0; a < m.num_actions; ++a) {
            if (m.kind == Kind::stationary) {
                Ts.push_back(json(std::vector<double>(m.transition_row(s, a).begin(),
                                                      m.transition_row(s, a).end())));
                Rs.push_back(m.reward(s, a));
            } else {
                json Tsa = json::array();
                json Rsa = json::array();
                for (int t = 0; t < m.layers(); ++t) {
                    const auto row = m.transition_row(s, a, t);
                    Tsa.push_back(json(std::vector<double>(row.begin(), row.end())));
                    Rsa.push_back(m.reward(s, a, t));
                }
                Ts.push_back(std::move(Tsa));
                Rs.push_back(std::move(Rsa));
            }
        }
        T.push_back(std::move(Ts));
        R.push_back(std::move(Rs));
    }
    j = json{{"kind", to_string(m.kind)},
             {"S", m.num_states},
             {"A", m.num_actions},
             {"gamma", m.discount},
             {"v_max", m.v_max},
             {"T", std::move(T)},
             {"R", std::move(R)}};
    if (m.horizon) {
        j["H"] = *m.horizon;
    } else {
        j["H"] = "inf";
    }
    if (!m.meta.is_null()) j["meta"] = m.meta;
}

void from_json(const nlohmann::json& j, MdpSpec& m) {
    try {
        const Kind kind = kind_from_string(j.at("kind").get<std::string>());
        std::optional<int> horizon;
        const auto& H = j.at("H");
        if (H.is_string()) {
            if (H.get<std::string>() != "inf") throw InvalidInput("H must be an integer or \"inf\"");
        } else {
            horizon = H.get<int>();
        }
        m = MdpSpec::zeros(kind, j.at("S").get<int>(), j.at("A").get<int>(), horizon,
                           j.at("gamma").get<double>(), j.at("v_max").get<double>());
        const auto& T = j.at("T");
        const auto& R = j.at("R");
        auto check_size = [](const nlohmann::json& arr, int expected, const char* what) {
            if (!arr.is_array() || static_cast<int>(arr.size()) != expected) {
                throw InvalidInput(std::string("tensor ") + what + " has the wrong shape");
            }
        };
        check_size(T, m.num_states, "T");
        check_size(R, m.num_states, "R");
        for (int s = 0; s < m.num_states; ++s) {
            check_size(T[s], m.num_actions, "T");
            check_size(R[s], m.num_actions, "R");
            for (int a = 0; a < m.num_actions; ++a) {
                for (int t = 0; t < m.layers(); ++t) {
                    const auto& row = kind == Kind::stationary ? T[s][a] : T[s][a].at(t);
                    check_size(row, m.num_states, "T");
                    auto dst = m.transition_row(s, a, t);
                    for (int sp = 0; sp < m.num_states; ++sp) dst[sp] = row[sp].get<double>();
                    m.reward(s, a, t) =
                        kind == Kind::stationary ? R[s][a].get<double>() : R[s][a].at(t).get<double>();
                }
                if (kind == Kind::nonstationary) {
                    check_size(T[s][a], m.layers(), "T");
                    check_size(R[s][a], m.layers(), "R");
                }
            }
        }
        if (j.contains("meta")) m.meta = j.at("meta");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed MDP JSON: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const Policy& pi) {
    using nlohmann::json;
    json actions = json::array();
    for (int s = 0; s < pi.num_states; ++s) {
        if (pi.kind == Kind::stationary) {
            actions.push_back(pi.action(s));
        } else {
            json row = json::array();
            for (int t = 0; t < pi.steps; ++t) row.push_back(pi.action(s, t));
            actions.push_back(std::move(row));
        }
    }
    j = json{{"kind", to_string(pi.kind)}, {"actions", std::move(actions)}};
}

void from_json(const nlohmann::json& j, Policy& pi) {
    try {
        const Kind kind = kind_from_string(j.at("kind").get<std::string>());
        const auto& actions = j.at("actions");
        const int states = static_cast<int>(actions.size());
        if (states == 0) throw InvalidInput("policy has no states");
        const int steps = kind == Kind::stationary ? 1 : static_cast<int>(actions[0].size());
        pi = Policy::uniform_action(kind, states, steps, 0);
        for (int s = 0; s < states; ++s) {
            if (kind == Kind::stationary) {
                pi.action(s) = actions[s].get<int>();
            } else {
                if (static_cast<int>(actions[s].size()) != steps) {
                    throw InvalidInput("ragged nonstationary policy");
                }
                for (int t = 0; t < steps; ++t) pi.action(s, t) = actions[s][t].get<int>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed policy JSON: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const ValueTable& v) {
    using nlohmann::json;
    json values = json::array();
    for (int s = 0; s < v.num_states; ++s) {
        if (v.infinite_horizon) {
            values.push_back(v.at(s));
        } else {
            json row = json::array();
            for (int t = 0; t < v.steps; ++t) row.push_back(v.at(s, t));
            values.push_back(std::move(row));
        }
    }
    j = json{{"infinite_horizon", v.infinite_horizon}, {"values", std::move(values)}};
    if (v.infinite_horizon) j["error_bound"] = v.error_bound;
}

MdpSpec read_mdp_file(const std::string& path) { return read_json_file(path).get<MdpSpec>(); }

void write_mdp_file(const MdpSpec& m, const std::string& path) {
    write_json_file(path, nlohmann::json(m));
}

std::string mdp_digest(const MdpSpec& m) { return sha256_hex(nlohmann::json(m).dump()); }

}  // namespace cempac
