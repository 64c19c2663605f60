#include "cempac/cem.hpp"

#include <algorithm>

#include "cempac/bounds.hpp"

namespace cempac {

namespace {

void require_matching_dims(const Dataset& d, const MdpSpec& skeleton) {
    if (d.num_states != skeleton.num_states || d.num_actions != skeleton.num_actions) {
        throw InvalidInput("dataset dimensions do not match the skeleton");
    }
}

void fill_from_counts(MdpSpec& out, const Dataset& d) {
    const double n = d.n;
    for (int s = 0; s < d.num_states; ++s) {
        for (int a = 0; a < d.num_actions; ++a) {
            for (int t = 0; t < d.layers(); ++t) {
                const auto counts = empirical_counts(d, s, a, t);
                auto row = out.transition_row(s, a, t);
                for (int sp = 0; sp < d.num_states; ++sp) row[sp] = counts[sp] / n;
            }
        }
    }
}

}  // namespace

EmpiricalModel build_empirical_ns(const Dataset& d, const MdpSpec& skeleton) {
    require_valid(skeleton);
    if (d.kind != Kind::nonstationary) throw InvalidInput("CEM-NS needs a nonstationary dataset");
    require_matching_dims(d, skeleton);
    if (!skeleton.horizon || *skeleton.horizon != d.horizon) {
        throw InvalidInput("skeleton horizon does not match the dataset");
    }
    EmpiricalModel model{as_nonstationary(skeleton), d.source_seed, d.source_mdp_digest};
    fill_from_counts(model.mdp, d);
    require_valid(model.mdp);
    return model;
}

EmpiricalModel build_empirical_s(const Dataset& d, const MdpSpec& skeleton) {
    require_valid(skeleton);
    if (skeleton.kind != Kind::stationary) throw InvalidInput("CEM-S needs a stationary skeleton");
    const Dataset pooled = d.kind == Kind::stationary ? d : pooled_view(d);
    require_matching_dims(pooled, skeleton);
    EmpiricalModel model{skeleton, pooled.source_seed, pooled.source_mdp_digest};
    fill_from_counts(model.mdp, pooled);
    require_valid(model.mdp);
    return model;
}

Solution cem_ns_solve(const Dataset& d, const MdpSpec& skeleton, const SolveOptions& opts) {
    return optimal_policy(build_empirical_ns(d, skeleton).mdp, opts);
}

Solution cem_s_solve(const Dataset& d, const MdpSpec& skeleton, const SolveOptions& opts) {
    return optimal_policy(build_empirical_s(d, skeleton).mdp, opts);
}

MdpSpec truncate_to(const MdpSpec& m, int hbar) {
    if (hbar < 1) throw InvalidInput("truncated horizon must be positive");
    if (m.kind != Kind::stationary) throw InvalidInput("truncation applies to stationary MDPs");
    MdpSpec out = m;
    out.horizon = hbar;
    // Unit-range rewards cap the truncated return at hbar.
    const bool unit_rewards =
        std::all_of(m.rewards.begin(), m.rewards.end(), [](double r) { return r >= 0.0 && r <= 1.0; });
    if (unit_rewards) out.v_max = std::min(out.v_max, static_cast<double>(hbar));
    return out;
}

Truncation truncate_horizon(const MdpSpec& m, double eps) {
    require_valid(m);
    if (m.kind != Kind::stationary || m.horizon) {
        throw InvalidInput("truncation applies to infinite-horizon stationary MDPs");
    }
    if (!(m.discount < 1.0)) throw InvalidInput("truncation needs discount < 1");
    if (!(eps > 0.0 && eps < m.v_max)) throw InvalidInput("eps must lie in (0, v_max)");
    const int hbar = truncation_horizon(m.discount, m.v_max, eps);
    return {truncate_to(m, hbar), hbar};
}

}  // namespace cempac
