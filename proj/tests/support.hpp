#pragma once

#include "cempac/mdp.hpp"

namespace cempac::testing {

/// Every (s, a, t) moves to (s + a + t) mod |S| with reward r(s, a).
inline MdpSpec deterministic_mdp(int states, int actions, int horizon) {
    MdpSpec m = MdpSpec::zeros(Kind::nonstationary, states, actions, horizon, 1.0, horizon);
    for (int s = 0; s < states; ++s) {
        for (int a = 0; a < actions; ++a) {
            for (int t = 0; t < horizon; ++t) {
                m.transition_row(s, a, t)[(s + a + t) % states] = 1.0;
                m.reward(s, a, t) = 0.25 * ((s + 2 * a) % 4);
            }
        }
    }
    return m;
}

/// Uniform transitions and a constant reward.
inline MdpSpec constant_mdp(Kind kind, int states, int actions, std::optional<int> horizon, double discount,
                            double reward) {
    const double v_max = horizon ? *horizon : 1.0 / (1.0 - discount);
    MdpSpec m = MdpSpec::zeros(kind, states, actions, horizon, discount, v_max);
    for (double& p : m.transitions) p = 1.0 / states;
    for (double& r : m.rewards) r = reward;
    return m;
}

}  // namespace cempac::testing
