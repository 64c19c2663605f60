#pragma once

// Certainty-equivalence planning: estimate T by empirical frequencies and
// solve the estimated model exactly.

#include <cstdint>
#include <string>

#include "cempac/mdp.hpp"
#include "cempac/sampling.hpp"

namespace cempac {

/// The maximum-likelihood model M-hat. T-hat entries are count / N.
struct EmpiricalModel {
    MdpSpec mdp;
    std::uint64_t source_seed = 0;
    std::string source_mdp_digest;
};

/// Time-indexed estimate. The skeleton supplies R, H, gamma and v_max and
/// must have a finite horizon equal to the dataset's.
EmpiricalModel build_empirical_ns(const Dataset& d, const MdpSpec& skeleton);

/// Time-independent estimate from a stationary dataset; a nonstationary
/// dataset is pooled first. The skeleton must be stationary.
EmpiricalModel build_empirical_s(const Dataset& d, const MdpSpec& skeleton);

Solution cem_ns_solve(const Dataset& d, const MdpSpec& skeleton, const SolveOptions& opts = {});

/// Optimal policy of the stationary estimate. With an infinite horizon the
/// policy is stationary; a finite-horizon skeleton yields the exact
/// time-indexed optimum of M-hat instead.
Solution cem_s_solve(const Dataset& d, const MdpSpec& skeleton, const SolveOptions& opts = {});

/// Same T and R with the horizon cut to `hbar` steps (discount unchanged).
MdpSpec truncate_to(const MdpSpec& m, int hbar);

struct Truncation {
    MdpSpec mdp;
    int hbar = 0;
};

/// Cuts a discounted stationary MDP at Hbar = truncation_horizon(gamma,
/// v_max, eps), which keeps gamma^Hbar v_max <= eps / 4.
Truncation truncate_horizon(const MdpSpec& m, double eps);

}  // namespace cempac
