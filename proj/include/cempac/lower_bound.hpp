#pragma once

// Hard-instance family for the sample-complexity lower bound and the
// computable quantities its argument rests on.

#include <cstdint>
#include <optional>
#include <utility>

#include "json.hpp"

#include "cempac/common.hpp"
#include "cempac/mdp.hpp"

namespace cempac {

/// K initial states x_i with L actions each. Action j moves x_i to y_ij
/// (reward 0); y_ij pays 1 and stays with probability p_ij, otherwise drops
/// to the absorbing zero-reward state y2_ij. p_ij = p except p_ab = p + alpha
/// in member (a, b). States are ordered x block, then y, then y2, each
/// row-major in (i, j).
struct LowerBoundFamily {
    int K = 1;
    int L = 1;
    double p = 0.6;
    double alpha = 0.0;
    int H = 1;

    int x_state(int i) const noexcept { return i; }
    int y_state(int i, int j) const noexcept { return K + i * L + j; }
    int y2_state(int i, int j) const noexcept { return K + K * L + i * L + j; }
    int num_states() const noexcept { return K + 2 * K * L; }
};

/// Member index: nullopt for M_0, (a, b) (0-based) for M_ab.
using FamilyMember = std::optional<std::pair<int, int>>;

/// Throws InvalidInput unless K, L, H >= 1, p in (1/2, 1) and
/// 0 <= alpha <= (1 - p) / 2.
void require_valid(const LowerBoundFamily& f);

/// Stationary MDP with gamma = 1 and v_max = H.
MdpSpec build_family_member(const LowerBoundFamily& f, const FamilyMember& which);

/// V*(y_ij, 0) = (1 - q^H) / (1 - q) with q = p_ij of the member.
double closed_form_value(const LowerBoundFamily& f, const FamilyMember& which, int i, int j);

struct GapCertificate {
    double p = 0.0;
    double alpha = 0.0;
    double value_bumped = 0.0;  ///< V at the pair with p + alpha
    double value_base = 0.0;    ///< V at a pair with p
    double gap = 0.0;
    bool holds = false;         ///< gap > 2 eps
};

/// Uses p = 1 - 1/H and alpha = 40 eps / H^2. Requires H > 200, 0 < eps < 1.
GapCertificate gap_certificate(int H, double eps);

/// log of (1 + alpha/p)^s (1 - alpha/(1-p))^(l-s).
double log_likelihood_ratio(std::uint64_t s, std::uint64_t l, double p, double alpha);
double likelihood_ratio(std::uint64_t s, std::uint64_t l, double p, double alpha);

struct ChernoffEvent {
    double theta = 0.0;      ///< exp(-c1 alpha^2 l / (p (1-p)))
    double delta_cap = 0.0;  ///< sqrt(2 p (1-p) l ln(c2 / (2 theta)))
    double threshold = 0.0;  ///< p l + delta_cap
    double probability = 0.0;  ///< P(Binomial(l, p) <= threshold)
    double bound = 0.0;      ///< 1 - 2 theta / c2
    bool exact = true;       ///< false when estimated by Monte Carlo
    double std_error = 0.0;  ///< Monte-Carlo standard error (0 when exact)
};

/// Exact binomial CDF for l <= exact_cap, otherwise `replications`
/// Monte-Carlo draws keyed by `seed`.
ChernoffEvent chernoff_event_probability(std::uint64_t l, double p, double alpha, double c1 = 20.0,
                                         double c2 = 6.0, std::uint64_t exact_cap = Caps{}.exact_cdf_trials,
                                         std::uint64_t seed = 0, std::uint64_t replications = 20000);

struct SampleFloor {
    double tau_star = 0.0;  ///< H^3 / (64000 eps^2) ln(1 / (6 delta))
    double total = 0.0;     ///< K L tau_star
    bool vacuous = false;   ///< delta >= 1/6 makes tau_star non-positive
};

/// Requires H > 200, eps in (0, 1), delta in (0, 0.5).
SampleFloor sample_floor(int H, double eps, double delta, int K = 1, int L = 1);

nlohmann::json to_json(const GapCertificate& g);
nlohmann::json to_json(const ChernoffEvent& c);
nlohmann::json to_json(const SampleFloor& f);

}  // namespace cempac
