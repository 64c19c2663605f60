#pragma once

// Closed-form sample-size and tail bounds. Formulas are evaluated with 50
// significant digits and rounded up exactly at the end.

#include <cstdint>
#include <optional>

#include <boost/multiprecision/cpp_int.hpp>

#include "json.hpp"

namespace cempac {

using BigInt = boost::multiprecision::cpp_int;

struct PacParams {
    double eps = 0.0;
    double delta = 0.0;
    double v_max = 0.0;
    int num_states = 0;
    int num_actions = 0;
    std::optional<int> horizon;  ///< required by the nonstationary bound
    double discount = 1.0;       ///< must be < 1 for the stationary bound
};

/// Throws InvalidInput unless 0 < eps < v_max, 0 < delta < 1 and the
/// dimensions are positive.
void require_valid(const PacParams& p);

struct SampleSize {
    BigInt n;      ///< samples per tuple
    BigInt total;  ///< n times the number of sampled tuples
    int hbar = 0;  ///< truncated horizon (stationary bound only)
    BigInt log_term;   ///< ceil of the concentration term
    BigInt bias_term;  ///< ceil of the biased-world term (stationary only)
};

/// N = ceil((2 v_max^2 / eps^2) ln(|S| |A|^(|S| H) / delta)); total N |S||A|H.
SampleSize cem_ns_sample_size(const PacParams& p);

/// N = max(ceil(32 v_max^2/eps^2 ln(|S| |A|^|S| / delta)),
///         ceil(8 |S||A| (Hbar-1) v_max / eps)) * Hbar; total N |S||A|.
SampleSize cem_s_sample_size(const PacParams& p);

/// Same formula with Hbar supplied by the caller instead of derived from
/// (gamma, v_max, eps). Hbar = 1 makes the bias term vanish.
SampleSize cem_s_sample_size_with_hbar(const PacParams& p, int hbar);

/// Hbar = ceil(ln(max(e, 4 v_max / eps)) / (1 - gamma)), so that
/// gamma^Hbar v_max <= eps / 4.
int truncation_horizon(double discount, double v_max, double eps);

/// exp(-2 m gap^2 / (hi - lo)^2).
double hoeffding_dep_tail(std::uint64_t m, double gap, double lo, double hi);

/// |S||A| Hbar (Hbar - 1) v_max / N, with sa = |S||A|.
double biased_fraction_bound(int sa, int hbar, std::uint64_t n, double v_max);

nlohmann::json to_json(const SampleSize& s);

}  // namespace cempac
