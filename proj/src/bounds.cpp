#include "cempac/bounds.hpp"

#include <cmath>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cempac/common.hpp"

namespace cempac {

namespace {

using Real = boost::multiprecision::cpp_bin_float_50;

BigInt ceil_to_int(const Real& x) { return static_cast<BigInt>(boost::multiprecision::ceil(x)); }

// ln(|S| |A|^exponent / delta)
Real log_policy_count_over_delta(int states, int actions, std::int64_t exponent, double delta) {
    return log(Real(states)) + Real(exponent) * log(Real(actions)) - log(Real(delta));
}

}  // namespace

void require_valid(const PacParams& p) {
    if (!(p.v_max > 0.0) || !std::isfinite(p.v_max)) throw InvalidInput("v_max must be positive and finite");
    if (!(p.eps > 0.0 && p.eps < p.v_max)) throw InvalidInput("eps must lie in (0, v_max)");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (p.num_states < 1 || p.num_actions < 1) throw InvalidInput("dimensions must be positive");
    if (p.horizon && *p.horizon < 1) throw InvalidInput("horizon must be positive");
    if (!(p.discount >= 0.0 && p.discount <= 1.0)) throw InvalidInput("discount must lie in [0, 1]");
}

SampleSize cem_ns_sample_size(const PacParams& p) {
    require_valid(p);
    if (!p.horizon) throw InvalidInput("the nonstationary bound needs a finite horizon");
    const int H = *p.horizon;
    const Real ratio = Real(p.v_max) / Real(p.eps);
    const Real value = 2 * ratio * ratio *
                       log_policy_count_over_delta(p.num_states, p.num_actions,
                                                   static_cast<std::int64_t>(p.num_states) * H, p.delta);
    SampleSize out;
    out.n = ceil_to_int(value);
    out.log_term = out.n;
    out.total = out.n * p.num_states * p.num_actions * H;
    return out;
}

int truncation_horizon(double discount, double v_max, double eps) {
    if (!(discount >= 0.0 && discount < 1.0)) throw InvalidInput("truncation needs discount in [0, 1)");
    if (!(eps > 0.0 && eps < v_max)) throw InvalidInput("eps must lie in (0, v_max)");
    Real inner = log(4 * Real(v_max) / Real(eps));
    if (inner < 1) inner = 1;
    const Real hbar = boost::multiprecision::ceil(inner / (1 - Real(discount)));
    if (hbar > Real(1'000'000'000)) throw InvalidInput("truncated horizon is unreasonably large");
    return static_cast<int>(hbar);
}

SampleSize cem_s_sample_size_with_hbar(const PacParams& p, int hbar) {
    require_valid(p);
    if (hbar < 1) throw InvalidInput("Hbar must be positive");
    const Real ratio = Real(p.v_max) / Real(p.eps);
    SampleSize out;
    out.hbar = hbar;
    out.log_term = ceil_to_int(32 * ratio * ratio *
                               log_policy_count_over_delta(p.num_states, p.num_actions, p.num_states, p.delta));
    out.bias_term = ceil_to_int(Real(8) * p.num_states * p.num_actions * (hbar - 1) * ratio);
    out.n = (out.log_term > out.bias_term ? out.log_term : out.bias_term) * hbar;
    out.total = out.n * p.num_states * p.num_actions;
    return out;
}

SampleSize cem_s_sample_size(const PacParams& p) {
    require_valid(p);
    if (!(p.discount < 1.0)) throw InvalidInput("the stationary bound needs discount < 1");
    return cem_s_sample_size_with_hbar(p, truncation_horizon(p.discount, p.v_max, p.eps));
}

double hoeffding_dep_tail(std::uint64_t m, double gap, double lo, double hi) {
    if (m < 1) throw InvalidInput("m must be at least 1");
    if (!(hi > lo)) throw InvalidInput("need hi > lo");
    if (!(gap > 0.0)) throw InvalidInput("gap must be positive");
    const double width = (hi - lo);
    return std::exp(-2.0 * static_cast<double>(m) * gap * gap / (width * width));
}

double biased_fraction_bound(int sa, int hbar, std::uint64_t n, double v_max) {
    if (n < 1) throw InvalidInput("N must be at least 1");
    if (sa < 1 || hbar < 1) throw InvalidInput("dimensions must be positive");
    return static_cast<double>(sa) * hbar * (hbar - 1) * v_max / static_cast<double>(n);
}

nlohmann::json to_json(const SampleSize& s) {
    nlohmann::json j{{"N", s.n.str()}, {"total", s.total.str()}, {"log_term", s.log_term.str()}};
    if (s.hbar > 0) {
        j["hbar"] = s.hbar;
        j["bias_term"] = s.bias_term.str();
    }
    return j;
}

}  // namespace cempac
