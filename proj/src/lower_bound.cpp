#include "cempac/lower_bound.hpp"

#include <cmath>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cempac/rng.hpp"

namespace cempac {

namespace {

using Real = boost::multiprecision::cpp_bin_float_50;

Real geometric_value(const Real& q, int H) { return (1 - pow(q, H)) / (1 - q); }

double member_probability(const LowerBoundFamily& f, const FamilyMember& which, int i, int j) {
    return which && which->first == i && which->second == j ? f.p + f.alpha : f.p;
}

}  // namespace

void require_valid(const LowerBoundFamily& f) {
    if (f.K < 1 || f.L < 1 || f.H < 1) throw InvalidInput("K, L and H must be positive");
    if (!(f.p >= 0.5 && f.p < 1.0)) throw InvalidInput("p must lie in [1/2, 1)");
    if (!(f.alpha >= 0.0)) throw InvalidInput("alpha must be nonnegative");
    if (f.alpha > (1.0 - f.p) / 2.0) throw InvalidInput("alpha must not exceed (1 - p) / 2");
}

MdpSpec build_family_member(const LowerBoundFamily& f, const FamilyMember& which) {
    require_valid(f);
    if (which && (which->first < 0 || which->first >= f.K || which->second < 0 || which->second >= f.L)) {
        throw InvalidInput("member index out of range");
    }
    MdpSpec m = MdpSpec::zeros(Kind::stationary, f.num_states(), f.L, f.H, 1.0, f.H);
    for (int i = 0; i < f.K; ++i) {
        for (int j = 0; j < f.L; ++j) {
            m.transition_row(f.x_state(i), j)[f.y_state(i, j)] = 1.0;
            const double stay = member_probability(f, which, i, j);
            const int y = f.y_state(i, j);
            const int y2 = f.y2_state(i, j);
            for (int a = 0; a < f.L; ++a) {
                m.transition_row(y, a)[y] = stay;
                m.transition_row(y, a)[y2] = 1.0 - stay;
                m.reward(y, a) = 1.0;
                m.transition_row(y2, a)[y2] = 1.0;
            }
        }
    }
    m.meta = {{"family", {{"K", f.K}, {"L", f.L}, {"p", f.p}, {"alpha", f.alpha}, {"H", f.H}}},
              {"state_order", "x[i], y[i][j], y2[i][j]; row-major in (i, j)"}};
    if (which) {
        m.meta["member"] = {which->first, which->second};
    } else {
        m.meta["member"] = nullptr;
    }
    return m;
}

double closed_form_value(const LowerBoundFamily& f, const FamilyMember& which, int i, int j) {
    require_valid(f);
    if (i < 0 || i >= f.K || j < 0 || j >= f.L) throw InvalidInput("pair index out of range");
    Real q(f.p);
    if (which && which->first == i && which->second == j) q += Real(f.alpha);
    return static_cast<double>(geometric_value(q, f.H));
}

GapCertificate gap_certificate(int H, double eps) {
    if (H <= 200) throw InvalidInput("the gap certificate needs H > 200");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
    const Real p = 1 - Real(1) / H;
    const Real alpha = 40 * Real(eps) / (Real(H) * H);
    const Real bumped = geometric_value(p + alpha, H);
    const Real base = geometric_value(p, H);
    GapCertificate g;
    g.p = static_cast<double>(p);
    g.alpha = static_cast<double>(alpha);
    g.value_bumped = static_cast<double>(bumped);
    g.value_base = static_cast<double>(base);
    g.gap = static_cast<double>(bumped - base);
    g.holds = bumped - base > 2 * Real(eps);
    return g;
}

double log_likelihood_ratio(std::uint64_t s, std::uint64_t l, double p, double alpha) {
    if (s > l) throw InvalidInput("successes exceed trials");
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("p must lie in (0, 1)");
    if (!(alpha >= 0.0) || alpha > (1.0 - p) / 2.0) throw InvalidInput("alpha must lie in [0, (1 - p) / 2]");
    return static_cast<double>(s) * std::log1p(alpha / p) +
           static_cast<double>(l - s) * std::log1p(-alpha / (1.0 - p));
}

double likelihood_ratio(std::uint64_t s, std::uint64_t l, double p, double alpha) {
    return std::exp(log_likelihood_ratio(s, l, p, alpha));
}

ChernoffEvent chernoff_event_probability(std::uint64_t l, double p, double alpha, double c1, double c2,
                                         std::uint64_t exact_cap, std::uint64_t seed, std::uint64_t replications) {
    if (l < 1) throw InvalidInput("need at least one trial");
    if (!(p > 0.5 && p < 1.0)) throw InvalidInput("p must lie in (1/2, 1)");
    if (!(alpha >= 0.0)) throw InvalidInput("alpha must be nonnegative");
    if (!(c1 > 0.0 && c2 > 0.0)) throw InvalidInput("constants must be positive");
    const double variance = p * (1.0 - p);
    const double ld = static_cast<double>(l);
    ChernoffEvent e;
    const double log_theta = -c1 * alpha * alpha * ld / variance;
    e.theta = std::exp(log_theta);
    // ln(c2 / (2 theta)) computed from log theta so tiny theta stays finite.
    const double log_term = std::log(c2 / 2.0) - log_theta;
    e.delta_cap = std::sqrt(std::max(0.0, 2.0 * variance * ld * log_term));
    e.threshold = p * ld + e.delta_cap;
    e.bound = 1.0 - 2.0 * e.theta / c2;
    const double k = std::floor(e.threshold);
    if (k >= ld) {
        e.probability = 1.0;
        return e;
    }
    if (l <= exact_cap) {
        e.probability = boost::math::cdf(boost::math::binomial_distribution<double>(ld, p), k);
        return e;
    }
    e.exact = false;
    std::mt19937_64 engine(stream_key(seed, {0x636865726e6f6666ULL, l}));
    std::binomial_distribution<std::uint64_t> draw(l, p);
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < replications; ++r) {
        if (static_cast<double>(draw(engine)) <= k) ++hits;
    }
    e.probability = static_cast<double>(hits) / static_cast<double>(replications);
    e.std_error = std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(replications));
    return e;
}

SampleFloor sample_floor(int H, double eps, double delta, int K, int L) {
    if (H <= 200) throw InvalidInput("the sample floor needs H > 200");
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 0.5)) throw InvalidInput("delta must lie in (0, 0.5)");
    if (K < 1 || L < 1) throw InvalidInput("K and L must be positive");
    const Real h(H);
    const Real tau = h * h * h / (64000 * Real(eps) * Real(eps)) * log(1 / (6 * Real(delta)));
    SampleFloor f;
    f.tau_star = static_cast<double>(tau);
    f.total = static_cast<double>(tau * K * L);
    f.vacuous = !(tau > 0);
    return f;
}

nlohmann::json to_json(const GapCertificate& g) {
    return {{"p", g.p},       {"alpha", g.alpha},        {"value_bumped", g.value_bumped},
            {"value_base", g.value_base}, {"gap", g.gap}, {"holds", g.holds}};
}

nlohmann::json to_json(const ChernoffEvent& c) {
    nlohmann::json j{{"theta", c.theta},         {"delta_cap", c.delta_cap}, {"threshold", c.threshold},
                     {"probability", c.probability}, {"bound", c.bound},     {"exact", c.exact}};
    if (!c.exact) j["std_error"] = c.std_error;
    return j;
}

nlohmann::json to_json(const SampleFloor& f) {
    return {{"tau_star", f.tau_star}, {"total", f.total}, {"vacuous", f.vacuous}};
}

}  // namespace cempac
