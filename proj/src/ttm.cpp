#include "cempac/ttm.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cempac/rng.hpp"
#include "cempac/summation.hpp"

namespace cempac {

namespace {

constexpr std::uint64_t kTreeDomain = 0x74726565ULL;  // "tree"

}  // namespace

std::optional<std::uint64_t> tree_node_count(int num_actions, int depth) {
    std::uint64_t total = 0;
    std::uint64_t level = 1;
    for (int t = 0; t <= depth; ++t) {
        if (total > std::numeric_limits<std::uint64_t>::max() - level) return std::nullopt;
        total += level;
        if (t < depth) {
            if (level > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(num_actions)) {
                return std::nullopt;
            }
            level *= static_cast<std::uint64_t>(num_actions);
        }
    }
    return total;
}

TrajectoryTree build_tree(const MdpSpec& m, int root, std::uint64_t seed, std::uint64_t cap) {
    require_valid(m);
    if (!m.horizon) throw InvalidInput("trajectory trees need a finite horizon");
    if (root < 0 || root >= m.num_states) throw InvalidInput("root state out of range");
    const int H = *m.horizon;
    const auto nodes = tree_node_count(m.num_actions, H);
    if (!nodes || *nodes > cap) {
        throw CapExceeded("trajectory tree exceeds node cap " + std::to_string(cap),
                          nodes ? std::to_string(*nodes)
                                : std::to_string(m.num_actions) + "^" + std::to_string(H + 1));
    }
    TrajectoryTree tree;
    tree.root_state = root;
    tree.depth = H;
    tree.num_actions = m.num_actions;
    tree.states.assign(*nodes, 0);
    tree.rewards.assign(*nodes, 0.0);
    tree.states[0] = root;
    std::size_t level_begin = 0;
    std::size_t level_size = 1;
    for (int t = 0; t < H; ++t) {
        for (std::size_t v = level_begin; v < level_begin + level_size; ++v) {
            const int s = tree.states[v];
            for (int a = 0; a < m.num_actions; ++a) {
                const std::size_t c = tree.child(v, a);
                const double u = unit_interval(stream_key(seed, {kTreeDomain, c}));
                tree.states[c] = draw_categorical(m.transition_row(s, a, t), u);
                tree.rewards[c] = m.reward(s, a, t);
            }
        }
        level_begin += level_size;
        level_size *= static_cast<std::size_t>(m.num_actions);
    }
    return tree;
}

double eval_policy_on_tree(const TrajectoryTree& tree, const Policy& pi, double discount) {
    double value = 0.0;
    double weight = 1.0;
    std::size_t node = 0;
    for (int t = 0; t < tree.depth; ++t) {
        node = tree.child(node, pi.action(tree.states[node], t));
        value += weight * tree.rewards[node];
        weight *= discount;
    }
    return value;
}

std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index) { return stream_key(seed, {kTreeDomain, index}); }

TtmResult ttm_select(const MdpSpec& m, int root, std::span<const Policy> policies, std::uint64_t m_trees,
                     std::uint64_t seed, std::uint64_t cap) {
    if (m_trees < 1) throw InvalidInput("need at least one tree");
    if (policies.empty()) throw InvalidInput("policy class is empty");
    require_valid(m);
    for (const Policy& pi : policies) require_compatible(m, pi);
    std::vector<CompensatedSum> sums(policies.size());
    for (std::uint64_t i = 0; i < m_trees; ++i) {
        const TrajectoryTree tree = build_tree(m, root, tree_seed(seed, i), cap);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            sums[p].add(eval_policy_on_tree(tree, policies[p], m.discount));
        }
    }
    TtmResult out;
    out.averages.resize(policies.size());
    for (std::size_t p = 0; p < policies.size(); ++p) {
        out.averages[p] = sums[p].value() / static_cast<double>(m_trees);
        if (out.averages[p] > out.averages[out.index]) out.index = p;
    }
    return out;
}

std::uint64_t ttm_tree_count(double v_max, double eps, double delta, std::uint64_t policy_count) {
    using Real = boost::multiprecision::cpp_bin_float_50;
    if (!(v_max > 0.0) || !(eps > 0.0)) throw InvalidInput("v_max and eps must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (policy_count < 1) throw InvalidInput("policy class is empty");
    const Real ratio = Real(v_max) / Real(eps);
    const Real m = boost::multiprecision::ceil(2 * ratio * ratio * log(2 * Real(policy_count) / Real(delta)));
    if (m > Real(std::numeric_limits<std::uint64_t>::max() / 2)) throw InvalidInput("tree count overflows");
    return static_cast<std::uint64_t>(m);
}

}  // namespace cempac
