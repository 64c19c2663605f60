#pragma once

// Trajectory trees: one sampled successor for every action at every node, so
// a single tree yields a value estimate for every policy at once.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cempac/common.hpp"
#include "cempac/mdp.hpp"

namespace cempac {

/// Complete |A|-ary tree of depth H in heap order: the child of node v under
/// action a is v*|A| + 1 + a.
struct TrajectoryTree {
    int root_state = 0;
    int depth = 0;
    int num_actions = 0;
    std::vector<int> states;      ///< state carried by each node
    std::vector<double> rewards;  ///< reward on the edge into each node (0 at the root)

    std::size_t child(std::size_t node, int a) const noexcept {
        return node * static_cast<std::size_t>(num_actions) + 1 + static_cast<std::size_t>(a);
    }
};

/// (|A|^(H+1) - 1) / (|A| - 1), or H + 1 when |A| = 1; nullopt on overflow.
std::optional<std::uint64_t> tree_node_count(int num_actions, int depth);

/// The successor at node v is drawn from a keyed stream at (seed, v).
TrajectoryTree build_tree(const MdpSpec& m, int root, std::uint64_t seed, std::uint64_t cap = Caps{}.tree_nodes);

/// Discounted reward along the path pi selects from the root.
double eval_policy_on_tree(const TrajectoryTree& tree, const Policy& pi, double discount);

/// Seed of tree `index` within a selection run.
std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index);

struct TtmResult {
    std::size_t index = 0;        ///< position of the winner in the policy list
    std::vector<double> averages; ///< mean tree value per policy
};

/// Grows m_trees trees and returns the policy with the highest mean tree
/// value; ties go to the earliest policy in the list.
TtmResult ttm_select(const MdpSpec& m, int root, std::span<const Policy> policies, std::uint64_t m_trees,
                     std::uint64_t seed, std::uint64_t cap = Caps{}.tree_nodes);

/// m = ceil((2 v_max^2 / eps^2) ln(2 |Pi| / delta)).
std::uint64_t ttm_tree_count(double v_max, double eps, double delta, std::uint64_t policy_count);

}  // namespace cempac
