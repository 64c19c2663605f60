#pragma once

// Worlds: index strings that pick one stored sample per (s, a, t) and so
// induce a deterministic MDP. Includes exhaustive enumeration of worlds and
// batches, the biased/unbiased split for the pooled stationary reading, and
// exact closed-form counts.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cempac/bounds.hpp"
#include "cempac/common.hpp"
#include "cempac/mdp.hpp"
#include "cempac/sampling.hpp"

namespace cempac {

/// Dimensions of a world string. Coordinate (s, a, t) sits at
/// (s*A + a)*steps + t, so each (s, a) block is contiguous.
/// `stationary` worlds read the pooled sample list of (s, a) at every t.
struct WorldShape {
    int num_states = 0;
    int num_actions = 0;
    int steps = 0;
    int n = 0;
    bool stationary = false;

    std::size_t coordinates() const noexcept {
        return static_cast<std::size_t>(num_states) * num_actions * steps;
    }
    std::size_t coordinate(int s, int a, int t) const noexcept {
        return (static_cast<std::size_t>(s) * num_actions + a) * steps + t;
    }
    int blocks() const noexcept { return num_states * num_actions; }
    /// Members per batch: N, or floor(N / steps) for stationary worlds.
    int batch_size() const noexcept { return stationary ? n / steps : n; }
};

/// Shape of the worlds over `d`. Nonstationary datasets fix steps = H (pass 0
/// or H); stationary datasets need an explicit positive number of steps.
WorldShape world_shape(const Dataset& d, int steps = 0);

/// Entries are 1-based sample indices in [1, N].
struct World {
    std::vector<std::uint32_t> indices;

    friend bool operator==(const World&, const World&) = default;
    friend auto operator<=>(const World&, const World&) = default;
};

/// Throws InvalidInput when `x` does not fit `shape`.
void require_world(const World& x, const WorldShape& shape);

/// Digit string when every index is below 10, comma-separated otherwise.
std::string world_to_string(const World& x);
World world_from_string(std::string_view text, const WorldShape& shape);

/// The deterministic time-indexed MDP M_x over shape.steps steps; rewards,
/// discount and v_max come from the skeleton.
MdpSpec world_mdp(const World& x, const Dataset& d, const MdpSpec& skeleton, int steps = 0);

/// Evaluates policies on world-induced MDPs without materializing them.
/// Values are bit-identical to evaluate_policy on world_mdp.
class WorldEvaluator {
  public:
    WorldEvaluator(const Dataset& d, const MdpSpec& skeleton, int steps = 0);

    const WorldShape& shape() const noexcept { return shape_; }

    /// out[coordinate] = successor state selected by x.
    void successors(const World& x, std::vector<int>& out) const;
    /// Refreshes out[c] for c >= first only.
    void successors_from(const World& x, std::size_t first, std::vector<int>& out) const;

    /// V(s, t) laid out [t][s], length steps * |S|.
    void evaluate(std::span<const int> succ, const Policy& pi, std::span<double> out) const;
    ValueTable evaluate(const World& x, const Policy& pi) const;

    void require_policy(const Policy& pi) const;

  private:
    WorldShape shape_;
    Dataset data_;
    std::vector<double> rewards_;  ///< [coordinate]
    double discount_ = 1.0;
};

/// Mean of the per-world value tables. Throws InvalidInput on an empty set.
ValueTable eval_world_set(std::span<const World> worlds, const Policy& pi, const Dataset& d,
                          const MdpSpec& skeleton, int steps = 0);

/// Odometer over [1, N]^k, lexicographic with the last coordinate fastest.
class WorldEnumerator {
  public:
    explicit WorldEnumerator(const WorldShape& shape);

    bool next();
    const World& current() const noexcept { return current_; }
    /// Lowest coordinate changed by the last next(); 0 after the first call.
    std::size_t first_changed() const noexcept { return first_changed_; }

  private:
    World current_;
    std::uint32_t n_;
    std::size_t first_changed_ = 0;
    bool started_ = false;
    bool done_ = false;
};

BigInt count_worlds(const WorldShape& shape);

/// Throws CapExceeded when N^k exceeds `cap`.
WorldEnumerator enumerate_worlds(const WorldShape& shape, std::uint64_t cap = Caps{}.worlds);

enum class WorldFilter { all, unbiased };

/// Averages every policy over the full world set (or its unbiased part) in a
/// single pass with compensated summation.
std::vector<ValueTable> eval_all_worlds(std::span<const Policy> policies, const Dataset& d,
                                        const MdpSpec& skeleton, int steps = 0,
                                        WorldFilter filter = WorldFilter::all,
                                        std::uint64_t cap = Caps{}.worlds);

/// Number of distinct deterministic MDPs induced by the worlds over `d`.
std::uint64_t count_distinct_world_mdps(const Dataset& d, int steps = 0,
                                        std::uint64_t cap = Caps{}.worlds);

/// A stationary world is biased when some (s, a) block repeats an index.
bool is_biased(const World& x, const WorldShape& shape);

struct PartitionCounts {
    BigInt biased;
    BigInt unbiased;
};

/// Exhaustive split of the world set; subject to the world cap.
PartitionCounts partition_biased(const WorldShape& shape, std::uint64_t cap = Caps{}.worlds);

/// 1 - (N!/(N-H)!)^(|S||A|) / N^(|S||A|H), from exact rationals.
double biased_fraction_exact(const WorldShape& shape);

struct Batch {
    std::vector<World> worlds;
};

/// Same sample index at the same coordinate.
bool shares_coordinate(const World& x, const World& y);
/// Same sample index anywhere inside one (s, a) block.
bool shares_block_sample(const World& x, const World& y, const WorldShape& shape);

/// Nonstationary: N pairwise coordinate-disjoint worlds. Stationary: N'
/// unbiased worlds whose (s, a) blocks never share a sample.
bool is_batch(std::span<const World> worlds, const WorldShape& shape);

/// Orders members by ascending first coordinate.
Batch canonicalize(Batch b);

/// {1^k, 2^k, ..., N^k}.
Batch canonical_batch(const WorldShape& shape);

/// Every batch exactly once in canonical form. For nonstationary shapes
/// member j has first coordinate j+1 and every other coordinate is a
/// permutation of [N] across members. Stationary batches fill each (s, a)
/// block injectively from [N], with the first block's t = 0 column ascending.
class BatchEnumerator {
  public:
    explicit BatchEnumerator(const WorldShape& shape);

    bool next();
    const Batch& current() const noexcept { return current_; }

  private:
    bool advance();
    bool advance_block(std::size_t b);
    bool block_valid(std::size_t b) const;
    void materialize();

    WorldShape shape_;
    std::vector<std::vector<std::uint32_t>> perms_;
    Batch current_;
    bool started_ = false;
    bool done_ = false;
};

/// Exact number of batches the enumerator yields (any N).
BigInt count_enumerated_batches(const WorldShape& shape);

/// Throws CapExceeded when the batch count exceeds `cap`.
BatchEnumerator enumerate_batches(const WorldShape& shape, std::uint64_t cap = Caps{}.batches);

/// Closed forms. Nonstationary: |B| = N!^(k-1), |B_x| = (N-1)!^(k-1).
/// Stationary (requires N >= Hbar and Hbar | N): |B| = N!^(SA) / N'!,
/// |B_x| = (N-Hbar)!^(SA) / (N'-1)!.
BigInt count_batches(const WorldShape& shape);
BigInt count_batches_containing(const WorldShape& shape);
/// (N! / (N-Hbar)!)^(SA); zero when N < Hbar.
BigInt count_unbiased(const WorldShape& shape);

struct DecompositionResult {
    double max_discrepancy = 0.0;
    ValueTable world_average;  ///< over X, or X_unbiased for stationary shapes
    ValueTable batch_average;  ///< (1/|B|) sum over batches of the member mean
    BigInt worlds;
    BigInt batches;
};

/// Compares the world-set average with the average of batch averages, each
/// from its own enumeration.
DecompositionResult batch_decomposition_check(const Dataset& d, const Policy& pi,
                                              const MdpSpec& skeleton, int steps = 0,
                                              const Caps& caps = {});

}  // namespace cempac
