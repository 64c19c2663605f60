#pragma once

// Generative-model access: N sampled successors per (s, a[, t]) tuple.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cempac/common.hpp"
#include "cempac/mdp.hpp"

namespace cempac {

/// Sampled successor states. Nonstationary datasets are indexed (s, a, t, i);
/// stationary ones drop t. Sample indices i are 0-based here; world strings
/// use the 1-based alphabet [N].
struct Dataset {
    Kind kind = Kind::nonstationary;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;  ///< H for nonstationary datasets, 0 otherwise
    int n = 0;        ///< samples per tuple
    std::vector<std::uint32_t> samples;  ///< [s][a]([t])[i]
    std::uint64_t source_seed = 0;
    std::string source_mdp_digest;

    static Dataset zeros(Kind kind, int states, int actions, int horizon, int n);

    int layers() const noexcept { return kind == Kind::nonstationary ? horizon : 1; }
    std::size_t tuple_count() const noexcept {
        return static_cast<std::size_t>(num_states) * num_actions * layers();
    }
    std::size_t offset(int s, int a, int t, int i) const noexcept {
        const int layer = kind == Kind::nonstationary ? t : 0;
        return ((static_cast<std::size_t>(s) * num_actions + a) * layers() + layer) * n + i;
    }
    std::uint32_t sample(int s, int a, int t, int i) const noexcept { return samples[offset(s, a, t, i)]; }
    std::uint32_t& sample(int s, int a, int t, int i) noexcept { return samples[offset(s, a, t, i)]; }
};

/// Violations of the Dataset invariants; empty iff valid.
std::vector<std::string> validate_dataset(const Dataset& d);

/// Draws n successors per tuple. Sample (s, a, t, i) is a pure function of
/// (seed, s, a, t, i), so the result does not depend on fill order. A
/// stationary MDP yields a stationary dataset (t is always 0 in the key).
Dataset sample_dataset(const MdpSpec& m, int n, std::uint64_t seed, const Caps& caps = {});

/// count(s, a, t, s') for every s'. Throws InvalidInput on out-of-range indices.
std::vector<int> empirical_counts(const Dataset& d, int s, int a, int t = 0);

/// Stationary view of a nonstationary dataset: each (s, a) gets N*H samples
/// read row by row across the time steps, so pooled index i*H + t holds the
/// original sample (s, a, t, i).
Dataset pooled_view(const Dataset& d);

/// `plain_samples` writes the tensor as nested arrays instead of base64.
nlohmann::json dataset_to_json(const Dataset& d, bool plain_samples = false);
Dataset dataset_from_json(const nlohmann::json& j);

Dataset read_dataset_file(const std::string& path);
void write_dataset_file(const Dataset& d, const std::string& path, bool plain_samples = false);

}  // namespace cempac
