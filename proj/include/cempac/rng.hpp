#pragma once

// Counter-based keyed random numbers. Every draw is a pure function of
// (seed, coordinates), so results do not depend on the order or the thread
// in which they are requested.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace cempac {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a coordinate tuple into a 64-bit stream key.
constexpr std::uint64_t stream_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t c : coords) {
        h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential view over a keyed stream: position i yields splitmix64(key + i).
class KeyedStream {
  public:
    explicit constexpr KeyedStream(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t next_u64() noexcept {
        return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_++));
    }
    constexpr double next_unit() noexcept { return unit_interval(next_u64()); }

    /// Exponential(1) draw, used for flat-simplex sampling.
    double next_exponential() noexcept {
        // 1 - u lies in (0, 1], so the log is finite.
        return -std::log1p(-next_unit());
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Index of the categorical outcome selected by `u` in [0, 1). Falls back to
/// the last positive-mass entry when rounding leaves the cumulative sum short.
inline int draw_categorical(std::span<const double> probs, double u) noexcept {
    double cumulative = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            last_positive = static_cast<int>(i);
            cumulative += probs[i];
            if (u < cumulative) return static_cast<int>(i);
        }
    }
    return last_positive;
}

}  // namespace cempac
