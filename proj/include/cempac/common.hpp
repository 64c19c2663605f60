#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cempac {

/// Whether transition and reward tensors carry a time-step index.
enum class Kind { stationary, nonstationary };

std::string to_string(Kind kind);
Kind kind_from_string(std::string_view text);

/// A precondition on the caller's inputs does not hold.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An enumeration or budget would exceed its configured cap. `required()`
/// carries the exact size that was needed, as a decimal string (it may not
/// fit in 64 bits).
class CapExceeded : public std::runtime_error {
  public:
    CapExceeded(const std::string& what, std::string required)
        : std::runtime_error(what + " (required cap: " + required + ")"),
          required_(std::move(required)) {}

    const std::string& required() const noexcept { return required_; }

  private:
    std::string required_;
};

/// Enumeration and budget limits. Operations fail with CapExceeded instead of
/// thrashing when a limit would be crossed.
struct Caps {
    std::uint64_t policies = 1'000'000;
    std::uint64_t worlds = 10'000'000;
    std::uint64_t batches = 1'000'000;
    std::uint64_t tree_nodes = 1'000'000;
    std::uint64_t sample_budget = 100'000'000;
    std::uint64_t exact_cdf_trials = 10'000;
};

}  // namespace cempac
