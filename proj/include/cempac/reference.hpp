#pragma once

// A fixed 2-state, 2-action, 3-step dataset with three samples per tuple,
// used as a worked instance by the verification suite and the tests.

#include "cempac/mdp.hpp"
#include "cempac/sampling.hpp"

namespace cempac {

/// Samples listed column by column in (s, a, t) order with t fastest.
Dataset sample_table_dataset();

/// Time-indexed skeleton matching sample_table_dataset: reward 1 in state 1,
/// 0 in state 0, for either action.
MdpSpec sample_table_skeleton();

}  // namespace cempac
