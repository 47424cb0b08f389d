#pragma once

#include "starclab/mdp.hpp"

#include <utility>

namespace starclab {

/**
 * Three states, two actions. From s0, action 0 goes to s1 and action 1 to s2; both actions
 * move s1 to s2; s2 loops on itself. Starts in s0.
 */
TabularMdp three_state_chain(double discount);

/// Two three-state kernels that differ only in row (s0, a0): (0.5, 0.5, 0) versus (0, 0.5, 0.5).
/// Every other row is uniform and the start distribution is uniform.
std::pair<TabularMdp, TabularMdp> differing_row_environments(double discount);

}  // namespace starclab
