#pragma once

#include "gim/mdp.hpp"

#include <span>

namespace gim::kernels {

// One backward-induction step over all states:
//   values[s]  = max_a r(s,a) + sum_s' p(s'|s,a) next_values[s']
//   actions[s] = lowest maximizing action
// The serial version is the reference; the parallel version must agree
// bit-for-bit since each state is computed independently.
void bellman_backup_serial(const TabularMdp& mdp, std::span<const double> next_values,
                           std::span<double> values, std::span<int> actions);

void bellman_backup_parallel(const TabularMdp& mdp, std::span<const double> next_values,
                             std::span<double> values, std::span<int> actions);

} // namespace gim::kernels
