#include "gim/kernels.hpp"

namespace gim::kernels {

namespace {

inline void backup_state(const TabularMdp& mdp, int s, std::span<const double> next_values,
                         std::span<double> values, std::span<int> actions) {
    const int num_states = mdp.num_states();
    double best = 0.0;
    int best_action = 0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
        const auto row = mdp.transition_row(s, a);
        double q = mdp.reward(s, a);
        for (int next = 0; next < num_states; ++next) {
            q += row[next] * next_values[next];
        }
        if (a == 0 || q > best) {
            best = q;
            best_action = a;
        }
    }
    values[s] = best;
    actions[s] = best_action;
}

} // namespace

void bellman_backup_serial(const TabularMdp& mdp, std::span<const double> next_values,
                           std::span<double> values, std::span<int> actions) {
    for (int s = 0; s < mdp.num_states(); ++s) {
        backup_state(mdp, s, next_values, values, actions);
    }
}

void bellman_backup_parallel(const TabularMdp& mdp, std::span<const double> next_values,
                             std::span<double> values, std::span<int> actions) {
    const int num_states = mdp.num_states();
#pragma omp parallel for schedule(static)
    for (int s = 0; s < num_states; ++s) {
        backup_state(mdp, s, next_values, values, actions);
    }
}

} // namespace gim::kernels
