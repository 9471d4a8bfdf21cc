#include "gim/mdp.hpp"

#include "gim/errors.hpp"
#include "gim/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gim {

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon,
                       std::vector<double> transitions, std::vector<double> rewards,
                       std::vector<double> initial, double reward_min, double reward_max,
                       double tolerance)
    : num_states_(num_states), num_actions_(num_actions), horizon_(horizon),
      transitions_(std::move(transitions)), rewards_(std::move(rewards)),
      initial_(std::move(initial)), reward_min_(reward_min), reward_max_(reward_max) {
    if (num_states_ < 1 || num_actions_ < 1) {
        throw ValidationError("MDP needs at least one state and one action");
    }
    if (horizon_ < 1) {
        throw ValidationError(fmt::format("horizon must be positive, got {}", horizon_));
    }
    const auto S = static_cast<std::size_t>(num_states_);
    const auto A = static_cast<std::size_t>(num_actions_);
    if (transitions_.size() != S * A * S) {
        throw ShapeError(fmt::format("transition tensor has {} entries, expected {}",
                                     transitions_.size(), S * A * S));
    }
    if (rewards_.size() != S * A) {
        throw ShapeError(fmt::format("reward matrix has {} entries, expected {}",
                                     rewards_.size(), S * A));
    }
    if (initial_.size() != S) {
        throw ShapeError(fmt::format("initial distribution has {} entries, expected {}",
                                     initial_.size(), S));
    }
    if (!(reward_min_ <= reward_max_)) {
        throw ValidationError("reward_min must not exceed reward_max");
    }
    for (int s = 0; s < num_states_; ++s) {
        for (int a = 0; a < num_actions_; ++a) {
            double total = 0.0;
            for (double p : transition_row(s, a)) {
                if (!(p >= 0.0) || p > 1.0 + tolerance) {
                    throw ValidationError(
                        fmt::format("p(.|{},{}) has entry {} outside [0,1]", s, a, p));
                }
                total += p;
            }
            if (std::abs(total - 1.0) > tolerance) {
                throw ValidationError(
                    fmt::format("p(.|{},{}) sums to {}, not 1", s, a, total));
            }
            const double r = reward(s, a);
            if (!(r >= reward_min_ - tolerance && r <= reward_max_ + tolerance)) {
                throw ValidationError(fmt::format("r({},{}) = {} outside [{}, {}]", s, a, r,
                                                  reward_min_, reward_max_));
            }
        }
    }
    double total = 0.0;
    for (double p : initial_) {
        if (!(p >= 0.0)) {
            throw ValidationError("initial distribution has a negative entry");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > tolerance) {
        throw ValidationError(fmt::format("initial distribution sums to {}, not 1", total));
    }
}

TabularMdp TabularMdp::with_horizon(int horizon) const {
    TabularMdp copy = *this;
    if (horizon < 1) {
        throw ValidationError(fmt::format("horizon must be positive, got {}", horizon));
    }
    copy.horizon_ = horizon;
    return copy;
}

StepPolicy StepPolicy::stationary(int horizon, std::span<const int> actions) {
    StepPolicy policy(horizon, static_cast<int>(actions.size()));
    for (int h = 0; h < horizon; ++h) {
        std::ranges::copy(actions, policy.step_row(h).begin());
    }
    return policy;
}

DynamicMatrices dynamic_matrices(const TabularMdp& mdp) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    DynamicMatrices dm;
    dm.transition_slices.assign(S, Eigen::MatrixXd::Zero(S, A));
    dm.reward_slice.resize(S, A);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < A; ++j) {
            const auto row = mdp.transition_row(i, j);
            for (int s = 0; s < S; ++s) {
                dm.transition_slices[s](i, j) = row[s];
            }
            dm.reward_slice(i, j) = mdp.reward(i, j);
        }
    }
    return dm;
}

TabularMdp mdp_from_dynamic_matrices(const DynamicMatrices& dm, std::vector<double> initial,
                                     int horizon, std::optional<double> reward_min,
                                     std::optional<double> reward_max, double tolerance) {
    const int S = dm.num_states();
    const int A = dm.num_actions();
    if (static_cast<int>(dm.transition_slices.size()) != S) {
        throw ShapeError(fmt::format("expected {} transition slices, got {}", S,
                                     dm.transition_slices.size()));
    }
    for (const auto& slice : dm.transition_slices) {
        if (slice.rows() != S || slice.cols() != A) {
            throw ShapeError("transition slice shape differs from reward slice");
        }
    }
    std::vector<double> transitions(static_cast<std::size_t>(S) * A * S);
    std::vector<double> rewards(static_cast<std::size_t>(S) * A);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < A; ++j) {
            double total = 0.0;
            for (int s = 0; s < S; ++s) {
                const double p = dm.transition_slices[s](i, j);
                if (!(p >= 0.0)) {
                    throw ValidationError(fmt::format(
                        "slice {} has negative entry {} at ({},{})", s, p, i, j));
                }
                transitions[(static_cast<std::size_t>(i) * A + j) * S + s] = p;
                total += p;
            }
            if (std::abs(total - 1.0) > tolerance) {
                throw ValidationError(fmt::format(
                    "slices at ({},{}) sum to {}, not 1", i, j, total));
            }
            rewards[static_cast<std::size_t>(i) * A + j] = dm.reward_slice(i, j);
        }
    }
    const double lo = reward_min.value_or(dm.reward_slice.minCoeff());
    const double hi = reward_max.value_or(dm.reward_slice.maxCoeff());
    return TabularMdp(S, A, horizon, std::move(transitions), std::move(rewards),
                      std::move(initial), lo, hi, tolerance);
}

PlanResult value_iteration(const TabularMdp& mdp, Execution exec) {
    const int S = mdp.num_states();
    const int H = mdp.horizon();
    PlanResult result;
    result.policy = StepPolicy(H, S);
    // Values hold undiscounted reward-to-go sums; normalized by H at the end.
    std::vector<double> next(S, 0.0);
    std::vector<double> current(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        auto actions = result.policy.step_row(h);
        if (exec == Execution::parallel) {
            kernels::bellman_backup_parallel(mdp, next, current, actions);
        } else {
            kernels::bellman_backup_serial(mdp, next, current, actions);
        }
        std::swap(next, current);
    }
    result.state_values.resize(S);
    double value = 0.0;
    for (int s = 0; s < S; ++s) {
        result.state_values[s] = next[s] / H;
        value += mdp.initial()[s] * next[s];
    }
    result.value = value / H;
    return result;
}

double evaluate_policy_exact(const TabularMdp& mdp, const StepPolicy& policy) {
    const int S = mdp.num_states();
    const int H = mdp.horizon();
    if (policy.horizon() != H || policy.num_states() != S) {
        throw ShapeError(fmt::format("policy is {}x{}, MDP needs {}x{}", policy.horizon(),
                                     policy.num_states(), H, S));
    }
    std::vector<double> dist(mdp.initial().begin(), mdp.initial().end());
    std::vector<double> next(S);
    double total = 0.0;
    for (int h = 0; h < H; ++h) {
        std::ranges::fill(next, 0.0);
        for (int s = 0; s < S; ++s) {
            if (dist[s] == 0.0) {
                continue;
            }
            const int a = policy.action(h, s);
            if (a < 0 || a >= mdp.num_actions()) {
                throw IndexError(fmt::format("policy action {} out of range", a));
            }
            total += dist[s] * mdp.reward(s, a);
            const auto row = mdp.transition_row(s, a);
            for (int t = 0; t < S; ++t) {
                next[t] += dist[s] * row[t];
            }
        }
        std::swap(dist, next);
    }
    return total / H;
}

EpisodeLog simulate_episode(const TabularMdp& mdp, const ActionSelector& selector,
                            RngStream& rng, const StepObserver& observer) {
    EpisodeLog log;
    log.seed = rng.seed();
    log.steps.reserve(mdp.horizon());
    int state = rng.categorical(mdp.initial());
    for (int h = 0; h < mdp.horizon(); ++h) {
        const int action = selector(state, h);
        if (action < 0 || action >= mdp.num_actions()) {
            throw SelectorError(fmt::format("selector returned action {} at state {}, step {}",
                                            action, state, h));
        }
        const double reward = mdp.reward(state, action);
        const int next = rng.categorical(mdp.transition_row(state, action));
        const Transition step{state, action, reward, next};
        log.steps.push_back(step);
        log.total_reward += reward;
        if (observer) {
            observer(step, h);
        }
        state = next;
    }
    return log;
}

double mdp_distance(const TabularMdp& m1, const TabularMdp& m2) {
    if (m1.num_states() != m2.num_states() || m1.num_actions() != m2.num_actions()) {
        throw ShapeError("mdp_distance needs MDPs with equal state and action counts");
    }
    double dist = 0.0;
    for (int s = 0; s < m1.num_states(); ++s) {
        for (int a = 0; a < m1.num_actions(); ++a) {
            const auto r1 = m1.transition_row(s, a);
            const auto r2 = m2.transition_row(s, a);
            double l1 = 0.0;
            for (std::size_t t = 0; t < r1.size(); ++t) {
                l1 += std::abs(r1[t] - r2[t]);
            }
            dist = std::max({dist, l1, std::abs(m1.reward(s, a) - m2.reward(s, a))});
        }
    }
    return dist;
}

namespace {

// States from which `target` is reached with probability one under some
// policy: repeatedly drop actions that can leave the candidate set, then
// shrink the set to states that still reach the target along allowed actions.
std::vector<bool> almost_sure_reach(const TabularMdp& mdp, int target) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    std::vector<bool> in_set(S, true);
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<bool> reach(S, false);
        reach[target] = true;
        for (bool grew = true; grew;) {
            grew = false;
            for (int s = 0; s < S; ++s) {
                if (reach[s] || !in_set[s]) {
                    continue;
                }
                for (int a = 0; a < A && !reach[s]; ++a) {
                    const auto row = mdp.transition_row(s, a);
                    bool stays_inside = true;
                    bool hits_reach = false;
                    for (int t = 0; t < S; ++t) {
                        if (row[t] > 0.0) {
                            stays_inside = stays_inside && in_set[t];
                            hits_reach = hits_reach || reach[t];
                        }
                    }
                    if (stays_inside && hits_reach) {
                        reach[s] = true;
                        grew = true;
                    }
                }
            }
        }
        for (int s = 0; s < S; ++s) {
            if (in_set[s] && !reach[s]) {
                in_set[s] = false;
                changed = true;
            }
        }
    }
    return in_set;
}

} // namespace

double diameter(const TabularMdp& mdp, double tol, double cap) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    double worst = 0.0;
    std::vector<double> hit(S);
    std::vector<double> next(S);
    for (int target = 0; target < S; ++target) {
        const auto reachable = almost_sure_reach(mdp, target);
        for (int s = 0; s < S; ++s) {
            if (!reachable[s]) {
                throw NotCommunicatingError(
                    fmt::format("state {} cannot surely reach state {}", s, target));
            }
        }
        std::ranges::fill(hit, 0.0);
        for (;;) {
            double delta = 0.0;
            for (int s = 0; s < S; ++s) {
                if (s == target) {
                    next[s] = 0.0;
                    continue;
                }
                double best = std::numeric_limits<double>::infinity();
                for (int a = 0; a < A; ++a) {
                    const auto row = mdp.transition_row(s, a);
                    double v = 1.0;
                    for (int t = 0; t < S; ++t) {
                        v += row[t] * hit[t];
                    }
                    best = std::min(best, v);
                }
                next[s] = best;
                delta = std::max(delta, std::abs(best - hit[s]));
                if (best > cap) {
                    throw NotCommunicatingError(fmt::format(
                        "expected hitting time to state {} exceeds {}", target, cap));
                }
            }
            std::swap(hit, next);
            if (delta < tol) {
                break;
            }
        }
        worst = std::max(worst, *std::ranges::max_element(hit));
    }
    return worst;
}

} // namespace gim
