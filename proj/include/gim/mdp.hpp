#pragma once

#include "gim/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace gim {

/// Probability tolerance for exact constructions.
inline constexpr double kExactTolerance = 1e-9;
/// Probability tolerance for estimated or completed models.
inline constexpr double kModelTolerance = 1e-6;

/// Selects the serial reference kernel or the OpenMP kernel.
enum class Execution { serial, parallel };

/**
 * Finite-horizon tabular MDP with full ground-truth dynamics.
 *
 * Transitions are stored densely, indexed (s, a, s'). Rewards are the
 * expected immediate reward of each (s, a). The constructor validates all
 * invariants; an instance is immutable afterwards.
 */
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions, int horizon,
               std::vector<double> transitions, std::vector<double> rewards,
               std::vector<double> initial, double reward_min, double reward_max,
               double tolerance = kExactTolerance);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int horizon() const { return horizon_; }
    double reward_min() const { return reward_min_; }
    double reward_max() const { return reward_max_; }

    double prob(int s, int a, int next) const {
        return transitions_[index(s, a) * num_states_ + next];
    }
    double reward(int s, int a) const { return rewards_[index(s, a)]; }

    /// Next-state distribution p(.|s,a).
    std::span<const double> transition_row(int s, int a) const {
        return {transitions_.data() + index(s, a) * num_states_,
                static_cast<std::size_t>(num_states_)};
    }
    std::span<const double> initial() const { return initial_; }
    std::span<const double> transitions() const { return transitions_; }
    std::span<const double> rewards() const { return rewards_; }

    /// Same dynamics, different horizon.
    TabularMdp with_horizon(int horizon) const;

    friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

private:
    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

    int num_states_;
    int num_actions_;
    int horizon_;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    std::vector<double> initial_;
    double reward_min_;
    double reward_max_;
};

/**
 * The S+1 dynamic matrices of an MDP.
 *
 * transition_slices[s] is the S x A matrix whose (i, j) entry is the
 * probability of landing in s after taking action j in state i.
 * reward_slice(i, j) is the expected reward of (i, j).
 */
struct DynamicMatrices {
    std::vector<Eigen::MatrixXd> transition_slices;
    Eigen::MatrixXd reward_slice;

    int num_states() const { return static_cast<int>(reward_slice.rows()); }
    int num_actions() const { return static_cast<int>(reward_slice.cols()); }
};

/// Deterministic step-indexed policy; action(h, s) for h in [0, H).
class StepPolicy {
public:
    StepPolicy() = default;
    StepPolicy(int horizon, int num_states, int fill_action = 0)
        : horizon_(horizon), num_states_(num_states),
          actions_(static_cast<std::size_t>(horizon) * num_states, fill_action) {}

    /// Policy that plays the same action table at every step.
    static StepPolicy stationary(int horizon, std::span<const int> actions);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }

    int action(int step, int state) const { return actions_[slot(step, state)]; }
    void set_action(int step, int state, int a) { actions_[slot(step, state)] = a; }

    std::span<const int> step_row(int step) const {
        return {actions_.data() + slot(step, 0), static_cast<std::size_t>(num_states_)};
    }
    std::span<int> step_row(int step) {
        return {actions_.data() + slot(step, 0), static_cast<std::size_t>(num_states_)};
    }

    friend bool operator==(const StepPolicy&, const StepPolicy&) = default;

private:
    std::size_t slot(int step, int state) const {
        return static_cast<std::size_t>(step) * num_states_ + state;
    }

    int horizon_ = 0;
    int num_states_ = 0;
    std::vector<int> actions_;
};

struct Transition {
    int state;
    int action;
    double reward;
    int next_state;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct EpisodeLog {
    std::vector<Transition> steps;
    double total_reward = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

/// Action chooser: (state, step) -> action.
using ActionSelector = std::function<int(int state, int step)>;
/// Called once per executed step, after the transition is sampled.
using StepObserver = std::function<void(const Transition&, int step)>;

struct PlanResult {
    StepPolicy policy;
    /// Expected average reward over the horizon from the initial distribution.
    double value = 0.0;
    /// H-step average value of each start state.
    std::vector<double> state_values;
};

DynamicMatrices dynamic_matrices(const TabularMdp& mdp);

/// Inverse of dynamic_matrices. Reward bounds default to the reward slice's
/// own min and max. Throws ValidationError on non-stochastic slices.
TabularMdp mdp_from_dynamic_matrices(const DynamicMatrices& dm, std::vector<double> initial,
                                     int horizon, std::optional<double> reward_min = {},
                                     std::optional<double> reward_max = {},
                                     double tolerance = kModelTolerance);

/// Undiscounted finite-horizon backward induction. Ties go to the lowest action.
PlanResult value_iteration(const TabularMdp& mdp, Execution exec = Execution::serial);

/// Exact expected average reward of a policy via forward propagation.
double evaluate_policy_exact(const TabularMdp& mdp, const StepPolicy& policy);

EpisodeLog simulate_episode(const TabularMdp& mdp, const ActionSelector& selector,
                            RngStream& rng, const StepObserver& observer = {});

/// max over (s, a) of max(L1 distance of next-state rows, |reward difference|).
double mdp_distance(const TabularMdp& m1, const TabularMdp& m2);

/// Max over ordered state pairs of the minimal expected hitting time.
double diameter(const TabularMdp& mdp, double tol = 1e-10, double cap = 1e6);

} // namespace gim
