#pragma once

#include "gim/estimation.hpp"
#include "gim/matcomp.hpp"
#include "gim/mdp.hpp"
#include "gim/rng.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gim {

struct AgentCounters {
    /// Dynamic-programming solves performed.
    long long dp_ops = 0;
    /// Episode (1-based) in which knowledge acquisition finished: the
    /// completion trigger for GIM, the first all-known episode for RMax.
    std::optional<int> completion_episode;
    int known_pairs = 0;
    bool exploiting = false;
};

/**
 * Common agent contract.
 *
 * act() must not change learning state; all learning happens in observe().
 * Given equal seeds and environments, every agent's trajectory is
 * reproducible.
 */
class Agent {
public:
    virtual ~Agent() = default;

    virtual std::string name() const = 0;
    virtual int act(int state, int step, RngStream& rng) const = 0;
    virtual void observe(const Transition& t) = 0;
    virtual void episode_start() {}
    virtual void episode_end() {}
    virtual AgentCounters instrumentation() const = 0;
};

/// Problem dimensions an agent is told up front.
struct EnvDims {
    int num_states = 1;
    int num_actions = 1;
    int horizon = 1;
    double reward_min = 0.0;
    double reward_max = 1.0;
};

/**
 * Exploration step of the curious walk.
 *
 * With probability beta a uniform action. Otherwise, in a state that is not
 * rho-known, the most-visited action that is still unknown; in a rho-known
 * state, the action with the largest empirical probability of reaching a
 * state that is not rho-known (untried actions score 1). Ties are broken
 * uniformly at random.
 */
int beta_curious_walking(int s, const VisitCounts& counts, const KnownnessMask& mask, double rho,
                         double beta, RngStream& rng);

struct GimConfig {
    long long m = 40;
    double rho = 0.8;
    double beta = 0.1;
    std::optional<int> rank_hint;
    Execution completion_exec = Execution::parallel;
};

class GimAgent final : public Agent {
public:
    GimAgent(const GimConfig& config, const EnvDims& dims);

    std::string name() const override { return "gim"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition& t) override;
    void episode_start() override { ++episode_; }
    AgentCounters instrumentation() const override;

    /// Known pairs needed before completion: ceil(rho * S * A).
    int trigger_pairs() const { return trigger_; }
    bool exploiting() const { return exploiting_; }
    const VisitCounts& counts() const { return counts_; }
    const KnownnessMask& mask() const { return mask_; }
    /// The inferred model, set once completion has run.
    const std::optional<TabularMdp>& inferred_model() const { return model_; }
    const StepPolicy& policy() const { return policy_; }

private:
    void complete_and_plan();

    GimConfig config_;
    EnvDims dims_;
    int trigger_;
    VisitCounts counts_;
    KnownnessMask mask_;
    int known_ = 0;
    bool exploiting_ = false;
    int episode_ = 0;
    long long dp_ops_ = 0;
    std::optional<int> completion_episode_;
    std::optional<TabularMdp> model_;
    StepPolicy policy_;
};

class RMaxAgent final : public Agent {
public:
    RMaxAgent(long long m, const EnvDims& dims);

    std::string name() const override { return "rmax"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition& t) override;
    void episode_start() override { ++episode_; }
    AgentCounters instrumentation() const override;

    /// Known pairs use their estimates; unknown pairs self-loop at reward_max.
    TabularMdp optimistic_model() const;
    const KnownnessMask& mask() const { return mask_; }

private:
    long long m_;
    EnvDims dims_;
    VisitCounts counts_;
    KnownnessMask mask_;
    int known_ = 0;
    int episode_ = 0;
    long long dp_ops_ = 0;
    std::optional<int> all_known_episode_;
    StepPolicy policy_;
};

struct QConfig {
    double alpha = 0.1;
    double gamma = 0.95;
    double epsilon = 0.1;
    double initial_q = 0.0;
};

class QLearningAgent final : public Agent {
public:
    QLearningAgent(const QConfig& config, const EnvDims& dims);

    std::string name() const override { return "q-learning"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition& t) override;
    AgentCounters instrumentation() const override { return {}; }

    double q(int s, int a) const { return table_(s, a); }

private:
    QConfig config_;
    EnvDims dims_;
    Eigen::MatrixXd table_;
};

struct DelayedQConfig {
    int m_delay = 20;
    double epsilon1 = 0.01;
    double gamma = 0.95;
};

/// Delayed Q-learning: optimistic initialization and batched updates after
/// m_delay attempts, applied only when they lower Q by at least 2*epsilon1.
class DelayedQAgent final : public Agent {
public:
    DelayedQAgent(const DelayedQConfig& config, const EnvDims& dims);

    std::string name() const override { return "delayed-q"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition& t) override;
    AgentCounters instrumentation() const override { return {}; }

    double q(int s, int a) const { return table_(s, a); }

private:
    DelayedQConfig config_;
    EnvDims dims_;
    Eigen::MatrixXd table_;
    Eigen::MatrixXd pending_;  // U(s,a)
    Eigen::MatrixXi attempts_; // l(s,a)
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> attempt_start_; // t(s,a)
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> learn_;
    long long time_ = 0;
    long long last_change_ = 0;
};

class DoubleQAgent final : public Agent {
public:
    DoubleQAgent(const QConfig& config, const EnvDims& dims, std::uint64_t seed);

    std::string name() const override { return "double-q"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition& t) override;
    AgentCounters instrumentation() const override { return {}; }

    double qa(int s, int a) const { return table_a_(s, a); }
    double qb(int s, int a) const { return table_b_(s, a); }
    /// Test hook: overwrite both tables.
    void set_tables(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

private:
    QConfig config_;
    EnvDims dims_;
    Eigen::MatrixXd table_a_;
    Eigen::MatrixXd table_b_;
    RngStream update_rng_;
};

/// Plays the optimal policy of the true MDP from the first episode.
class OptimalAgent final : public Agent {
public:
    explicit OptimalAgent(const TabularMdp& mdp);

    std::string name() const override { return "optimal"; }
    int act(int state, int step, RngStream& rng) const override;
    void observe(const Transition&) override {}
    AgentCounters instrumentation() const override;

    const PlanResult& plan() const { return plan_; }

private:
    PlanResult plan_;
};

class RandomAgent final : public Agent {
public:
    explicit RandomAgent(int num_actions) : num_actions_(num_actions) {}

    std::string name() const override { return "random"; }
    int act(int, int, RngStream& rng) const override { return rng.uniform_int(num_actions_); }
    void observe(const Transition&) override {}
    AgentCounters instrumentation() const override { return {}; }

private:
    int num_actions_;
};

} // namespace gim
