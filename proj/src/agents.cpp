#include "gim/agents.hpp"

#include "gim/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace gim {

namespace {

void check_dims(const EnvDims& dims) {
    if (dims.num_states < 1 || dims.num_actions < 1 || dims.horizon < 1) {
        throw ParamError("agent needs positive state count, action count and horizon");
    }
    if (!(dims.reward_min <= dims.reward_max)) {
        throw ParamError("reward_min must not exceed reward_max");
    }
}

// Uniformly random choice among the maximizers of `score`; draws from rng
// only when there is a tie.
template <typename Score>
int argmax_random_ties(int count, Score score, RngStream& rng,
                       const std::vector<bool>* allowed = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> ties;
    for (int a = 0; a < count; ++a) {
        if (allowed != nullptr && !(*allowed)[a]) {
            continue;
        }
        const double v = score(a);
        if (ties.empty() || v > best) {
            best = v;
            ties.assign(1, a);
        } else if (v == best) {
            ties.push_back(a);
        }
    }
    if (ties.empty()) {
        throw InternalError("argmax over an empty action set");
    }
    return ties.size() == 1 ? ties.front() : ties[rng.uniform_int(static_cast<int>(ties.size()))];
}

int argmax_lowest(const Eigen::MatrixXd& table, int s) {
    int best = 0;
    for (int a = 1; a < table.cols(); ++a) {
        if (table(s, a) > table(s, best)) {
            best = a;
        }
    }
    return best;
}

int epsilon_greedy(const Eigen::MatrixXd& table, int s, double epsilon, RngStream& rng) {
    const int A = static_cast<int>(table.cols());
    if (rng.uniform() < epsilon) {
        return rng.uniform_int(A);
    }
    return argmax_random_ties(A, [&](int a) { return table(s, a); }, rng);
}

} // namespace

int beta_curious_walking(int s, const VisitCounts& counts, const KnownnessMask& mask, double rho,
                         double beta, RngStream& rng) {
    const int S = counts.num_states();
    const int A = counts.num_actions();
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ParamError(fmt::format("beta must lie in [0,1], got {}", beta));
    }
    if (mask.mask.rows() != S || mask.mask.cols() != A) {
        throw ShapeError("known-ness mask does not match the visit counts");
    }
    if (rng.uniform() < beta) {
        return rng.uniform_int(A);
    }
    if (!is_rho_known(mask, s, rho)) {
        std::vector<bool> unknown(A);
        bool any = false;
        for (int a = 0; a < A; ++a) {
            unknown[a] = mask.mask(s, a) == 0;
            any = any || unknown[a];
        }
        if (!any) {
            throw InternalError(fmt::format("state {} is not rho-known but has no unknown action", s));
        }
        return argmax_random_ties(
            A, [&](int a) { return static_cast<double>(counts.visits(s, a)); }, rng, &unknown);
    }
    const int need = rho_known_actions(A, rho);
    std::vector<bool> frontier(S);
    for (int t = 0; t < S; ++t) {
        frontier[t] = mask.mask.row(t).sum() < need;
    }
    auto curiosity = [&](int a) {
        const long long n = counts.visits(s, a);
        if (n == 0) {
            return 1.0;
        }
        long long hits = 0;
        for (int t = 0; t < S; ++t) {
            if (frontier[t]) {
                hits += counts.transitions(s, a, t);
            }
        }
        return static_cast<double>(hits) / static_cast<double>(n);
    };
    return argmax_random_ties(A, curiosity, rng);
}

// GIM

GimAgent::GimAgent(const GimConfig& config, const EnvDims& dims)
    : config_(config), dims_(dims), trigger_(0), counts_(1, 1) {
    check_dims(dims);
    if (config.m < 1) {
        throw ParamError(fmt::format("known threshold m must be at least 1, got {}", config.m));
    }
    if (!(config.beta >= 0.0 && config.beta < 1.0)) {
        throw ParamError(fmt::format("beta must lie in [0,1), got {}", config.beta));
    }
    if (config.rank_hint && (*config.rank_hint < 1 ||
                             *config.rank_hint > std::min(dims.num_states, dims.num_actions))) {
        throw ParamError("rank hint outside [1, min(S, A)]");
    }
    trigger_ = rho_known_actions(dims.num_states * dims.num_actions, config.rho);
    counts_ = VisitCounts(dims.num_states, dims.num_actions);
    mask_ = knownness_mask(counts_, config.m);
}

int GimAgent::act(int state, int step, RngStream& rng) const {
    if (exploiting_) {
        return policy_.action(step, state);
    }
    return beta_curious_walking(state, counts_, mask_, config_.rho, config_.beta, rng);
}

void GimAgent::observe(const Transition& t) {
    if (exploiting_) {
        return;
    }
    counts_.record(t.state, t.action, t.next_state, t.reward);
    if (counts_.visits(t.state, t.action) == config_.m) {
        mask_.mask(t.state, t.action) = 1;
        ++known_;
    }
    if (known_ >= trigger_) {
        complete_and_plan();
    }
}

void GimAgent::complete_and_plan() {
    const int S = dims_.num_states;
    const EmpiricalModel empirical = empirical_model(counts_);

    std::vector<Eigen::MatrixXd> slices = empirical.matrices.transition_slices;
    slices.push_back(empirical.matrices.reward_slice);
    auto completions = complete_slices(slices, mask_.mask, config_.rank_hint,
                                       config_.completion_exec);

    DynamicMatrices completed;
    completed.transition_slices.reserve(S);
    for (int s = 0; s < S; ++s) {
        completed.transition_slices.push_back(std::move(completions[s].completed));
    }
    completed.reward_slice = std::move(completions[S].completed);

    const DynamicMatrices projected =
        project_model(completed, dims_.reward_min, dims_.reward_max,
                      KnownOverlay{mask_.mask, &empirical.matrices});
    model_ = mdp_from_dynamic_matrices(projected, std::vector<double>(S, 1.0 / S), dims_.horizon,
                                       dims_.reward_min, dims_.reward_max);
    policy_ = value_iteration(*model_).policy;
    dp_ops_ = 1;

    mask_.mask.setOnes();
    known_ = static_cast<int>(mask_.mask.size());
    exploiting_ = true;
    completion_episode_ = episode_;
}

AgentCounters GimAgent::instrumentation() const {
    return {dp_ops_, completion_episode_, known_, exploiting_};
}

// RMax

RMaxAgent::RMaxAgent(long long m, const EnvDims& dims)
    : m_(m), dims_(dims), counts_(1, 1) {
    check_dims(dims);
    if (m < 1) {
        throw ParamError(fmt::format("known threshold m must be at least 1, got {}", m));
    }
    counts_ = VisitCounts(dims.num_states, dims.num_actions);
    mask_ = knownness_mask(counts_, m);
    policy_ = StepPolicy(dims.horizon, dims.num_states);
}

int RMaxAgent::act(int state, int step, RngStream&) const {
    if (mask_.mask.row(state).sum() < dims_.num_actions) {
        // Balanced wandering: least-tried action, lowest index on ties.
        int best = 0;
        for (int a = 1; a < dims_.num_actions; ++a) {
            if (counts_.visits(state, a) < counts_.visits(state, best)) {
                best = a;
            }
        }
        return best;
    }
    return policy_.action(step, state);
}

void RMaxAgent::observe(const Transition& t) {
    if (mask_.mask(t.state, t.action) != 0) {
        return;
    }
    counts_.record(t.state, t.action, t.next_state, t.reward);
    if (counts_.visits(t.state, t.action) < m_) {
        return;
    }
    mask_.mask(t.state, t.action) = 1;
    ++known_;
    if (mask_.mask.row(t.state).sum() == dims_.num_actions) {
        policy_ = value_iteration(optimistic_model()).policy;
        ++dp_ops_;
    }
    if (known_ == dims_.num_states * dims_.num_actions && !all_known_episode_) {
        all_known_episode_ = episode_;
    }
}

TabularMdp RMaxAgent::optimistic_model() const {
    const int S = dims_.num_states;
    const int A = dims_.num_actions;
    std::vector<double> transitions(static_cast<std::size_t>(S) * A * S, 0.0);
    std::vector<double> rewards(static_cast<std::size_t>(S) * A, dims_.reward_max);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const std::size_t base = (static_cast<std::size_t>(s) * A + a) * S;
            if (mask_.mask(s, a) == 0) {
                transitions[base + s] = 1.0;
                continue;
            }
            const double n = static_cast<double>(counts_.visits(s, a));
            for (int t = 0; t < S; ++t) {
                transitions[base + t] = static_cast<double>(counts_.transitions(s, a, t)) / n;
            }
            rewards[static_cast<std::size_t>(s) * A + a] =
                std::clamp(counts_.total_reward(s, a) / n, dims_.reward_min, dims_.reward_max);
        }
    }
    return TabularMdp(S, A, dims_.horizon, std::move(transitions), std::move(rewards),
                      std::vector<double>(S, 1.0 / S), dims_.reward_min, dims_.reward_max,
                      kModelTolerance);
}

AgentCounters RMaxAgent::instrumentation() const {
    return {dp_ops_, all_known_episode_, known_,
            known_ == dims_.num_states * dims_.num_actions};
}

// Q-learning

namespace {

void check_q_config(const QConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) {
        throw ParamError(fmt::format("alpha must lie in (0,1], got {}", c.alpha));
    }
    if (!(c.gamma >= 0.0 && c.gamma < 1.0)) {
        throw ParamError(fmt::format("gamma must lie in [0,1), got {}", c.gamma));
    }
    if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) {
        throw ParamError(fmt::format("epsilon must lie in [0,1], got {}", c.epsilon));
    }
}

} // namespace

QLearningAgent::QLearningAgent(const QConfig& config, const EnvDims& dims)
    : config_(config), dims_(dims) {
    check_dims(dims);
    check_q_config(config);
    table_ = Eigen::MatrixXd::Constant(dims.num_states, dims.num_actions, config.initial_q);
}

int QLearningAgent::act(int state, int, RngStream& rng) const {
    return epsilon_greedy(table_, state, config_.epsilon, rng);
}

void QLearningAgent::observe(const Transition& t) {
    const double target = t.reward + config_.gamma * table_.row(t.next_state).maxCoeff();
    table_(t.state, t.action) += config_.alpha * (target - table_(t.state, t.action));
}

// Delayed Q-learning

DelayedQAgent::DelayedQAgent(const DelayedQConfig& config, const EnvDims& dims)
    : config_(config), dims_(dims) {
    check_dims(dims);
    if (config.m_delay < 1) {
        throw ParamError("m_delay must be at least 1");
    }
    if (!(config.gamma >= 0.0 && config.gamma < 1.0)) {
        throw ParamError(fmt::format("gamma must lie in [0,1), got {}", config.gamma));
    }
    if (!(config.epsilon1 > 0.0)) {
        throw ParamError("epsilon1 must be positive");
    }
    const int S = dims.num_states;
    const int A = dims.num_actions;
    table_ = Eigen::MatrixXd::Constant(S, A, dims.reward_max / (1.0 - config.gamma));
    pending_ = Eigen::MatrixXd::Zero(S, A);
    attempts_ = Eigen::MatrixXi::Zero(S, A);
    attempt_start_ = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(S, A);
    learn_ = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(S, A, true);
}

int DelayedQAgent::act(int state, int, RngStream& rng) const {
    return argmax_random_ties(dims_.num_actions, [&](int a) { return table_(state, a); }, rng);
}

void DelayedQAgent::observe(const Transition& t) {
    ++time_;
    const int s = t.state;
    const int a = t.action;
    if (learn_(s, a)) {
        pending_(s, a) += t.reward + config_.gamma * table_.row(t.next_state).maxCoeff();
        if (++attempts_(s, a) == config_.m_delay) {
            const double estimate = pending_(s, a) / config_.m_delay;
            if (table_(s, a) - estimate >= 2.0 * config_.epsilon1) {
                table_(s, a) = estimate + config_.epsilon1;
                last_change_ = time_;
            } else if (attempt_start_(s, a) >= last_change_) {
                learn_(s, a) = false;
            }
            attempt_start_(s, a) = time_;
            pending_(s, a) = 0.0;
            attempts_(s, a) = 0;
        }
    } else if (attempt_start_(s, a) < last_change_) {
        learn_(s, a) = true;
    }
}

// Double Q-learning

DoubleQAgent::DoubleQAgent(const QConfig& config, const EnvDims& dims, std::uint64_t seed)
    : config_(config), dims_(dims), update_rng_(seed) {
    check_dims(dims);
    check_q_config(config);
    table_a_ = Eigen::MatrixXd::Constant(dims.num_states, dims.num_actions, config.initial_q);
    table_b_ = table_a_;
}

void DoubleQAgent::set_tables(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != table_a_.rows() || a.cols() != table_a_.cols() || b.rows() != a.rows() ||
        b.cols() != a.cols()) {
        throw ShapeError("Q tables have the wrong shape");
    }
    table_a_ = a;
    table_b_ = b;
}

int DoubleQAgent::act(int state, int, RngStream& rng) const {
    const Eigen::MatrixXd sum = table_a_.row(state) + table_b_.row(state);
    return epsilon_greedy(sum, 0, config_.epsilon, rng);
}

void DoubleQAgent::observe(const Transition& t) {
    const bool update_a = update_rng_.uniform() < 0.5;
    Eigen::MatrixXd& target = update_a ? table_a_ : table_b_;
    const Eigen::MatrixXd& other = update_a ? table_b_ : table_a_;
    const int best = argmax_lowest(target, t.next_state);
    const double backup = t.reward + config_.gamma * other(t.next_state, best);
    target(t.state, t.action) += config_.alpha * (backup - target(t.state, t.action));
}

// Optimal

OptimalAgent::OptimalAgent(const TabularMdp& mdp) : plan_(value_iteration(mdp)) {}

int OptimalAgent::act(int state, int step, RngStream&) const {
    return plan_.policy.action(step, state);
}

AgentCounters OptimalAgent::instrumentation() const {
    AgentCounters c;
    c.dp_ops = 1;
    c.exploiting = true;
    return c;
}

} // namespace gim
