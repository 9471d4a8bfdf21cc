#pragma once

#include "gim/mdp.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace gim {

/// Visit statistics gathered from interaction.
class VisitCounts {
public:
    VisitCounts(int num_states, int num_actions);

    int num_states() const { return S_; }
    int num_actions() const { return A_; }

    /// n(s, a)
    long long visits(int s, int a) const { return n_sa_[pair(s, a)]; }
    /// n(next | s, a)
    long long transitions(int s, int a, int next) const {
        return n_sas_[pair(s, a) * S_ + next];
    }
    /// Accumulated reward R(s, a).
    double total_reward(int s, int a) const { return reward_[pair(s, a)]; }

    /// Throws IndexError on out-of-range indices.
    void record(int s, int a, int next, double reward);

    friend bool operator==(const VisitCounts&, const VisitCounts&) = default;

private:
    std::size_t pair(int s, int a) const { return static_cast<std::size_t>(s) * A_ + a; }

    int S_;
    int A_;
    std::vector<long long> n_sa_;
    std::vector<long long> n_sas_;
    std::vector<double> reward_;
};

/// Empirical dynamic matrices; unvisited pairs are zero and flagged.
struct EmpiricalModel {
    DynamicMatrices matrices;
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> coverage;

    bool unvisited(int s, int a) const { return coverage(s, a) == 0; }
};

/// Binary known-ness mask: entry (s, a) is 1 iff n(s, a) >= threshold.
struct KnownnessMask {
    Eigen::MatrixXi mask;
    long long threshold = 1;

    int known_pairs() const { return mask.sum(); }
    double known_fraction() const {
        return static_cast<double>(known_pairs()) / static_cast<double>(mask.size());
    }
    /// Known actions per state.
    Eigen::VectorXi row_sums() const { return mask.rowwise().sum(); }
    /// Known states per action.
    Eigen::VectorXi col_sums() const { return mask.colwise().sum().transpose(); }
};

EmpiricalModel empirical_model(const VisitCounts& counts);

/// Throws ParamError if m < 1.
KnownnessMask knownness_mask(const VisitCounts& counts, long long m);

/// Known actions needed for a state to be rho-known: ceil(rho * A).
int rho_known_actions(int num_actions, double rho);

/// True iff at least ceil(rho * A) actions of s are known. Throws ParamError
/// unless 0 < rho <= 1.
bool is_rho_known(const KnownnessMask& mask, int s, double rho);

/// Debug dumps: `s,a,s',count` and `s,a,total_reward,visits`.
void write_transition_counts_csv(const VisitCounts& counts, std::ostream& out);
void write_reward_counts_csv(const VisitCounts& counts, std::ostream& out);

} // namespace gim
