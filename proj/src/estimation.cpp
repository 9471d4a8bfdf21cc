#include "gim/estimation.hpp"

#include "gim/errors.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <ostream>

namespace gim {

VisitCounts::VisitCounts(int num_states, int num_actions)
    : S_(num_states), A_(num_actions) {
    if (S_ < 1 || A_ < 1) {
        throw ParamError("visit counts need positive state and action counts");
    }
    n_sa_.assign(static_cast<std::size_t>(S_) * A_, 0);
    n_sas_.assign(static_cast<std::size_t>(S_) * A_ * S_, 0);
    reward_.assign(static_cast<std::size_t>(S_) * A_, 0.0);
}

void VisitCounts::record(int s, int a, int next, double reward) {
    if (s < 0 || s >= S_ || next < 0 || next >= S_ || a < 0 || a >= A_) {
        throw IndexError(fmt::format("transition ({},{},{}) out of range for {}x{}", s, a, next,
                                     S_, A_));
    }
    const std::size_t p = pair(s, a);
    ++n_sa_[p];
    ++n_sas_[p * S_ + next];
    reward_[p] += reward;
}

EmpiricalModel empirical_model(const VisitCounts& counts) {
    const int S = counts.num_states();
    const int A = counts.num_actions();
    EmpiricalModel model;
    model.matrices.transition_slices.assign(S, Eigen::MatrixXd::Zero(S, A));
    model.matrices.reward_slice = Eigen::MatrixXd::Zero(S, A);
    model.coverage.resize(S, A);
    for (int i = 0; i < S; ++i) {
        for (int j = 0; j < A; ++j) {
            const long long n = counts.visits(i, j);
            model.coverage(i, j) = n;
            if (n == 0) {
                continue;
            }
            const double inv = 1.0 / static_cast<double>(n);
            for (int s = 0; s < S; ++s) {
                model.matrices.transition_slices[s](i, j) =
                    static_cast<double>(counts.transitions(i, j, s)) * inv;
            }
            model.matrices.reward_slice(i, j) = counts.total_reward(i, j) * inv;
        }
    }
    return model;
}

KnownnessMask knownness_mask(const VisitCounts& counts, long long m) {
    if (m < 1) {
        throw ParamError(fmt::format("known threshold must be at least 1, got {}", m));
    }
    KnownnessMask out;
    out.threshold = m;
    out.mask.resize(counts.num_states(), counts.num_actions());
    for (int i = 0; i < counts.num_states(); ++i) {
        for (int j = 0; j < counts.num_actions(); ++j) {
            out.mask(i, j) = counts.visits(i, j) >= m ? 1 : 0;
        }
    }
    return out;
}

int rho_known_actions(int num_actions, double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw ParamError(fmt::format("rho must lie in (0,1], got {}", rho));
    }
    // Guard against rho * A landing a rounding error above an integer.
    const double need = rho * num_actions;
    const double nearest = std::round(need);
    return static_cast<int>(std::abs(need - nearest) < 1e-9 ? nearest : std::ceil(need));
}

bool is_rho_known(const KnownnessMask& mask, int s, double rho) {
    const int need = rho_known_actions(static_cast<int>(mask.mask.cols()), rho);
    if (s < 0 || s >= mask.mask.rows()) {
        throw IndexError(fmt::format("state {} out of range", s));
    }
    return mask.mask.row(s).sum() >= need;
}

void write_transition_counts_csv(const VisitCounts& counts, std::ostream& out) {
    out << "s,a,s',count\n";
    for (int s = 0; s < counts.num_states(); ++s) {
        for (int a = 0; a < counts.num_actions(); ++a) {
            for (int t = 0; t < counts.num_states(); ++t) {
                if (const auto n = counts.transitions(s, a, t); n > 0) {
                    fmt::print(out, "{},{},{},{}\n", s, a, t, n);
                }
            }
        }
    }
}

void write_reward_counts_csv(const VisitCounts& counts, std::ostream& out) {
    out << "s,a,total_reward,visits\n";
    for (int s = 0; s < counts.num_states(); ++s) {
        for (int a = 0; a < counts.num_actions(); ++a) {
            fmt::print(out, "{},{},{},{}\n", s, a, counts.total_reward(s, a), counts.visits(s, a));
        }
    }
}

} // namespace gim
