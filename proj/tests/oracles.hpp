#pragma once

// Independent reference computations used as test oracles. Kept deliberately
// naive: dense loops, no reuse of library planning code.

#include "gim/mdp.hpp"
#include "gim/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

// Random MDP with Dirichlet-ish rows and rewards in [0,1].
inline gim::TabularMdp random_mdp(int S, int A, int H, gim::RngStream& rng) {
    std::vector<double> p(static_cast<std::size_t>(S) * A * S);
    std::vector<double> r(static_cast<std::size_t>(S) * A);
    for (int i = 0; i < S * A; ++i) {
        double total = 0.0;
        for (int k = 0; k < S; ++k) {
            const double w = -std::log(1.0 - rng.uniform());
            p[i * S + k] = w;
            total += w;
        }
        for (int k = 0; k < S; ++k) {
            p[i * S + k] /= total;
        }
        r[i] = rng.uniform();
    }
    std::vector<double> mu(S);
    double total = 0.0;
    for (auto& x : mu) {
        x = rng.uniform() + 0.1;
        total += x;
    }
    for (auto& x : mu) {
        x /= total;
    }
    return {S, A, H, p, r, mu, 0.0, 1.0};
}

// Forward propagation of the state distribution under a policy.
inline double evaluate(const gim::TabularMdp& m, const gim::StepPolicy& pi) {
    const int S = m.num_states();
    std::vector<double> d(m.initial().begin(), m.initial().end());
    double total = 0.0;
    for (int h = 0; h < m.horizon(); ++h) {
        std::vector<double> next(S, 0.0);
        for (int s = 0; s < S; ++s) {
            const int a = pi.action(h, s);
            total += d[s] * m.reward(s, a);
            for (int t = 0; t < S; ++t) {
                next[t] += d[s] * m.prob(s, a, t);
            }
        }
        d = next;
    }
    return total / m.horizon();
}

// Maximum over all A^(S*H) deterministic step-indexed policies.
inline double enumerate_optimum(const gim::TabularMdp& m) {
    const int S = m.num_states(), A = m.num_actions(), H = m.horizon();
    const int slots = S * H;
    std::vector<int> digits(slots, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        gim::StepPolicy pi(H, S);
        for (int k = 0; k < slots; ++k) {
            pi.set_action(k / S, k % S, digits[k]);
        }
        best = std::max(best, evaluate(m, pi));
        int k = 0;
        while (k < slots && ++digits[k] == A) {
            digits[k++] = 0;
        }
        if (k == slots) {
            return best;
        }
    }
}

// Maximum over stationary policies only, for chains too long to enumerate
// step-indexed policies.
inline double enumerate_stationary_optimum(const gim::TabularMdp& m, std::vector<int>* argmax) {
    const int S = m.num_states(), A = m.num_actions();
    std::vector<int> digits(S, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        const auto pi = gim::StepPolicy::stationary(m.horizon(), digits);
        const double v = evaluate(m, pi);
        if (v > best + 1e-15) {
            best = v;
            if (argmax != nullptr) {
                *argmax = digits;
            }
        }
        int k = 0;
        while (k < S && ++digits[k] == A) {
            digits[k++] = 0;
        }
        if (k == S) {
            return best;
        }
    }
}

// Diameter by dense linear solves: for every target and every stationary
// policy, solve (I - P_restricted) h = 1; minimize per start, maximize over pairs.
inline double dense_diameter(const gim::TabularMdp& m) {
    const int S = m.num_states(), A = m.num_actions();
    double diam = 0.0;
    for (int target = 0; target < S; ++target) {
        std::vector<double> best(S, std::numeric_limits<double>::infinity());
        best[target] = 0.0;
        std::vector<int> digits(S, 0);
        for (;;) {
            Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S);
            Eigen::VectorXd b = Eigen::VectorXd::Ones(S);
            M.row(target).setZero();
            M(target, target) = 1.0;
            b(target) = 0.0;
            for (int s = 0; s < S; ++s) {
                if (s == target) {
                    continue;
                }
                for (int t = 0; t < S; ++t) {
                    if (t != target) {
                        M(s, t) -= m.prob(s, digits[s], t);
                    }
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
            if (lu.isInvertible()) {
                const Eigen::VectorXd h = lu.solve(b);
                for (int s = 0; s < S; ++s) {
                    if (h(s) >= 0.0) {
                        best[s] = std::min(best[s], h(s));
                    }
                }
            }
            int k = 0;
            while (k < S && ++digits[k] == A) {
                digits[k++] = 0;
            }
            if (k == S) {
                break;
            }
        }
        for (double v : best) {
            diam = std::max(diam, v);
        }
    }
    return diam;
}

// Random rank-r matrix as a sum of r Gaussian outer products.
inline Eigen::MatrixXd random_low_rank(int rows, int cols, int rank, gim::RngStream& rng) {
    Eigen::MatrixXd U(rows, rank), V(cols, rank);
    for (int i = 0; i < U.size(); ++i) {
        U.data()[i] = rng.normal();
    }
    for (int i = 0; i < V.size(); ++i) {
        V.data()[i] = rng.normal();
    }
    return U * V.transpose();
}

inline Eigen::MatrixXi random_mask(int rows, int cols, double fraction, gim::RngStream& rng) {
    Eigen::MatrixXi mask(rows, cols);
    for (int i = 0; i < mask.size(); ++i) {
        mask.data()[i] = rng.uniform() < fraction ? 1 : 0;
    }
    return mask;
}

// Mixed-radix walk over random policies.
inline gim::StepPolicy random_policy(int H, int S, int A, gim::RngStream& rng) {
    gim::StepPolicy pi(H, S);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            pi.set_action(h, s, rng.uniform_int(A));
        }
    }
    return pi;
}

// Moves mass between next-states and perturbs rewards, keeping
// dist(m, result) <= eps.
inline gim::TabularMdp perturb(const gim::TabularMdp& m, double eps, gim::RngStream& rng) {
    const int S = m.num_states(), A = m.num_actions();
    std::vector<double> p(m.transitions().begin(), m.transitions().end());
    std::vector<double> r(m.rewards().begin(), m.rewards().end());
    for (int i = 0; i < S * A; ++i) {
        if (S > 1) {
            const int from = rng.uniform_int(S);
            int to = rng.uniform_int(S - 1);
            to += to >= from ? 1 : 0;
            const double moved = std::min(p[i * S + from], 0.5 * eps * rng.uniform());
            p[i * S + from] -= moved;
            p[i * S + to] += moved;
        }
        r[i] = std::clamp(r[i] + eps * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
    }
    return {S, A, m.horizon(), p, r, {m.initial().begin(), m.initial().end()}, 0.0, 1.0};
}

} // namespace oracle
