#include "gim/envs.hpp"

#include "gim/env_io.hpp"
#include "gim/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace gim {

namespace {

class DenseBuilder {
public:
    DenseBuilder(int num_states, int num_actions)
        : S_(num_states), A_(num_actions),
          transitions_(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0),
          rewards_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {}

    void add(int s, int a, int next, double p) { transitions_[slot(s, a) * S_ + next] += p; }
    void set_reward(int s, int a, double r) { rewards_[slot(s, a)] = r; }
    double prob(int s, int a, int next) const { return transitions_[slot(s, a) * S_ + next]; }

    TabularMdp build(int horizon, std::vector<double> initial, double reward_min,
                     double reward_max) && {
        return TabularMdp(S_, A_, horizon, std::move(transitions_), std::move(rewards_),
                          std::move(initial), reward_min, reward_max);
    }

private:
    std::size_t slot(int s, int a) const { return static_cast<std::size_t>(s) * A_ + a; }

    int S_;
    int A_;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
};

std::vector<double> point_mass(int size, int at) {
    std::vector<double> v(size, 0.0);
    v[at] = 1.0;
    return v;
}

} // namespace

TabularMdp make_gridworld(const GridSpec& spec) {
    if (spec.height < 1 || spec.width < 1) {
        throw ParamError("grid dimensions must be positive");
    }
    if (!(spec.slip >= 0.0 && spec.slip < 1.0)) {
        throw ParamError(fmt::format("slip must lie in [0,1), got {}", spec.slip));
    }
    if (!(spec.step_cost >= 0.0)) {
        throw ParamError("step cost must be nonnegative");
    }
    const auto [goal_row, goal_col] =
        spec.goal_cell.value_or(std::pair{spec.height - 1, spec.width - 1});
    if (goal_row < 0 || goal_row >= spec.height || goal_col < 0 || goal_col >= spec.width) {
        throw ParamError("goal cell lies outside the grid");
    }
    const int S = spec.height * spec.width;
    const int goal = goal_row * spec.width + goal_col;
    const int start = (spec.height - 1 - goal_row) * spec.width + (spec.width - 1 - goal_col);

    constexpr std::array<std::array<int, 2>, 4> kDelta{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    constexpr std::array<std::array<int, 2>, 4> kPerpendicular{
        {{kLeft, kRight}, {kLeft, kRight}, {kUp, kDown}, {kUp, kDown}}};
    auto move = [&](int s, int dir) {
        const int row = s / spec.width + kDelta[dir][0];
        const int col = s % spec.width + kDelta[dir][1];
        if (row < 0 || row >= spec.height || col < 0 || col >= spec.width) {
            return s;
        }
        return row * spec.width + col;
    };

    DenseBuilder b(S, 4);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < 4; ++a) {
            if (s == goal) {
                b.add(s, a, s, 1.0);
                continue;
            }
            b.add(s, a, move(s, a), 1.0 - spec.slip);
            if (spec.slip > 0.0) {
                b.add(s, a, move(s, kPerpendicular[a][0]), spec.slip / 2);
                b.add(s, a, move(s, kPerpendicular[a][1]), spec.slip / 2);
            }
            b.set_reward(s, a, -spec.step_cost + spec.goal_reward * b.prob(s, a, goal));
        }
    }
    const double lo = std::min(0.0, std::min(-spec.step_cost, spec.goal_reward - spec.step_cost));
    const double hi = std::max(0.0, std::max(-spec.step_cost, spec.goal_reward - spec.step_cost));
    return std::move(b).build(spec.horizon, point_mass(S, start), lo, hi);
}

TabularMdp make_riverswim(const RiverSwimSpec& spec) {
    const int n = spec.chain_length;
    if (n < 2) {
        throw ParamError("chain must have at least two states");
    }
    auto check_split = [](std::initializer_list<double> parts, const char* what) {
        double total = 0.0;
        for (double p : parts) {
            if (!(p >= 0.0)) {
                throw ParamError(fmt::format("{} probabilities must be nonnegative", what));
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw ParamError(fmt::format("{} probabilities sum to {}, not 1", what, total));
        }
    };
    check_split({spec.p_advance, spec.p_stay, spec.p_back}, "interior right-move");
    check_split({spec.first_stay, spec.first_advance}, "first-state right-move");
    check_split({spec.last_stay, spec.last_back}, "last-state right-move");

    constexpr int kSwimLeft = 0;
    constexpr int kSwimRight = 1;
    DenseBuilder b(n, 2);
    for (int s = 0; s < n; ++s) {
        b.add(s, kSwimLeft, std::max(0, s - 1), 1.0);
        if (s == 0) {
            b.add(s, kSwimRight, 0, spec.first_stay);
            b.add(s, kSwimRight, 1, spec.first_advance);
        } else if (s == n - 1) {
            b.add(s, kSwimRight, s, spec.last_stay);
            b.add(s, kSwimRight, s - 1, spec.last_back);
        } else {
            b.add(s, kSwimRight, s + 1, spec.p_advance);
            b.add(s, kSwimRight, s, spec.p_stay);
            b.add(s, kSwimRight, s - 1, spec.p_back);
        }
    }
    b.set_reward(0, kSwimLeft, spec.left_reward);
    b.set_reward(n - 1, kSwimRight, spec.right_reward);
    const double lo = std::min({0.0, spec.left_reward, spec.right_reward});
    const double hi = std::max({0.0, spec.left_reward, spec.right_reward});
    return std::move(b).build(spec.horizon, point_mass(n, 0), lo, hi);
}

TabularMdp make_casinoland(int horizon) {
    // States 0-3 are hallway rooms on a ring, 4-7 are lever rooms attached
    // to hallway rooms 0-3. Actions: 0 = clockwise / pull lever,
    // 1 = counter-clockwise / leave, 2 = enter lever room / costly action.
    // Levers pay out as their expected value (win probability times prize).
    constexpr int kRooms = 4;
    constexpr std::array<double, kRooms> kWinProbability{0.2, 0.1, 0.05, 0.01};
    constexpr std::array<double, kRooms> kPrize{1.0, 3.0, 10.0, 100.0};
    constexpr double kPenalty = -100.0;

    DenseBuilder b(2 * kRooms, 3);
    for (int room = 0; room < kRooms; ++room) {
        b.add(room, 0, (room + 1) % kRooms, 0.9);
        b.add(room, 0, room, 0.1);
        b.add(room, 1, (room + kRooms - 1) % kRooms, 0.9);
        b.add(room, 1, room, 0.1);
        b.add(room, 2, kRooms + room, 0.8);
        b.add(room, 2, room, 0.2);

        const int lever = kRooms + room;
        b.add(lever, 0, lever, 1.0);
        b.set_reward(lever, 0, kWinProbability[room] * kPrize[room]);
        b.add(lever, 1, room, 1.0);
        b.add(lever, 2, 0, 1.0);
        b.set_reward(lever, 2, kPenalty);
    }
    return std::move(b).build(horizon, point_mass(2 * kRooms, 0), kPenalty, 1.0);
}

TabularMdp make_casinoland(const std::filesystem::path& file) {
    return load_env_file(file);
}

namespace {

double shaped_draw(RngStream& rng, double exponent) {
    return std::pow(rng.uniform(), exponent);
}

double median_of(std::vector<double> values) {
    std::ranges::sort(values);
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Each next-state slice is U_s * W^T where W holds per-action mixture
// weights over `rank` latent factors and, for every (i, k), U_s(i, k) is a
// distribution over s. Summing over s then gives 1 for every (i, j), so
// the cross-slice normalization is built in and each slice keeps rank <= rank.
struct Factors {
    Eigen::MatrixXd action_weights;           // A x r, raw
    std::vector<Eigen::MatrixXd> state_parts; // S of (S x r)
};

std::vector<Eigen::MatrixXd> assemble_slices(const Factors& f, const Eigen::VectorXd& scale) {
    Eigen::MatrixXd w = f.action_weights * scale.asDiagonal();
    const Eigen::VectorXd row_sum = w.rowwise().sum();
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
        w.row(j) /= row_sum(j);
    }
    std::vector<Eigen::MatrixXd> slices;
    slices.reserve(f.state_parts.size());
    for (const auto& u : f.state_parts) {
        slices.push_back(u * w.transpose());
    }
    return slices;
}

double median_kappa(const std::vector<Eigen::MatrixXd>& slices) {
    std::vector<double> kappas;
    for (const auto& m : slices) {
        kappas.push_back(spectral_diagnostics(m).kappa);
    }
    return median_of(std::move(kappas));
}

} // namespace

SyntheticTask gen_synthetic(const SyntheticSpec& spec) {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int r = spec.target_rank;
    if (S < 1 || A < 1) {
        throw ParamError("synthetic task needs positive state and action counts");
    }
    if (r < 1 || r > std::min(S, A)) {
        throw ParamError(fmt::format("target rank {} outside [1, {}]", r, std::min(S, A)));
    }
    if (!(spec.incoherence_shaping >= 0.0 && spec.incoherence_shaping <= 1.0)) {
        throw ParamError("incoherence shaping must lie in [0,1]");
    }
    if (spec.target_condition_number && !(*spec.target_condition_number >= 1.0)) {
        throw ParamError("target condition number must be at least 1");
    }
    const double exponent = 1.0 + 4.0 * spec.incoherence_shaping;
    RngStream rng(spec.seed);

    Factors f;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        f.action_weights.resize(A, r);
        for (int j = 0; j < A; ++j) {
            for (int k = 0; k < r; ++k) {
                f.action_weights(j, k) = shaped_draw(rng, exponent);
            }
        }
        f.state_parts.assign(S, Eigen::MatrixXd(S, r));
        for (auto& u : f.state_parts) {
            for (int i = 0; i < S; ++i) {
                for (int k = 0; k < r; ++k) {
                    u(i, k) = shaped_draw(rng, exponent);
                }
            }
        }
        ok = (f.action_weights.rowwise().sum().array() > 0.0).all();
        for (int i = 0; i < S && ok; ++i) {
            for (int k = 0; k < r && ok; ++k) {
                double mass = 0.0;
                for (const auto& u : f.state_parts) {
                    mass += u(i, k);
                }
                if (!(mass > 0.0)) {
                    ok = false;
                    break;
                }
                for (auto& u : f.state_parts) {
                    u(i, k) /= mass;
                }
            }
        }
    }
    if (!ok) {
        throw GenerationError("transition rows collapsed to zero mass after 100 redraws");
    }

    // Geometric down-weighting of later latent factors raises the condition
    // number; bisect its ratio toward the requested median kappa.
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(r);
    if (spec.target_condition_number && r > 1 &&
        median_kappa(assemble_slices(f, scale)) < *spec.target_condition_number) {
        auto scale_for = [r](double q) {
            Eigen::VectorXd v(r);
            for (int k = 0; k < r; ++k) {
                v(k) = std::pow(q, static_cast<double>(k) / (r - 1));
            }
            return v;
        };
        double lo = 1e-6;
        double hi = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = std::sqrt(lo * hi);
            if (median_kappa(assemble_slices(f, scale_for(mid))) > *spec.target_condition_number) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        scale = scale_for(std::sqrt(lo * hi));
    }
    const auto slices = assemble_slices(f, scale);

    Eigen::MatrixXd reward_left(S, r);
    Eigen::MatrixXd reward_right(A, r);
    for (int i = 0; i < S; ++i) {
        for (int k = 0; k < r; ++k) {
            reward_left(i, k) = rng.uniform();
        }
    }
    for (int j = 0; j < A; ++j) {
        for (int k = 0; k < r; ++k) {
            reward_right(j, k) = rng.uniform();
        }
    }
    Eigen::MatrixXd reward = reward_left * reward_right.transpose();
    const double peak = reward.maxCoeff();
    if (peak > 0.0) {
        reward /= peak;
    }

    DynamicMatrices dm{slices, reward};
    auto mdp = mdp_from_dynamic_matrices(dm, std::vector<double>(S, 1.0 / S), spec.horizon, 0.0,
                                         1.0, kExactTolerance);
    auto diagnostics = slice_diagnostics(mdp);
    return {std::move(mdp), std::move(diagnostics)};
}

std::vector<SpectralDiagnostics> slice_diagnostics(const TabularMdp& mdp) {
    const auto dm = dynamic_matrices(mdp);
    std::vector<SpectralDiagnostics> out;
    out.reserve(dm.transition_slices.size() + 1);
    auto measure = [](const Eigen::MatrixXd& m) {
        try {
            return spectral_diagnostics(m);
        } catch (const ZeroMatrixError&) {
            SpectralDiagnostics empty;
            empty.numerical_rank = 0;
            empty.singular_values.assign(std::min(m.rows(), m.cols()), 0.0);
            return empty;
        }
    };
    for (const auto& slice : dm.transition_slices) {
        out.push_back(measure(slice));
    }
    out.push_back(measure(dm.reward_slice));
    return out;
}

} // namespace gim
