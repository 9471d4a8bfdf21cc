#pragma once

#include "gim/matcomp.hpp"
#include "gim/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace gim {

/// Slippery grid. Actions are up, down, left, right (indices 0..3); cells
/// are numbered row-major from the top-left corner.
struct GridSpec {
    int height = 4;
    int width = 4;
    double slip = 0.4;
    double step_cost = 0.2;
    /// Defaults to the bottom-right corner.
    std::optional<std::pair<int, int>> goal_cell;
    double goal_reward = 1.0;
    int horizon = 20;
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Chain of states; action 0 swims left, action 1 swims right.
struct RiverSwimSpec {
    int chain_length = 6;
    double p_advance = 0.3;
    double p_stay = 0.6;
    double p_back = 0.1;
    double left_reward = 0.005;
    double right_reward = 1.0;
    // Right-move outcomes at the two ends of the chain.
    double first_stay = 0.7;
    double first_advance = 0.3;
    double last_stay = 0.7;
    double last_back = 0.3;
    int horizon = 20;
};

struct SyntheticSpec {
    int num_states = 20;
    int num_actions = 10;
    int target_rank = 2;
    std::uint64_t seed = 0;
    std::optional<double> target_condition_number;
    /// 0 draws factors uniformly; 1 makes them sharply peaked.
    double incoherence_shaping = 0.5;
    int horizon = 20;
};

struct SyntheticTask {
    TabularMdp mdp;
    /// Measured diagnostics: one per transition slice, then the reward slice.
    std::vector<SpectralDiagnostics> diagnostics;
};

TabularMdp make_gridworld(const GridSpec& spec);
TabularMdp make_riverswim(const RiverSwimSpec& spec);

/// Built-in CasinoLand approximation: 8 states, 3 actions.
TabularMdp make_casinoland(int horizon = 20);
/// Loads CasinoLand (or any environment) from a JSON environment file.
TabularMdp make_casinoland(const std::filesystem::path& file);

SyntheticTask gen_synthetic(const SyntheticSpec& spec);

/// Per-slice diagnostics of an MDP's dynamic matrices (transition slices,
/// then the reward slice). All-zero slices report rank 0.
std::vector<SpectralDiagnostics> slice_diagnostics(const TabularMdp& mdp);

} // namespace gim
