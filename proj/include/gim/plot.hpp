#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gim {

struct RewardSeries {
    std::string label;
    /// (episode, mean reward) points after down-sampling.
    std::vector<std::pair<double, double>> points;
};

/// Reads a per-episode CSV, averages reward across runs per episode, and
/// averages consecutive blocks of `stride` episodes. The label is the file
/// stem without a trailing `_episodes`.
RewardSeries load_reward_series(const std::filesystem::path& csv, int stride);

/// Deterministic SVG with one polyline per series.
std::string render_reward_svg(const std::vector<RewardSeries>& series);

/// Throws EmptyInputError for no inputs, IoError for unreadable or
/// unwritable files, SchemaError for malformed CSVs.
void emit_plot(const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& out,
               int stride = 100);

} // namespace gim
