#pragma once

#include "gim/agents.hpp"
#include "gim/mdp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gim {

/**
 * One experiment: a task, an agent, and how long and how often to run it.
 *
 * `task` and `agent` are JSON objects with a `name` key; parse_config()
 * fills every omitted parameter with its default so that the stored form
 * lists all tunable fields. Sweep grids address them by dotted path
 * (`agent.m`, `task.rank`, `episodes`).
 */
struct ExperimentConfig {
    nlohmann::json task;
    nlohmann::json agent;
    int episodes = 1000;
    int horizon = 20;
    int runs = 20;
    std::uint64_t seed = 0;
    std::filesystem::path out = "results";
    nlohmann::json sweep = nlohmann::json::object();
    /// Down-sampling stride for plots.
    int plot_stride = 100;
    /// Concurrent runs; GIM_WORKERS overrides, 0 means the OpenMP default.
    int workers = 0;
};

/// Throws ConfigError on unknown keys, bad types, or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Builds the task's environment for a run seed, with the config horizon.
TabularMdp build_task(const nlohmann::json& task, std::uint64_t run_seed, int horizon);

/// Builds an agent for an environment.
std::unique_ptr<Agent> make_agent(const nlohmann::json& agent, const TabularMdp& env,
                                  std::uint64_t run_seed);

struct EpisodeRecord {
    int episode = 0;
    /// Per-step average reward of the episode (total reward / H).
    double reward = 0.0;
    int steps = 0;
    int known_pairs = 0;
    bool exploiting = false;

    friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct RunResult {
    std::string agent;
    std::string task;
    int run_index = 0;
    std::uint64_t seed = 0;
    std::vector<EpisodeRecord> episodes;
    AgentCounters counters;
    /// Whether the agent tracks known-ness (so TotalEps is defined).
    bool model_based = false;
    double wall_ms = 0.0;
};

/// Executes run number `run_index` with seed config.seed + run_index.
RunResult run(const ExperimentConfig& config, int run_index = 0);

/// All config.runs runs; concurrent unless exec is serial. Output order is
/// by run index regardless of scheduling.
std::vector<RunResult> run_all(const ExperimentConfig& config,
                               Execution exec = Execution::parallel);

struct RunSummary {
    double avg_reward = 0.0;
    /// Episodes to know everything; T+1 if never, absent for model-free agents.
    std::optional<int> total_eps;
    /// Mean reward over episodes after total_eps; absent if none exist.
    std::optional<double> post_avg_reward;
    long long dp_ops = 0;
    double wall_ms = 0.0;
    std::vector<double> cumulative_reward;
};

struct Stat {
    double median = 0.0;
    double mean = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int count = 0;
};

struct Summary {
    std::vector<RunSummary> runs;
    Stat avg_reward;
    Stat total_eps;
    Stat post_avg_reward;
    Stat dp_ops;
    Stat wall_ms;
};

RunSummary summarize_run(const RunResult& result);

/// Per-run metrics and cross-run aggregates. Throws EmptyInputError on an
/// empty input and ValidationError when runs differ in episode count.
Summary summarize(const std::vector<RunResult>& results);

/// Median, mean and quartiles (linear interpolation). Empty input gives count 0.
Stat describe(std::vector<double> values);

struct SweepRow {
    nlohmann::json params;
    std::string agent;
    std::string task;
    Summary summary;
};

/// Cartesian product over grid values; each point runs config.runs times.
/// Throws UnknownParameterError for paths not present in the config.
std::vector<SweepRow> sweep(const ExperimentConfig& config, const nlohmann::json& grid,
                            Execution exec = Execution::parallel);

inline constexpr const char* kEpisodeCsvHeader = "run,episode,reward,steps,known_pairs,phase";
inline constexpr const char* kSummaryCsvHeader =
    "agent,task,seed,avg_reward,total_eps,post_avg_reward,dp_ops,wall_ms";

void write_episode_csv(const std::vector<RunResult>& results, std::ostream& out);
void write_summary_csv(const std::vector<RunResult>& results, std::ostream& out);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

struct WrittenFiles {
    std::filesystem::path episodes;
    std::filesystem::path summary;
};

/// Writes `<agent>_<task>_episodes.csv` and `<agent>_<task>_summary.csv`
/// under `dir`. Throws IoError when the directory is not writable.
WrittenFiles write_csv(const std::vector<RunResult>& results, const std::filesystem::path& dir);

} // namespace gim
