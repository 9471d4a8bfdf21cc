// Command-line front end: gen-env, diagnose, run, sweep, plot.

#include "gim/env_io.hpp"
#include "gim/envs.hpp"
#include "gim/errors.hpp"
#include "gim/harness.hpp"
#include "gim/plot.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kIo = 2;

struct GenEnvArgs {
    std::string kind;
    std::string out;
    int horizon = 20;
    std::optional<int> states, actions, rank, height, width, chain_length;
    std::optional<std::uint64_t> seed;
    std::optional<double> kappa, shaping, slip, step_cost;
};

// Rejects flags that do not belong to the chosen environment kind.
void check_applicable(const CLI::App& cmd, const std::string& kind) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> owners{
        {"--states", {"synthetic"}},   {"--actions", {"synthetic"}}, {"--rank", {"synthetic"}},
        {"--seed", {"synthetic"}},     {"--kappa", {"synthetic"}},   {"--shaping", {"synthetic"}},
        {"--height", {"gridworld"}},   {"--width", {"gridworld"}},   {"--slip", {"gridworld"}},
        {"--step-cost", {"gridworld"}}, {"--chain-length", {"riverswim"}},
    };
    for (const auto& [flag, kinds] : owners) {
        if (cmd.count(flag) > 0 && std::ranges::find(kinds, kind) == kinds.end()) {
            throw gim::ConfigError(fmt::format("{} does not apply to '{}'", flag, kind));
        }
    }
}

gim::TabularMdp build_env(const GenEnvArgs& a) {
    if (a.kind == "synthetic") {
        gim::SyntheticSpec spec;
        spec.num_states = a.states.value_or(spec.num_states);
        spec.num_actions = a.actions.value_or(spec.num_actions);
        spec.target_rank = a.rank.value_or(spec.target_rank);
        spec.seed = a.seed.value_or(spec.seed);
        spec.target_condition_number = a.kappa;
        spec.incoherence_shaping = a.shaping.value_or(spec.incoherence_shaping);
        spec.horizon = a.horizon;
        return gim::gen_synthetic(spec).mdp;
    }
    if (a.kind == "gridworld") {
        gim::GridSpec spec;
        spec.height = a.height.value_or(spec.height);
        spec.width = a.width.value_or(spec.width);
        spec.slip = a.slip.value_or(spec.slip);
        spec.step_cost = a.step_cost.value_or(spec.step_cost);
        spec.horizon = a.horizon;
        return gim::make_gridworld(spec);
    }
    if (a.kind == "riverswim") {
        gim::RiverSwimSpec spec;
        spec.chain_length = a.chain_length.value_or(spec.chain_length);
        spec.horizon = a.horizon;
        return gim::make_riverswim(spec);
    }
    return gim::make_casinoland(a.horizon);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw gim::IoError(fmt::format("cannot write '{}'", path));
    }
}

void print_summary(const std::vector<gim::RunResult>& results, const gim::WrittenFiles& files) {
    const gim::Summary s = gim::summarize(results);
    fmt::print("agent={} task={} runs={}\n", results.front().agent, results.front().task,
               results.size());
    fmt::print("avg_reward median={:.6f} mean={:.6f} iqr=[{:.6f},{:.6f}]\n", s.avg_reward.median,
               s.avg_reward.mean, s.avg_reward.q1, s.avg_reward.q3);
    if (s.total_eps.count > 0) {
        fmt::print("total_eps median={} mean={}\n", s.total_eps.median, s.total_eps.mean);
    }
    if (s.post_avg_reward.count > 0) {
        fmt::print("post_avg_reward median={:.6f} mean={:.6f}\n", s.post_avg_reward.median,
                   s.post_avg_reward.mean);
    }
    fmt::print("dp_ops median={}\n", s.dp_ops.median);
    fmt::print("wrote {}\nwrote {}\n", files.episodes.string(), files.summary.string());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular reinforcement learning with low-rank model completion.", "gim"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write CSVs");
    run_cmd->add_option("--config", config_path, "Experiment config JSON")->required();

    std::string sweep_config;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the parameter grid of a config");
    sweep_cmd->add_option("--config", sweep_config, "Experiment config JSON with a sweep grid")
        ->required();

    GenEnvArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-env", "Write an environment file");
    gen_cmd->add_option("kind", gen.kind, "synthetic, gridworld, riverswim or casinoland")
        ->required()
        ->check(CLI::IsMember({"synthetic", "gridworld", "riverswim", "casinoland"}));
    gen_cmd->add_option("--out", gen.out, "Output file (stdout if omitted)");
    gen_cmd->add_option("--horizon", gen.horizon, "Episode length H")->capture_default_str();
    gen_cmd->add_option("--states", gen.states, "synthetic: number of states");
    gen_cmd->add_option("--actions", gen.actions, "synthetic: number of actions");
    gen_cmd->add_option("--rank", gen.rank, "synthetic: target rank");
    gen_cmd->add_option("--seed", gen.seed, "synthetic: generator seed");
    gen_cmd->add_option("--kappa", gen.kappa, "synthetic: target condition number");
    gen_cmd->add_option("--shaping", gen.shaping, "synthetic: incoherence shaping in [0,1]");
    gen_cmd->add_option("--height", gen.height, "gridworld: rows");
    gen_cmd->add_option("--width", gen.width, "gridworld: columns");
    gen_cmd->add_option("--slip", gen.slip, "gridworld: slip probability");
    gen_cmd->add_option("--step-cost", gen.step_cost, "gridworld: per-step cost");
    gen_cmd->add_option("--chain-length", gen.chain_length, "riverswim: number of states");

    std::string diag_path;
    auto* diag_cmd = app.add_subcommand("diagnose", "Print per-slice spectral diagnostics as CSV");
    diag_cmd->add_option("env", diag_path, "Environment file")->required();

    std::vector<std::string> plot_inputs;
    std::string plot_out;
    int plot_stride = 100;
    auto* plot_cmd = app.add_subcommand("plot", "Plot per-episode CSVs as an SVG line chart");
    plot_cmd->add_option("csv", plot_inputs, "Per-episode CSV files")->required();
    plot_cmd->add_option("--out", plot_out, "Output SVG file")->required();
    plot_cmd->add_option("--stride", plot_stride, "Episodes per plotted point")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kValidation;
    }

    try {
        if (*run_cmd) {
            const auto config = gim::load_config(config_path);
            const auto results = gim::run_all(config);
            const auto files = gim::write_csv(results, config.out);
            print_summary(results, files);
        } else if (*sweep_cmd) {
            const auto config = gim::load_config(sweep_config);
            const auto rows = gim::sweep(config, config.sweep);
            std::error_code ec;
            std::filesystem::create_directories(config.out, ec);
            const auto path = config.out / "sweep.csv";
            std::ofstream out(path, std::ios::binary);
            if (!out) {
                throw gim::IoError(fmt::format("cannot write '{}'", path.string()));
            }
            gim::write_sweep_csv(rows, out);
            gim::write_sweep_csv(rows, std::cout);
        } else if (*gen_cmd) {
            check_applicable(*gen_cmd, gen.kind);
            write_text(gen.out, gim::dump_env(build_env(gen)));
        } else if (*diag_cmd) {
            const auto env = gim::load_env_file(diag_path);
            const auto diags = gim::slice_diagnostics(env);
            std::cout << "slice,rank,kappa,mu0,mu1\n";
            for (std::size_t i = 0; i < diags.size(); ++i) {
                const auto& d = diags[i];
                const std::string label =
                    i + 1 == diags.size() ? std::string("reward") : std::to_string(i);
                fmt::print("{},{},{},{},{}\n", label, d.numerical_rank, d.kappa, d.mu0, d.mu1);
            }
        } else if (*plot_cmd) {
            std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
            gim::emit_plot(inputs, plot_out, plot_stride);
        }
    } catch (const gim::IoError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const gim::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    }
    return kOk;
}
