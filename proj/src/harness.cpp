#include "gim/harness.hpp"

#include "gim/env_io.hpp"
#include "gim/envs.hpp"
#include "gim/errors.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gim {

using nlohmann::json;

namespace {

// Default parameters per task and agent name; the set of keys is also the
// set of accepted keys.
const std::map<std::string, json>& task_defaults() {
    static const std::map<std::string, json> defaults{
        {"synthetic",
         {{"states", 20}, {"actions", 10}, {"rank", 2}, {"seed", 0}, {"kappa", nullptr},
          {"shaping", 0.5}}},
        {"gridworld",
         {{"height", 4}, {"width", 4}, {"slip", 0.4}, {"step_cost", 0.2}, {"goal_row", nullptr},
          {"goal_col", nullptr}, {"goal_reward", 1.0}}},
        {"riverswim",
         {{"chain_length", 6}, {"p_advance", 0.3}, {"p_stay", 0.6}, {"p_back", 0.1},
          {"left_reward", 0.005}, {"right_reward", 1.0}, {"first_stay", 0.7},
          {"first_advance", 0.3}, {"last_stay", 0.7}, {"last_back", 0.3}}},
        {"casinoland", {{"file", nullptr}}},
        {"file", {{"path", ""}}},
    };
    return defaults;
}

const std::map<std::string, json>& agent_defaults() {
    static const std::map<std::string, json> defaults{
        {"gim", {{"m", 40}, {"rho", 0.8}, {"beta", 0.1}, {"rank", nullptr}}},
        {"rmax", {{"m", 40}}},
        {"q-learning", {{"alpha", 0.1}, {"gamma", 0.95}, {"epsilon", 0.1}}},
        {"double-q", {{"alpha", 0.1}, {"gamma", 0.95}, {"epsilon", 0.1}}},
        {"delayed-q", {{"m_delay", 20}, {"epsilon1", 0.01}, {"gamma", 0.95}}},
        {"optimal", json::object()},
        {"random", json::object()},
    };
    return defaults;
}

json normalize_named(const json& given, const std::map<std::string, json>& table,
                     const char* what) {
    if (!given.is_object() || !given.contains("name") || !given["name"].is_string()) {
        throw ConfigError(fmt::format("'{}' must be an object with a string 'name'", what));
    }
    const auto name = given["name"].get<std::string>();
    const auto it = table.find(name);
    if (it == table.end()) {
        throw ConfigError(fmt::format("unknown {} '{}'", what, name));
    }
    json out = it->second;
    for (const auto& [key, value] : given.items()) {
        if (key == "name") {
            continue;
        }
        if (!out.contains(key)) {
            throw ConfigError(fmt::format("{} '{}' has no parameter '{}'", what, name, key));
        }
        const json& def = out[key];
        const bool numeric_ok = value.is_number() && (def.is_number() || def.is_null());
        const bool string_ok = value.is_string() && (def.is_string() || def.is_null());
        if (!(value.is_null() || numeric_ok || string_ok)) {
            throw ConfigError(fmt::format("{} parameter '{}' has the wrong type", what, key));
        }
        out[key] = value;
    }
    out["name"] = name;
    return out;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    return obj.contains(key) && !obj[key].is_null() ? obj[key].get<T>() : fallback;
}

int positive_int(const json& doc, const char* key, int fallback) {
    if (!doc.contains(key)) {
        return fallback;
    }
    const json& v = doc[key];
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(fmt::format("'{}' must be a positive integer", key));
    }
    return v.get<int>();
}

int worker_count(const ExperimentConfig& config) {
    if (const char* env = std::getenv("GIM_WORKERS"); env != nullptr && *env != '\0') {
        const int n = std::atoi(env);
        if (n >= 1) {
            return n;
        }
    }
    return config.workers > 0 ? config.workers : omp_get_max_threads();
}

std::string task_label(const json& task) { return task["name"].get<std::string>(); }

} // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::vector<std::string> kKeys{"task", "agent",   "episodes", "horizon",
                                                "runs", "seed",    "out",      "sweep",
                                                "plot_stride", "workers"};
    for (const auto& [key, value] : doc.items()) {
        if (std::ranges::find(kKeys, key) == kKeys.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }
    if (!doc.contains("task") || !doc.contains("agent")) {
        throw ConfigError("config needs 'task' and 'agent'");
    }
    ExperimentConfig c;
    c.task = normalize_named(doc["task"], task_defaults(), "task");
    c.agent = normalize_named(doc["agent"], agent_defaults(), "agent");
    c.episodes = positive_int(doc, "episodes", c.episodes);
    c.horizon = positive_int(doc, "horizon", c.horizon);
    c.runs = positive_int(doc, "runs", c.runs);
    c.plot_stride = positive_int(doc, "plot_stride", c.plot_stride);
    if (doc.contains("workers")) {
        if (!doc["workers"].is_number_integer() || doc["workers"].get<int>() < 0) {
            throw ConfigError("'workers' must be a nonnegative integer");
        }
        c.workers = doc["workers"].get<int>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer() || doc["seed"].get<long long>() < 0) {
            throw ConfigError("'seed' must be a nonnegative integer");
        }
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("out")) {
        if (!doc["out"].is_string()) {
            throw ConfigError("'out' must be a path string");
        }
        c.out = doc["out"].get<std::string>();
    }
    if (doc.contains("sweep")) {
        if (!doc["sweep"].is_object()) {
            throw ConfigError("'sweep' must map parameter paths to value lists");
        }
        for (const auto& [key, values] : doc["sweep"].items()) {
            if (!values.is_array() || values.empty()) {
                throw ConfigError(fmt::format("sweep '{}' needs a nonempty value list", key));
            }
        }
        c.sweep = doc["sweep"];
    }
    // Construct once so that bad parameter values surface here.
    try {
        const auto env = build_task(c.task, c.seed, c.horizon);
        (void)make_agent(c.agent, env, c.seed);
    } catch (const IoError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open config file '{}'", path.string()));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_config(doc);
}

json config_to_json(const ExperimentConfig& c) {
    return {{"task", c.task},       {"agent", c.agent},
            {"episodes", c.episodes}, {"horizon", c.horizon},
            {"runs", c.runs},       {"seed", c.seed},
            {"out", c.out.string()}, {"sweep", c.sweep},
            {"plot_stride", c.plot_stride}, {"workers", c.workers}};
}

TabularMdp build_task(const json& task, std::uint64_t run_seed, int horizon) {
    const auto name = task.at("name").get<std::string>();
    if (name == "synthetic") {
        SyntheticSpec spec;
        spec.num_states = get_or(task, "states", spec.num_states);
        spec.num_actions = get_or(task, "actions", spec.num_actions);
        spec.target_rank = get_or(task, "rank", spec.target_rank);
        spec.seed = get_or<std::uint64_t>(task, "seed", 0) + run_seed;
        if (task.contains("kappa") && !task["kappa"].is_null()) {
            spec.target_condition_number = task["kappa"].get<double>();
        }
        spec.incoherence_shaping = get_or(task, "shaping", spec.incoherence_shaping);
        spec.horizon = horizon;
        return gen_synthetic(spec).mdp;
    }
    if (name == "gridworld") {
        GridSpec spec;
        spec.height = get_or(task, "height", spec.height);
        spec.width = get_or(task, "width", spec.width);
        spec.slip = get_or(task, "slip", spec.slip);
        spec.step_cost = get_or(task, "step_cost", spec.step_cost);
        spec.goal_reward = get_or(task, "goal_reward", spec.goal_reward);
        const bool has_row = task.contains("goal_row") && !task["goal_row"].is_null();
        const bool has_col = task.contains("goal_col") && !task["goal_col"].is_null();
        if (has_row != has_col) {
            throw ConfigError("goal_row and goal_col must be given together");
        }
        if (has_row) {
            spec.goal_cell = std::pair{task["goal_row"].get<int>(), task["goal_col"].get<int>()};
        }
        spec.horizon = horizon;
        return make_gridworld(spec);
    }
    if (name == "riverswim") {
        RiverSwimSpec spec;
        spec.chain_length = get_or(task, "chain_length", spec.chain_length);
        spec.p_advance = get_or(task, "p_advance", spec.p_advance);
        spec.p_stay = get_or(task, "p_stay", spec.p_stay);
        spec.p_back = get_or(task, "p_back", spec.p_back);
        spec.left_reward = get_or(task, "left_reward", spec.left_reward);
        spec.right_reward = get_or(task, "right_reward", spec.right_reward);
        spec.first_stay = get_or(task, "first_stay", spec.first_stay);
        spec.first_advance = get_or(task, "first_advance", spec.first_advance);
        spec.last_stay = get_or(task, "last_stay", spec.last_stay);
        spec.last_back = get_or(task, "last_back", spec.last_back);
        spec.horizon = horizon;
        return make_riverswim(spec);
    }
    if (name == "casinoland") {
        if (task.contains("file") && !task["file"].is_null()) {
            return make_casinoland(std::filesystem::path(task["file"].get<std::string>()))
                .with_horizon(horizon);
        }
        return make_casinoland(horizon);
    }
    if (name == "file") {
        return load_env_file(task.at("path").get<std::string>()).with_horizon(horizon);
    }
    throw ConfigError(fmt::format("unknown task '{}'", name));
}

std::unique_ptr<Agent> make_agent(const json& agent, const TabularMdp& env,
                                  std::uint64_t run_seed) {
    const auto name = agent.at("name").get<std::string>();
    const EnvDims dims{env.num_states(), env.num_actions(), env.horizon(), env.reward_min(),
                       env.reward_max()};
    if (name == "gim") {
        GimConfig c;
        c.m = get_or(agent, "m", c.m);
        c.rho = get_or(agent, "rho", c.rho);
        c.beta = get_or(agent, "beta", c.beta);
        if (agent.contains("rank") && !agent["rank"].is_null()) {
            c.rank_hint = agent["rank"].get<int>();
        }
        return std::make_unique<GimAgent>(c, dims);
    }
    if (name == "rmax") {
        return std::make_unique<RMaxAgent>(get_or<long long>(agent, "m", 40), dims);
    }
    if (name == "q-learning" || name == "double-q") {
        QConfig c;
        c.alpha = get_or(agent, "alpha", c.alpha);
        c.gamma = get_or(agent, "gamma", c.gamma);
        c.epsilon = get_or(agent, "epsilon", c.epsilon);
        if (name == "q-learning") {
            return std::make_unique<QLearningAgent>(c, dims);
        }
        return std::make_unique<DoubleQAgent>(c, dims, mix_seed(run_seed ^ 0xd0b1eULL));
    }
    if (name == "delayed-q") {
        DelayedQConfig c;
        c.m_delay = get_or(agent, "m_delay", c.m_delay);
        c.epsilon1 = get_or(agent, "epsilon1", c.epsilon1);
        c.gamma = get_or(agent, "gamma", c.gamma);
        return std::make_unique<DelayedQAgent>(c, dims);
    }
    if (name == "optimal") {
        return std::make_unique<OptimalAgent>(env);
    }
    if (name == "random") {
        return std::make_unique<RandomAgent>(env.num_actions());
    }
    throw ConfigError(fmt::format("unknown agent '{}'", name));
}

RunResult run(const ExperimentConfig& config, int run_index) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(run_index);
    const auto start = std::chrono::steady_clock::now();

    const TabularMdp env = build_task(config.task, seed, config.horizon);
    auto agent = make_agent(config.agent, env, seed);
    RngStream env_rng(seed);
    RngStream agent_rng = env_rng.derive(0xa6e27ULL);

    RunResult result;
    result.agent = agent->name();
    result.task = task_label(config.task);
    result.run_index = run_index;
    result.seed = seed;
    result.model_based = result.agent == "gim" || result.agent == "rmax";
    result.episodes.reserve(config.episodes);

    const ActionSelector selector = [&](int s, int h) { return agent->act(s, h, agent_rng); };
    const StepObserver observer = [&](const Transition& t, int) { agent->observe(t); };
    for (int episode = 1; episode <= config.episodes; ++episode) {
        agent->episode_start();
        const EpisodeLog log = simulate_episode(env, selector, env_rng, observer);
        agent->episode_end();
        const AgentCounters c = agent->instrumentation();
        result.episodes.push_back({episode, log.total_reward / env.horizon(),
                                   static_cast<int>(log.steps.size()), c.known_pairs,
                                   c.exploiting});
    }
    result.counters = agent->instrumentation();
    result.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return result;
}

std::vector<RunResult> run_all(const ExperimentConfig& config, Execution exec) {
    std::vector<RunResult> results(config.runs);
    if (exec == Execution::serial) {
        for (int i = 0; i < config.runs; ++i) {
            results[i] = run(config, i);
        }
        return results;
    }
    std::vector<std::exception_ptr> errors(config.runs);
    const int workers = worker_count(config);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < config.runs; ++i) {
        try {
            results[i] = run(config, i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

RunSummary summarize_run(const RunResult& result) {
    const int T = static_cast<int>(result.episodes.size());
    if (T == 0) {
        throw EmptyInputError("run has no episodes");
    }
    RunSummary s;
    s.cumulative_reward.resize(T);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        acc += result.episodes[t].reward;
        s.cumulative_reward[t] = acc;
    }
    s.avg_reward = acc / T;
    s.dp_ops = result.counters.dp_ops;
    s.wall_ms = result.wall_ms;
    if (result.model_based) {
        s.total_eps = result.counters.completion_episode.value_or(T + 1);
        if (*s.total_eps < T) {
            double post = 0.0;
            for (int t = *s.total_eps; t < T; ++t) {
                post += result.episodes[t].reward;
            }
            s.post_avg_reward = post / (T - *s.total_eps);
        }
    }
    return s;
}

Stat describe(std::vector<double> values) {
    Stat st;
    st.count = static_cast<int>(values.size());
    if (values.empty()) {
        return st;
    }
    std::ranges::sort(values);
    auto quantile = [&](double q) {
        const double pos = q * (values.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - lo) * (values[hi] - values[lo]);
    };
    st.median = quantile(0.5);
    st.q1 = quantile(0.25);
    st.q3 = quantile(0.75);
    st.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    return st;
}

Summary summarize(const std::vector<RunResult>& results) {
    if (results.empty()) {
        throw EmptyInputError("nothing to summarize");
    }
    const auto T = results.front().episodes.size();
    Summary out;
    std::vector<double> avg, total, post, dp, wall;
    for (const auto& r : results) {
        if (r.episodes.size() != T) {
            throw ValidationError("runs have different episode counts");
        }
        const RunSummary s = summarize_run(r);
        avg.push_back(s.avg_reward);
        if (s.total_eps) {
            total.push_back(*s.total_eps);
        }
        if (s.post_avg_reward) {
            post.push_back(*s.post_avg_reward);
        }
        dp.push_back(static_cast<double>(s.dp_ops));
        wall.push_back(s.wall_ms);
        out.runs.push_back(s);
    }
    out.avg_reward = describe(std::move(avg));
    out.total_eps = describe(std::move(total));
    out.post_avg_reward = describe(std::move(post));
    out.dp_ops = describe(std::move(dp));
    out.wall_ms = describe(std::move(wall));
    return out;
}

namespace {

// Resolves a dotted path; returns nullptr when a component is missing.
json* find_path(json& doc, const std::string& path) {
    json* node = &doc;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (!node->is_object() || !node->contains(part)) {
            return nullptr;
        }
        node = &(*node)[part];
    }
    return node;
}

} // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& config, const json& grid,
                            Execution exec) {
    json base = config_to_json(config);
    base["sweep"] = json::object();
    std::vector<std::pair<std::string, json>> axes;
    for (const auto& [key, values] : grid.items()) {
        if (key == "sweep" || key.starts_with("sweep.") || find_path(base, key) == nullptr) {
            throw UnknownParameterError(fmt::format("sweep parameter '{}' is not a config field", key));
        }
        if (!values.is_array() || values.empty()) {
            throw ConfigError(fmt::format("sweep '{}' needs a nonempty value list", key));
        }
        axes.emplace_back(key, values);
    }

    std::vector<SweepRow> rows;
    std::vector<std::size_t> index(axes.size(), 0);
    for (;;) {
        json point = base;
        json params = json::object();
        for (std::size_t k = 0; k < axes.size(); ++k) {
            const json& value = axes[k].second[index[k]];
            *find_path(point, axes[k].first) = value;
            params[axes[k].first] = value;
        }
        const ExperimentConfig cfg = parse_config(point);
        const auto results = run_all(cfg, exec);
        rows.push_back({params, results.front().agent, results.front().task, summarize(results)});

        std::size_t k = axes.size();
        while (k > 0) {
            --k;
            if (++index[k] < axes[k].second.size()) {
                break;
            }
            index[k] = 0;
            if (k == 0) {
                return rows;
            }
        }
        if (axes.empty()) {
            return rows;
        }
    }
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
    return v ? fmt::format("{}", *v) : std::string();
}

std::string optional_cell(const std::optional<int>& v) {
    return v ? fmt::format("{}", *v) : std::string();
}

} // namespace

void write_episode_csv(const std::vector<RunResult>& results, std::ostream& out) {
    out << kEpisodeCsvHeader << '\n';
    for (const auto& r : results) {
        for (const auto& e : r.episodes) {
            fmt::print(out, "{},{},{},{},{},{}\n", r.run_index, e.episode, e.reward, e.steps,
                       e.known_pairs, e.exploiting ? 1 : 0);
        }
    }
}

void write_summary_csv(const std::vector<RunResult>& results, std::ostream& out) {
    out << kSummaryCsvHeader << '\n';
    for (const auto& r : results) {
        const RunSummary s = summarize_run(r);
        fmt::print(out, "{},{},{},{},{},{},{},{:.3f}\n", r.agent, r.task, r.seed, s.avg_reward,
                   optional_cell(s.total_eps), optional_cell(s.post_avg_reward), s.dp_ops,
                   s.wall_ms);
    }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    std::vector<std::string> keys;
    if (!rows.empty()) {
        for (const auto& [key, value] : rows.front().params.items()) {
            keys.push_back(key);
        }
    }
    for (const auto& k : keys) {
        out << k << ',';
    }
    out << "agent,task,runs,avg_reward_median,avg_reward_mean,avg_reward_q1,avg_reward_q3,"
           "total_eps_median,total_eps_mean,post_avg_reward_median,post_avg_reward_mean,"
           "dp_ops_median,wall_ms_median\n";
    auto cell = [](const Stat& s, double v) {
        return s.count > 0 ? fmt::format("{}", v) : std::string();
    };
    for (const auto& row : rows) {
        for (const auto& k : keys) {
            out << row.params[k].dump() << ',';
        }
        const Summary& s = row.summary;
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{:.3f}\n", row.agent, row.task,
                   s.runs.size(), s.avg_reward.median, s.avg_reward.mean, s.avg_reward.q1,
                   s.avg_reward.q3, cell(s.total_eps, s.total_eps.median),
                   cell(s.total_eps, s.total_eps.mean),
                   cell(s.post_avg_reward, s.post_avg_reward.median),
                   cell(s.post_avg_reward, s.post_avg_reward.mean), s.dp_ops.median,
                   s.wall_ms.median);
    }
}

WrittenFiles write_csv(const std::vector<RunResult>& results, const std::filesystem::path& dir) {
    if (results.empty()) {
        throw EmptyInputError("no results to write");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(),
                                  ec.message()));
    }
    const std::string stem = results.front().agent + "_" + results.front().task;
    WrittenFiles files{dir / (stem + "_episodes.csv"), dir / (stem + "_summary.csv")};
    auto write = [](const std::filesystem::path& path, auto&& body) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError(fmt::format("cannot write '{}'", path.string()));
        }
        body(out);
        if (!out) {
            throw IoError(fmt::format("failed writing '{}'", path.string()));
        }
    };
    write(files.episodes, [&](std::ostream& o) { write_episode_csv(results, o); });
    write(files.summary, [&](std::ostream& o) { write_summary_csv(results, o); });
    return files;
}

} // namespace gim
