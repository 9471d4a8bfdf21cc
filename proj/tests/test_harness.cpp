#include "gim/errors.hpp"
#include "gim/harness.hpp"
#include "gim/plot.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

using namespace gim;
using nlohmann::json;

namespace {

ExperimentConfig config(const std::string& agent, const std::string& task, int episodes,
                        int runs, json agent_extra = json::object(),
                        json task_extra = json::object()) {
    json a = agent_extra;
    a["name"] = agent;
    json t = task_extra;
    t["name"] = task;
    return parse_config({{"task", t}, {"agent", a}, {"episodes", episodes}, {"runs", runs},
                         {"seed", 1}});
}

RunResult fake_run(std::vector<double> rewards, std::optional<int> completion, bool model_based) {
    RunResult r;
    r.agent = "gim";
    r.task = "fake";
    r.model_based = model_based;
    r.counters.completion_episode = completion;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        r.episodes.push_back({static_cast<int>(i) + 1, rewards[i], 1, 0, false});
    }
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("gim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::ranges::sort(idx, [&](auto a, auto b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            r[idx[i]] = static_cast<double>(i);
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    }
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

} // namespace

TEST_CASE("config parsing") {
    const auto c = config("gim", "synthetic", 10, 2);
    CHECK(c.agent["m"] == 40);
    CHECK(c.agent["rho"] == 0.8);
    CHECK(c.task["rank"] == 2);
    CHECK(c.horizon == 20);
    const auto round = parse_config(config_to_json(c));
    CHECK(config_to_json(round) == config_to_json(c));

    CHECK_THROWS_AS(parse_config({{"task", {{"name", "synthetic"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "synthetic"}}},
                                  {"agent", {{"name", "gim"}}},
                                  {"bogus", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "synthetic"}}},
                                  {"agent", {{"name", "gim"}, {"mm", 3}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "nowhere"}}}, {"agent", {{"name", "gim"}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "synthetic"}}},
                                  {"agent", {{"name", "gim"}}},
                                  {"episodes", 0}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "synthetic"}}},
                                  {"agent", {{"name", "gim"}, {"rho", 0.0}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"task", {{"name", "file"}, {"path", "/missing/env.json"}}},
                                  {"agent", {{"name", "rmax"}}}}),
                    IoError);
}

TEST_CASE("runs are deterministic per seed and independent of scheduling") {
    const auto c = config("gim", "riverswim", 300, 4, {{"m", 5}});
    const auto serial = run_all(c, Execution::serial);
    const auto parallel = run_all(c, Execution::parallel);
    std::ostringstream a, b;
    write_episode_csv(serial, a);
    write_episode_csv(parallel, b);
    CHECK(a.str() == b.str());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].seed == 1 + i);
        CHECK(serial[i].episodes.size() == 300);
    }
    std::ostringstream again;
    write_episode_csv(run_all(c, Execution::serial), again);
    CHECK(again.str() == a.str());

    setenv("GIM_WORKERS", "2", 1);
    std::ostringstream workers;
    write_episode_csv(run_all(c), workers);
    unsetenv("GIM_WORKERS");
    CHECK(workers.str() == a.str());
}

TEST_CASE("optimal agent reward matches exact evaluation") {
    auto c = config("optimal", "synthetic", 20000, 1);
    const auto r = run(c, 0);
    const auto env = build_task(c.task, r.seed, c.horizon);
    const double exact = value_iteration(env).value;
    double sum = 0.0, sq = 0.0;
    for (const auto& e : r.episodes) {
        sum += e.reward;
        sq += e.reward * e.reward;
    }
    const double n = static_cast<double>(r.episodes.size());
    const double mean = sum / n;
    CHECK(std::abs(mean - exact) <= 3.0 * std::sqrt((sq / n - mean * mean) / n));
    CHECK(summarize_run(r).avg_reward == doctest::Approx(mean).epsilon(1e-12));
    CHECK(!summarize_run(r).total_eps.has_value());
}

TEST_CASE("gim phase flips once and defines TotalEps") {
    const auto r = run(config("gim", "synthetic", 20000, 1), 0);
    int flips = 0;
    int last_known = 0;
    for (std::size_t i = 1; i < r.episodes.size(); ++i) {
        flips += r.episodes[i].exploiting != r.episodes[i - 1].exploiting ? 1 : 0;
    }
    for (const auto& e : r.episodes) {
        CHECK(e.known_pairs >= last_known);
        last_known = e.known_pairs;
    }
    CHECK(flips + (r.episodes.front().exploiting ? 1 : 0) == 1);
    const auto s = summarize_run(r);
    REQUIRE(s.total_eps.has_value());
    CHECK(*s.total_eps == *r.counters.completion_episode);
    CHECK(r.episodes[*s.total_eps - 1].exploiting);
    CHECK(r.counters.dp_ops == 1);
}

TEST_CASE("summaries") {
    SUBCASE("constant rewards") {
        const auto s = summarize({fake_run({1, 1, 1, 1}, 2, true)});
        CHECK(s.runs[0].avg_reward == 1.0);
        CHECK(*s.runs[0].total_eps == 2);
        CHECK(*s.runs[0].post_avg_reward == 1.0);
    }
    SUBCASE("post reward uses episodes strictly after TotalEps") {
        const auto s = summarize_run(fake_run({0, 0, 1, 3}, 2, true));
        CHECK(*s.post_avg_reward == 2.0);
    }
    SUBCASE("never completing gives the sentinel and no post reward") {
        const auto s = summarize_run(fake_run({0.5, 0.5, 0.5}, std::nullopt, true));
        CHECK(*s.total_eps == 4);
        CHECK(!s.post_avg_reward.has_value());
        const auto last = summarize_run(fake_run({0.5, 0.5, 0.5}, 3, true));
        CHECK(!last.post_avg_reward.has_value());
    }
    SUBCASE("model-free runs have no TotalEps") {
        CHECK(!summarize_run(fake_run({0.1}, std::nullopt, false)).total_eps.has_value());
    }
    SUBCASE("cumulative curve is a prefix sum") {
        const auto s = summarize_run(fake_run({0.1, 0.2, 0.3, 0.4}, std::nullopt, true));
        CHECK(s.cumulative_reward[2] == doctest::Approx(0.6));
        CHECK(s.cumulative_reward.back() == doctest::Approx(4 * s.avg_reward).epsilon(1e-12));
    }
    SUBCASE("aggregates ignore run order") {
        std::vector<RunResult> runs{fake_run({1, 2}, 1, true), fake_run({3, 5}, 2, true),
                                    fake_run({0, 0}, std::nullopt, true)};
        const auto a = summarize(runs);
        std::ranges::reverse(runs);
        const auto b = summarize(runs);
        CHECK(a.avg_reward.median == b.avg_reward.median);
        CHECK(a.avg_reward.mean == b.avg_reward.mean);
        CHECK(a.avg_reward.q1 == b.avg_reward.q1);
        CHECK(a.total_eps.median == b.total_eps.median);
        CHECK(a.avg_reward.median == 1.5);
        CHECK(a.post_avg_reward.count == 1);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(summarize({}), EmptyInputError);
        CHECK_THROWS_AS(summarize({fake_run({1}, 1, true), fake_run({1, 1}, 1, true)}),
                        ValidationError);
    }
    const auto st = describe({4, 1, 3, 2});
    CHECK(st.median == 2.5);
    CHECK(st.q1 == 1.75);
    CHECK(st.q3 == 3.25);
}

TEST_CASE("every agent lands between random and optimal") {
    std::map<std::string, double> median;
    for (const char* agent : {"random", "optimal", "gim", "rmax", "q-learning", "double-q",
                              "delayed-q"}) {
        median[agent] = summarize(run_all(config(agent, "synthetic", 2000, 20))).avg_reward.median;
    }
    for (const char* agent : {"gim", "rmax", "q-learning", "double-q", "delayed-q"}) {
        INFO(agent);
        CHECK(median[agent] >= median["random"]);
        CHECK(median[agent] <= median["optimal"]);
    }
}

TEST_CASE("sweeps") {
    const auto base = config("rmax", "riverswim", 50, 2, {{"m", 3}});
    SUBCASE("empty grid runs the base config once") {
        const auto rows = sweep(base, json::object());
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].summary.runs.size() == 2);
    }
    SUBCASE("unknown parameter") {
        CHECK_THROWS_AS(sweep(base, {{"agent.nope", {1, 2}}}), UnknownParameterError);
        CHECK_THROWS_AS(sweep(base, {{"colour", {1}}}), UnknownParameterError);
    }
    SUBCASE("cartesian product in key order") {
        const auto rows = sweep(base, {{"agent.m", {2, 4}}, {"episodes", {20, 30, 40}}});
        REQUIRE(rows.size() == 6);
        CHECK(rows[0].params["agent.m"] == 2);
        CHECK(rows[0].params["episodes"] == 20);
        CHECK(rows[5].params["agent.m"] == 4);
        CHECK(rows[5].params["episodes"] == 40);
        std::ostringstream out;
        write_sweep_csv(rows, out);
        CHECK(out.str().find("agent.m,episodes,agent,task,runs") == 0);
    }
}

TEST_CASE("TotalEps grows with the known threshold") {
    for (const char* agent : {"gim", "rmax"}) {
        const auto rows =
            sweep(config(agent, "synthetic", 4000, 20), {{"agent.m", {10, 20, 40, 80}}});
        for (std::size_t i = 1; i < rows.size(); ++i) {
            INFO(agent, " m index ", i);
            CHECK(rows[i].summary.total_eps.median >= rows[i - 1].summary.total_eps.median);
        }
    }
}

// Reported, not enforced: the synthetic reward slice is max-normalized, so
// its mean entry rises with rank and lifts every agent's reward, the optimal
// one included. See README "Known gaps".
TEST_CASE("post-exploration reward trends down with rank" * doctest::may_fail()) {
    const auto rows = sweep(config("gim", "synthetic", 3000, 20), {{"task.rank", {2, 4, 6, 8, 10}}});
    std::vector<double> ranks, post;
    for (const auto& row : rows) {
        ranks.push_back(row.params["task.rank"].get<double>());
        REQUIRE(row.summary.post_avg_reward.count > 0);
        post.push_back(row.summary.post_avg_reward.median);
    }
    MESSAGE("median post reward by rank: ", json(post).dump());
    CHECK(spearman(ranks, post) <= 0.0);
}

TEST_CASE("csv outputs") {
    const auto results = run_all(config("gim", "riverswim", 30, 2, {{"m", 2}}));
    const auto dir = scratch("csv");
    const auto files = write_csv(results, dir);
    CHECK(files.episodes.filename() == "gim_riverswim_episodes.csv");
    CHECK(files.summary.filename() == "gim_riverswim_summary.csv");
    const auto episodes = slurp(files.episodes);
    const auto summary = slurp(files.summary);
    CHECK(episodes.substr(0, episodes.find('\n')) == "run,episode,reward,steps,known_pairs,phase");
    CHECK(summary.substr(0, summary.find('\n')) ==
          "agent,task,seed,avg_reward,total_eps,post_avg_reward,dp_ops,wall_ms");
    CHECK(std::ranges::count(episodes, '\n') == 61);
    CHECK(std::ranges::count(summary, '\n') == 3);
    CHECK_THROWS_AS(write_csv(results, "/proc/gim_no_such_dir"), IoError);

    SUBCASE("model-free summaries leave TotalEps empty") {
        std::ostringstream out;
        write_summary_csv(run_all(config("q-learning", "riverswim", 5, 1)), out);
        const auto text = out.str();
        const auto row = text.substr(text.find('\n') + 1);
        CHECK(row.find(",,,") != std::string::npos);
    }
}

TEST_CASE("plots") {
    const auto dir = scratch("plot");
    const auto gim_files = write_csv(run_all(config("gim", "riverswim", 250, 2, {{"m", 2}})), dir);
    const auto rmax_files = write_csv(run_all(config("rmax", "riverswim", 250, 2, {{"m", 2}})), dir);
    const auto svg = dir / "fig.svg";
    emit_plot({gim_files.episodes, rmax_files.episodes}, svg, 100);
    const auto first = slurp(svg);
    emit_plot({gim_files.episodes, rmax_files.episodes}, svg, 100);
    CHECK(slurp(svg) == first);

    std::size_t polylines = 0;
    for (auto pos = first.find("<polyline"); pos != std::string::npos;
         pos = first.find("<polyline", pos + 1)) {
        ++polylines;
    }
    CHECK(polylines == 2);
    CHECK(first.find(">episode<") != std::string::npos);
    CHECK(first.find(">average reward<") != std::string::npos);
    CHECK(first.find(">gim_riverswim<") != std::string::npos);

    const auto series = load_reward_series(gim_files.episodes, 100);
    CHECK(series.points.size() == 3);
    CHECK(series.points.back().first == 250);

    CHECK_THROWS_AS(emit_plot({}, svg), EmptyInputError);
    CHECK_THROWS_AS(emit_plot({dir / "missing.csv"}, svg), IoError);
    CHECK_THROWS_AS(emit_plot({gim_files.summary}, svg), SchemaError);
}
