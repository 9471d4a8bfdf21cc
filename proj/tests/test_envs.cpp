#include "oracles.hpp"

#include "gim/env_io.hpp"
#include "gim/envs.hpp"
#include "gim/errors.hpp"
#include "gim/matcomp.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

using namespace gim;

namespace {

void check_rows_normalized(const TabularMdp& m, double tol) {
    for (int s = 0; s < m.num_states(); ++s) {
        for (int a = 0; a < m.num_actions(); ++a) {
            double total = 0.0;
            for (double p : m.transition_row(s, a)) {
                CHECK(p >= 0.0);
                total += p;
            }
            CHECK(std::abs(total - 1.0) <= tol);
        }
    }
}

} // namespace

TEST_CASE("gridworld without slip is deterministic") {
    GridSpec spec;
    spec.slip = 0.0;
    const auto m = make_gridworld(spec);
    for (int s = 0; s < m.num_states(); ++s) {
        for (int a = 0; a < 4; ++a) {
            const auto row = m.transition_row(s, a);
            CHECK(std::ranges::count(row, 1.0) == 1);
            CHECK(std::ranges::count(row, 0.0) == m.num_states() - 1);
        }
    }
    // Corner (0,0): up bounces, right moves to cell 1.
    CHECK(m.prob(0, kUp, 0) == 1.0);
    CHECK(m.prob(0, kRight, 1) == 1.0);
    CHECK(m.initial()[0] == 1.0);
}

TEST_CASE("gridworld rewards and absorbing goal") {
    const auto m = make_gridworld({});
    const int goal = 15;
    for (int a = 0; a < 4; ++a) {
        CHECK(m.prob(goal, a, goal) == 1.0);
        CHECK(m.reward(goal, a) == 0.0);
    }
    // From the cell above the goal, moving down reaches it with 0.6.
    CHECK(m.reward(11, kDown) == doctest::Approx(-0.2 + 0.6));
    CHECK(m.reward(0, kUp) == doctest::Approx(-0.2));
    check_rows_normalized(m, 1e-12);
}

TEST_CASE("gridworld left-right reflection permutes dynamics") {
    GridSpec spec;
    spec.height = 3;
    spec.width = 4;
    spec.goal_cell = std::pair{1, 1};
    GridSpec mirrored = spec;
    mirrored.goal_cell = std::pair{1, 2};
    const auto a = make_gridworld(spec), b = make_gridworld(mirrored);
    auto reflect = [&](int s) { return (s / 4) * 4 + (3 - s % 4); };
    const int swap_action[4] = {kUp, kDown, kRight, kLeft};
    for (int s = 0; s < 12; ++s) {
        for (int act = 0; act < 4; ++act) {
            for (int t = 0; t < 12; ++t) {
                CHECK(a.prob(s, act, t) == b.prob(reflect(s), swap_action[act], reflect(t)));
            }
            CHECK(a.reward(s, act) == doctest::Approx(b.reward(reflect(s), swap_action[act])));
        }
    }
}

TEST_CASE("gridworld optimum agrees with enumeration on a 2x2 instance") {
    GridSpec spec;
    spec.height = 2;
    spec.width = 2;
    spec.horizon = 2;
    const auto m = make_gridworld(spec);
    CHECK(std::abs(value_iteration(m).value - oracle::enumerate_optimum(m)) <= 1e-12);
    const auto big = make_gridworld({});
    const double v = value_iteration(big).value;
    CHECK(v <= big.reward_max());
    CHECK(v >= big.reward_min());
}

TEST_CASE("riverswim structure") {
    const auto m = make_riverswim({});
    CHECK(m.num_states() == 6);
    CHECK(m.num_actions() == 2);
    CHECK(m.prob(3, 0, 2) == 1.0);
    CHECK(m.prob(0, 0, 0) == 1.0);
    CHECK(m.reward(0, 0) == 0.005);
    CHECK(m.reward(5, 1) == 1.0);
    CHECK(m.prob(2, 1, 3) == doctest::Approx(0.3));
    CHECK(m.prob(2, 1, 2) == doctest::Approx(0.6));
    CHECK(m.prob(2, 1, 1) == doctest::Approx(0.1));
    check_rows_normalized(m, 1e-12);
    RiverSwimSpec bad;
    bad.p_stay = 0.7;
    CHECK_THROWS(make_riverswim(bad));
}

TEST_CASE("riverswim optimal policy") {
    const auto m = make_riverswim({});
    const auto plan = value_iteration(m);
    for (int s = 0; s < 6; ++s) {
        CHECK(plan.policy.action(0, s) == 1);
    }
    // Among stationary policies, swimming right everywhere is the best.
    std::vector<int> best;
    oracle::enumerate_stationary_optimum(m, &best);
    CHECK(best == std::vector<int>(6, 1));
    CHECK(plan.value >= evaluate_policy_exact(m, StepPolicy::stationary(20, best)) - 1e-12);

    RiverSwimSpec small;
    small.chain_length = 3;
    small.horizon = 5;
    const auto r3 = make_riverswim(small);
    CHECK(std::abs(value_iteration(r3).value - oracle::enumerate_optimum(r3)) <= 1e-12);
}

TEST_CASE("riverswim deterministic chain has a closed-form optimum") {
    for (int H : {6, 9, 20}) {
        RiverSwimSpec spec;
        spec.p_advance = 1.0;
        spec.p_stay = 0.0;
        spec.p_back = 0.0;
        spec.first_advance = 1.0;
        spec.first_stay = 0.0;
        spec.last_stay = 1.0;
        spec.last_back = 0.0;
        spec.horizon = H;
        const auto m = make_riverswim(spec);
        const double expected = std::max(0.005 * H, (H - 5) * 1.0) / H;
        CHECK(value_iteration(m).value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("casinoland default") {
    const auto m = make_casinoland();
    CHECK(m.num_states() == 8);
    CHECK(m.num_actions() == 3);
    for (int s = 4; s < 8; ++s) {
        CHECK(m.reward(s, 2) == -100.0);
    }
    check_rows_normalized(m, 1e-12);

    const auto path = std::filesystem::temp_directory_path() / "gim_casino_test.json";
    save_env_file(m, path);
    const auto loaded = make_casinoland(path);
    CHECK(loaded == m);
    CHECK(dump_env(loaded) == dump_env(m));

    auto doc = mdp_to_json(m);
    doc["transitions"][0][0][0] = 5.0;
    {
        std::ofstream out(path);
        out << doc.dump();
    }
    CHECK_THROWS_AS(make_casinoland(path), SchemaError);
    std::filesystem::remove(path);
}

TEST_CASE("shipped casinoland file matches the built-in model") {
    const auto shipped = std::filesystem::path(GIM_SOURCE_DIR) / "data" / "casinoland.json";
    CHECK(make_casinoland(shipped) == make_casinoland());
}

TEST_CASE("synthetic generator") {
    SyntheticSpec spec;
    spec.seed = 0;
    const auto task = gen_synthetic(spec);
    const auto& m = task.mdp;
    CHECK(m.num_states() == 20);
    CHECK(m.num_actions() == 10);
    check_rows_normalized(m, 1e-9);
    REQUIRE(task.diagnostics.size() == 21);
    const auto dm = dynamic_matrices(m);
    for (int s = 0; s < 20; ++s) {
        CHECK(spectral_diagnostics(dm.transition_slices[s]).numerical_rank <= 2);
        CHECK(task.diagnostics[s].numerical_rank <= 2);
    }
    CHECK(dm.reward_slice.minCoeff() >= 0.0);
    CHECK(dm.reward_slice.maxCoeff() <= 1.0);
    CHECK(gen_synthetic(spec).mdp == m);
    spec.seed = 1;
    CHECK(!(gen_synthetic(spec).mdp == m));
    spec.target_rank = 11;
    CHECK_THROWS(gen_synthetic(spec));
}

TEST_CASE("synthetic rank-2 condition numbers are small") {
    std::vector<double> kappas;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SyntheticSpec spec;
        spec.seed = seed;
        const auto task = gen_synthetic(spec);
        for (int s = 0; s < 20; ++s) {
            kappas.push_back(task.diagnostics[s].kappa);
        }
    }
    std::ranges::nth_element(kappas, kappas.begin() + kappas.size() / 2);
    CHECK(kappas[kappas.size() / 2] < 4.0);
}

TEST_CASE("synthetic target condition number is approached") {
    SyntheticSpec spec;
    spec.seed = 3;
    spec.target_condition_number = 6.0;
    const auto task = gen_synthetic(spec);
    std::vector<double> kappas;
    for (int s = 0; s < 20; ++s) {
        kappas.push_back(task.diagnostics[s].kappa);
    }
    std::ranges::sort(kappas);
    const double median = kappas[10];
    CHECK(median > 3.0);
}
