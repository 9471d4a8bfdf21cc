#include "gim/errors.hpp"
#include "gim/estimation.hpp"
#include "gim/rng.hpp"

#include <doctest.h>

#include <sstream>

using namespace gim;

TEST_CASE("record_transition bookkeeping") {
    VisitCounts c(3, 2);
    c.record(0, 0, 1, 0.5);
    CHECK(c.visits(0, 0) == 1);
    CHECK(c.transitions(0, 0, 1) == 1);
    CHECK(c.total_reward(0, 0) == 0.5);
    c.record(2, 1, 0, -0.2);
    c.record(2, 1, 0, -0.2);
    CHECK(c.total_reward(2, 1) == doctest::Approx(-0.4));
    CHECK_THROWS_AS(c.record(3, 0, 0, 0.0), IndexError);
    CHECK_THROWS_AS(c.record(0, 2, 0, 0.0), IndexError);
    CHECK_THROWS_AS(c.record(0, 0, -1, 0.0), IndexError);

    RngStream rng(4);
    VisitCounts d(4, 3);
    for (int i = 0; i < 500; ++i) {
        d.record(rng.uniform_int(4), rng.uniform_int(3), rng.uniform_int(4), rng.uniform());
    }
    for (int s = 0; s < 4; ++s) {
        for (int a = 0; a < 3; ++a) {
            long long total = 0;
            for (int t = 0; t < 4; ++t) {
                total += d.transitions(s, a, t);
            }
            CHECK(total == d.visits(s, a));
        }
    }
}

TEST_CASE("empirical model ratios and unvisited flag") {
    VisitCounts c(3, 1);
    for (int i = 0; i < 3; ++i) {
        c.record(0, 0, 1, 1.0);
    }
    for (int i = 0; i < 7; ++i) {
        c.record(0, 0, 2, 0.0);
    }
    const auto em = empirical_model(c);
    CHECK(em.matrices.transition_slices[1](0, 0) == doctest::Approx(0.3));
    CHECK(em.matrices.reward_slice(0, 0) == doctest::Approx(0.3));
    CHECK(em.unvisited(1, 0));
    CHECK(!em.unvisited(0, 0));
    for (int s = 0; s < 3; ++s) {
        CHECK(em.matrices.transition_slices[s](1, 0) == 0.0);
    }

    SUBCASE("doubling counts leaves the estimate unchanged") {
        VisitCounts d(3, 1);
        for (int i = 0; i < 6; ++i) {
            d.record(0, 0, 1, 1.0);
        }
        for (int i = 0; i < 14; ++i) {
            d.record(0, 0, 2, 0.0);
        }
        const auto e2 = empirical_model(d);
        for (int s = 0; s < 3; ++s) {
            CHECK(e2.matrices.transition_slices[s](0, 0) ==
                  doctest::Approx(em.matrices.transition_slices[s](0, 0)).epsilon(1e-15));
        }
    }
}

TEST_CASE("empirical estimate of a known distribution") {
    RngStream rng(77);
    const std::vector<double> p{0.6, 0.3, 0.1};
    VisitCounts c(3, 1);
    for (int i = 0; i < 10000; ++i) {
        c.record(0, 0, rng.categorical(p), 0.0);
    }
    const auto em = empirical_model(c);
    double l1 = 0.0, total = 0.0;
    for (int s = 0; s < 3; ++s) {
        l1 += std::abs(em.matrices.transition_slices[s](0, 0) - p[s]);
        total += em.matrices.transition_slices[s](0, 0);
    }
    CHECK(l1 < 0.05);
    CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("knownness mask") {
    VisitCounts c(3, 2);
    auto m = knownness_mask(c, 5);
    CHECK(m.known_pairs() == 0);
    CHECK(m.known_fraction() == 0.0);
    for (int i = 0; i < 5; ++i) {
        c.record(0, 0, 0, 0.0);
        c.record(1, 0, 0, 0.0);
    }
    for (int i = 0; i < 4; ++i) {
        c.record(1, 1, 0, 0.0);
    }
    m = knownness_mask(c, 5);
    CHECK(m.mask(0, 0) == 1);
    CHECK(m.mask(1, 1) == 0);
    CHECK(m.known_pairs() == 2);
    CHECK(m.row_sums()(0) == 1);
    CHECK(m.row_sums()(1) == 1);
    CHECK(m.col_sums()(0) == 2);
    CHECK(m.col_sums()(1) == 0);
    CHECK(m.known_fraction() == doctest::Approx(2.0 / 6.0));
    // Antitone in m.
    const auto lower = knownness_mask(c, 4);
    CHECK(((lower.mask - m.mask).array() >= 0).all());
    CHECK_THROWS_AS(knownness_mask(c, 0), ParamError);
}

TEST_CASE("rho-known states") {
    KnownnessMask mask{Eigen::MatrixXi::Zero(2, 10), 1};
    mask.mask.row(0).head(8).setOnes();
    mask.mask.row(1).head(7).setOnes();
    CHECK(is_rho_known(mask, 0, 0.8));
    CHECK(!is_rho_known(mask, 1, 0.8));
    CHECK(!is_rho_known(mask, 0, 1.0));
    mask.mask.row(0).setOnes();
    CHECK(is_rho_known(mask, 0, 1.0));
    CHECK_THROWS_AS(is_rho_known(mask, 0, 0.0), ParamError);
    CHECK_THROWS_AS(is_rho_known(mask, 0, 1.5), ParamError);
    CHECK(rho_known_actions(10, 0.8) == 8);
    CHECK(rho_known_actions(10, 0.75) == 8);
    CHECK(rho_known_actions(3, 0.5) == 2);
}

TEST_CASE("count dumps") {
    VisitCounts c(2, 1);
    c.record(0, 0, 1, 0.25);
    std::ostringstream t, r;
    write_transition_counts_csv(c, t);
    write_reward_counts_csv(c, r);
    CHECK(t.str().find("s,a,s',count") == 0);
    CHECK(t.str().find("0,0,1,1") != std::string::npos);
    CHECK(r.str().find("s,a,total_reward,visits") == 0);
    CHECK(r.str().find("0,0,0.25,1") != std::string::npos);
}
