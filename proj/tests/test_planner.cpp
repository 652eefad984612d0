#include "doctest.h"
#include "eqrl/env.hpp"
#include "eqrl/planner.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace eqrl;

namespace {

double dot(const std::vector<double>& q, const std::vector<double>& v) {
    return std::inner_product(q.begin(), q.end(), v.begin(), 0.0);
}

OptimisticModel true_model(const Mdp& mdp, double radius, double epsilon) {
    OptimisticModel m(mdp.num_states(), mdp.num_actions());
    for (PairIndex p = 0; p < mdp.num_pairs(); ++p) {
        const auto row = mdp.transition(p);
        std::copy(row.begin(), row.end(), m.center(p).begin());
        m.radii[p] = radius;
        m.rewards[p] = mdp.mean_reward(p);
    }
    m.epsilon = epsilon;
    return m;
}

}  // namespace

TEST_CASE("inner max examples") {
    const std::vector<double> center{0.5, 0.5}, values{1.0, 0.0};
    CHECK(l1_inner_max(center, 0.0, values) == center);
    const auto q = l1_inner_max(center, 0.2, values);
    CHECK(q[0] == doctest::Approx(0.6));
    CHECK(q[1] == doctest::Approx(0.4));
    CHECK(dot(q, values) >= oracle::grid_inner_max(center, 0.2, values, 1000) - 1e-12);

    const std::vector<double> c3{0.2, 0.3, 0.5}, v3{0.1, 0.9, 0.4};
    const auto point = l1_inner_max(c3, 2.0, v3);
    CHECK(point[0] == doctest::Approx(0.0));
    CHECK(point[1] == doctest::Approx(1.0));
    CHECK(point[2] == doctest::Approx(0.0));
    CHECK_THROWS_AS(l1_inner_max(c3, -0.1, v3), std::invalid_argument);
    CHECK_THROWS_AS(l1_inner_max(c3, 0.1, values), std::invalid_argument);
}

TEST_CASE("inner max drains the lowest values first") {
    const std::vector<double> c{0.25, 0.25, 0.25, 0.25}, v{3.0, 0.0, 2.0, 1.0};
    const auto q = l1_inner_max(c, 0.8, v);
    CHECK(q[0] == doctest::Approx(0.65));
    CHECK(q[1] == doctest::Approx(0.0));
    CHECK(q[3] == doctest::Approx(0.1));
    CHECK(q[2] == doctest::Approx(0.25));
}

TEST_CASE("inner max output stays feasible") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const std::size_t S = 1 + rng() % 8;
        auto c = oracle::random_distribution(rng, S);
        if (i % 4 == 0) c[rng() % S] = 0.0;
        const double total = std::accumulate(c.begin(), c.end(), 0.0);
        if (total == 0.0) continue;
        for (double& x : c) x /= total;
        std::vector<double> v(S);
        for (double& x : v) x = std::floor(u(rng) * 4.0);  // frequent ties
        const double r = 2.5 * u(rng);
        const auto q = l1_inner_max(c, r, v);
        double sum = 0.0, dist = 0.0;
        for (std::size_t x = 0; x < S; ++x) {
            CHECK(q[x] >= 0.0);
            sum += q[x];
            dist += std::abs(q[x] - c[x]);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        CHECK(dist <= r + 1e-12);
        CHECK(dot(q, v) >= dot(c, v) - 1e-12);
    }
}

TEST_CASE("evi with zero radii is value iteration") {
    const Environment env = build_riverswim(8, true);
    const double eps = 1e-8;
    const EviResult res = extended_value_iteration(true_model(env.mdp, 0.0, eps));
    const GainSolution g = optimal_gain(env.mdp, 1e-10);
    CHECK(std::abs(res.gain - g.gain) <= eps + 1e-10);
    CHECK(res.policy.size() == 8);
    for (double inc : res.last_increment) CHECK(std::abs(inc - res.gain) <= eps);
    CHECK(*std::min_element(res.values.begin(), res.values.end()) == 0.0);
}

TEST_CASE("evi saturates with huge radii") {
    const Environment env = build_riverswim(6, false);
    OptimisticModel m = true_model(env.mdp, 2.0, 1e-6);
    for (PairIndex p = 0; p < env.mdp.num_pairs(); ++p) m.bonuses[p] = 1.0;
    CHECK(extended_value_iteration(m).gain == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("evi is optimistic and grows with the radius") {
    const Environment env = build_riverswim(10, true);
    const double g_star = optimal_gain(env.mdp).gain;
    double prev = -1.0;
    for (double r : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0}) {
        const double g = extended_value_iteration(true_model(env.mdp, r, 1e-7)).gain;
        CHECK(g >= g_star - 1e-7);
        CHECK(g >= prev - 2e-7);
        prev = g;
    }
}

TEST_CASE("evi against extreme points and policy enumeration") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t S = 3, A = 2;
        OptimisticModel m(S, A);
        std::vector<std::vector<oracle::Choice>> choices(S);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const PairIndex p = s * A + a;
                const auto c = oracle::random_distribution(rng, S);
                std::copy(c.begin(), c.end(), m.center(p).begin());
                m.radii[p] = 0.1;
                m.rewards[p] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                for (const auto& q : oracle::l1_ball_vertices(c, 0.1)) choices[s].push_back({q, m.rewards[p]});
            }
        m.epsilon = 1e-7;
        const double expected = oracle::enumerate_policies(choices, 0);
        CHECK(std::abs(extended_value_iteration(m).gain - expected) <= 1e-3);
    }
}

TEST_CASE("evi iteration cap and validation") {
    const Environment env = build_riverswim(25, true);
    OptimisticModel m = true_model(env.mdp, 0.0, 1e-12);
    m.max_iterations = 2;
    CHECK_THROWS_AS(extended_value_iteration(m), EviDivergence);
    OptimisticModel bad = true_model(env.mdp, 0.0, 1e-6);
    bad.radii[0] = -1.0;
    CHECK_THROWS_AS(extended_value_iteration(bad), std::invalid_argument);
    OptimisticModel bad_row = true_model(env.mdp, 0.0, 1e-6);
    bad_row.center(0)[0] += 0.5;
    CHECK_THROWS_AS(extended_value_iteration(bad_row), std::invalid_argument);
}
