#include "doctest.h"
#include "eqrl/statistics.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace eqrl;

namespace {

EmpiricalStats stats_from_counts(std::size_t S, std::size_t A, const std::vector<std::vector<std::uint64_t>>& counts) {
    EmpiricalStats stats(S, A);
    for (PairIndex p = 0; p < counts.size(); ++p)
        for (std::size_t x = 0; x < S; ++x)
            for (std::uint64_t i = 0; i < counts[p][x]; ++i) stats.record(p / A, p % A, 0.5, x);
    return stats;
}

}  // namespace

TEST_CASE("weissman radius matches high-precision values") {
    // references from 40-digit evaluation of the closed form
    CHECK(weissman_laplace(1, 0.05, 2) == doctest::Approx(4.017687416608668).epsilon(1e-14));
    CHECK(weissman_laplace(100, 0.05, 50) == doctest::Approx(0.8984459702794777).epsilon(1e-14));
    CHECK(weissman_laplace(1, 0.05, 2) == doctest::Approx(std::sqrt(4.0 * std::log(std::sqrt(2.0) * 2.0 / 0.05))));
    CHECK(std::isfinite(weissman_laplace(10, 0.05, 5000)));
}

TEST_CASE("weissman radius shrinks and rejects degenerate input") {
    for (std::uint64_t n : {1u, 3u, 10u, 1000u}) CHECK(weissman_laplace(4 * n, 0.1, 7) < weissman_laplace(n, 0.1, 7));
    double prev = weissman_laplace(1, 0.05, 4);
    for (std::uint64_t n = 2; n < 2000; ++n) {
        const double w = weissman_laplace(n, 0.05, 4);
        CHECK(w < prev);
        prev = w;
    }
    CHECK_THROWS_AS(weissman_laplace(0, 0.05, 3), std::domain_error);
    CHECK_THROWS_AS(weissman_laplace(5, 0.05, 1), std::domain_error);
    CHECK_THROWS_AS(weissman_laplace(5, 1.0, 3), std::domain_error);
    CHECK_THROWS_AS(weissman_laplace(5, 0.0, 3), std::domain_error);
}

TEST_CASE("hoeffding radius") {
    CHECK(hoeffding_laplace(1, 0.1) == doctest::Approx(1.627623630718729).epsilon(1e-14));
    for (std::uint64_t n = 1; n < 500; ++n) CHECK(hoeffding_laplace(n + 1, 0.05) < hoeffding_laplace(n, 0.05));
    CHECK(hoeffding_laplace(20, 0.01) > hoeffding_laplace(20, 0.1));
    CHECK_THROWS_AS(hoeffding_laplace(0, 0.1), std::domain_error);
}

TEST_CASE("profile maps") {
    const std::vector<double> a{0.5, 0.3, 0.2}, b{0.2, 0.5, 0.3}, c{0.5, 0.5};
    CHECK(profile_map(a) == Profile{0, 1, 2});
    CHECK(profile_map(b) == Profile{1, 2, 0});
    CHECK(profile_map(c) == Profile{0, 1});
    CHECK(apply_profile(b, profile_map(b)) == std::vector<double>{0.5, 0.3, 0.2});
    CHECK(unapply_profile(apply_profile(b, profile_map(b)), profile_map(b)) == b);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        auto d = oracle::random_distribution(rng, 1 + rng() % 12);
        if (i % 3 == 0) d[0] = d.back();  // force ties
        const auto sorted = apply_profile(d, profile_map(d));
        for (std::size_t k = 1; k < sorted.size(); ++k) CHECK(sorted[k - 1] >= sorted[k]);
    }
}

TEST_CASE("sorted l1") {
    const std::vector<double> p{0.7, 0.3}, q{0.3, 0.7};
    CHECK(sorted_l1(p, q) == 0.0);
    CHECK(sorted_l1(p, p) == 0.0);
    CHECK(l1_distance(p, q) == doctest::Approx(0.8));
    CHECK_THROWS_AS(sorted_l1(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("sorted l1 never exceeds l1 (small sample)") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng() % 20;
        const auto p = oracle::random_distribution(rng, n), q = oracle::random_distribution(rng, n);
        CHECK(sorted_l1(p, q) <= l1_distance(p, q) + 1e-12);
    }
}

TEST_CASE("empirical statistics bookkeeping") {
    EmpiricalStats stats(3, 2);
    stats.record(1, 0, 1.0, 2);
    stats.record(1, 0, 0.0, 2);
    stats.record(1, 0, 1.0, 0);
    const PairIndex p = stats.pair(1, 0);
    CHECK(stats.visits(p) == 3);
    CHECK(stats.total_visits() == 3);
    CHECK(stats.reward_sum(p) == 2.0);
    CHECK(stats.mean_reward_estimate(p) == doctest::Approx(2.0 / 3.0));
    const auto row = stats.transition_estimate(p);
    CHECK(row[0] == doctest::Approx(1.0 / 3.0));
    CHECK(row[2] == doctest::Approx(2.0 / 3.0));
    std::uint64_t total = 0;
    for (auto c : stats.next_counts(p)) total += c;
    CHECK(total == stats.visits(p));
    CHECK_FALSE(stats.visited(0));
    CHECK_THROWS_AS(stats.transition_estimate(0), std::domain_error);
    CHECK_THROWS_AS(stats.mean_reward_estimate(0), std::domain_error);
    CHECK_THROWS_AS(stats.record(3, 0, 0.0, 0), std::out_of_range);
}

TEST_CASE("aggregation through profiles") {
    SUBCASE("opposite point masses collapse") {
        const auto stats = stats_from_counts(2, 1, {{1, 0}, {0, 1}});
        const std::vector<PairIndex> members{0, 1};
        const auto agg = aggregate_cluster(members, stats, empirical_profiles(stats));
        CHECK(agg.count == 2);
        CHECK(agg.aggregate == std::vector<double>{1.0, 0.0});
    }
    SUBCASE("single member is its own sorted row") {
        const auto stats = stats_from_counts(3, 1, {{1, 3, 0}, {0, 0, 0}, {0, 0, 0}});
        const std::vector<PairIndex> members{0, 1};
        const auto agg = aggregate_cluster(members, stats, empirical_profiles(stats));
        CHECK(agg.aggregate[0] == doctest::Approx(0.75));
        CHECK(agg.aggregate[1] == doctest::Approx(0.25));
        CHECK(agg.aggregate[2] == 0.0);
        CHECK(agg.size() == 2);
    }
    SUBCASE("weights 3:1") {
        // rows [0.8,0.2] (N=30) and [0.4,0.6] (N=10, sorts to [0.6,0.4]):
        // (30*0.8 + 10*0.6)/40 = 0.75
        const auto stats = stats_from_counts(2, 1, {{24, 6}, {4, 6}});
        const std::vector<PairIndex> members{0, 1};
        const auto agg = aggregate_cluster(members, stats, empirical_profiles(stats));
        CHECK(agg.count == 40);
        CHECK(agg.aggregate[0] == doctest::Approx(0.75));
        CHECK(agg.aggregate[1] == doctest::Approx(0.25));
    }
    SUBCASE("identical members") {
        const auto stats = stats_from_counts(3, 2, {{5, 2, 3}, {2, 3, 5}, {3, 5, 2}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
        const std::vector<PairIndex> members{0, 1, 2};
        const auto agg = aggregate_cluster(members, stats, empirical_profiles(stats));
        CHECK(agg.aggregate[0] == doctest::Approx(0.5));
        CHECK(agg.aggregate[1] == doctest::Approx(0.3));
        CHECK(agg.aggregate[2] == doctest::Approx(0.2));
    }
    SUBCASE("all members unvisited") {
        const EmpiricalStats stats(2, 2);
        const std::vector<PairIndex> members{0, 1};
        CHECK_THROWS_AS(aggregate_cluster(members, stats, empirical_profiles(stats)), std::domain_error);
    }
}

TEST_CASE("radius regimes") {
    const auto stats = stats_from_counts(2, 2, {{1, 0}, {2, 1}, {0, 0}, {4, 4}});
    RadiusSpec spec;
    spec.delta = 0.05;
    spec.num_states = 2;
    spec.num_pairs = 4;
    spec.num_classes = 2;

    SUBCASE("weighted estimated form, counts (1,3)") {
        spec.regime = Regime::estimated_classes;
        const std::vector<PairIndex> members{0, 1};
        const Radii r = radius_for(members, stats, spec);
        CHECK(r.transition == doctest::Approx(2.862513932208021).epsilon(1e-13));
        CHECK(r.reward == doctest::Approx(1.340123876536805).epsilon(1e-13));
    }
    SUBCASE("pooled estimated form uses delta/(3SA) at n(c)") {
        spec.regime = Regime::estimated_classes;
        spec.estimated = EstimatedRadius::pooled;
        const std::vector<PairIndex> members{0, 1};
        CHECK(radius_for(members, stats, spec).transition == weissman_laplace(4, 0.05 / 12.0, 2));
    }
    SUBCASE("singleton equals the per-pair radius at the regime split") {
        const std::vector<PairIndex> one{3};
        for (Regime g : {Regime::known_classes_profiles, Regime::known_classes_only, Regime::estimated_classes}) {
            spec.regime = g;
            CHECK(radius_for(one, stats, spec).transition == doctest::Approx(weissman_laplace(8, spec.split_delta(), 2)));
        }
        spec.regime = Regime::per_pair;
        CHECK(radius_for(one, stats, spec).transition == weissman_laplace(8, 0.05 / 4.0, 2));
        CHECK(radius_for(one, stats, spec).reward == hoeffding_laplace(8, 0.05 / 4.0));
    }
    SUBCASE("pooled known-class radius beats the per-pair one") {
        spec.regime = Regime::known_classes_profiles;
        const std::vector<PairIndex> members{1, 3};  // N = 3 and 8
        CHECK(radius_for(members, stats, spec).transition == weissman_laplace(11, 0.025, 2));
        CHECK(weissman_laplace(11, 0.025, 2) < weissman_laplace(3, 0.0125, 2));
    }
    SUBCASE("unvisited members contribute nothing") {
        spec.regime = Regime::known_classes_only;
        const std::vector<PairIndex> with{1, 2}, without{1};
        CHECK(radius_for(with, stats, spec).transition == radius_for(without, stats, spec).transition);
    }
    SUBCASE("errors") {
        spec.regime = Regime::known_classes_only;
        const std::vector<PairIndex> empty_count{2};
        CHECK_THROWS_AS(radius_for(empty_count, stats, spec), std::domain_error);
        spec.regime = Regime::per_pair;
        const std::vector<PairIndex> two{0, 1};
        CHECK_THROWS_AS(radius_for(two, stats, spec), std::invalid_argument);
    }
}

TEST_CASE("radius never grows with a member's count") {
    RadiusSpec spec;
    spec.num_states = 3;
    spec.num_pairs = 6;
    spec.num_classes = 2;
    for (Regime g : {Regime::known_classes_profiles, Regime::known_classes_only, Regime::estimated_classes}) {
        spec.regime = g;
        EmpiricalStats stats(3, 2);
        for (int i = 0; i < 5; ++i) {
            stats.record(0, 0, 0.0, 1);
            stats.record(0, 1, 0.0, i % 2);
        }
        const std::vector<PairIndex> members{0, 1};
        double prev = radius_for(members, stats, spec).transition;
        for (int i = 0; i < 200; ++i) {
            stats.record(0, 1, 0.0, i % 3);
            const double r = radius_for(members, stats, spec).transition;
            CHECK(r <= prev + 1e-15);
            prev = r;
        }
    }
}
