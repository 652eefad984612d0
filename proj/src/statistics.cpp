#include "eqrl/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eqrl {

Profile profile_map(std::span<const double> dist) {
    Profile order(dist.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    return order;
}

std::vector<double> sorted_descending(std::span<const double> dist) {
    std::vector<double> out(dist.begin(), dist.end());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

std::vector<double> apply_profile(std::span<const double> dist, const Profile& profile) {
    if (profile.size() != dist.size()) throw std::invalid_argument("apply_profile: size mismatch");
    std::vector<double> out(dist.size());
    for (std::size_t rank = 0; rank < profile.size(); ++rank) out[rank] = dist[profile[rank]];
    return out;
}

std::vector<double> unapply_profile(std::span<const double> ranked, const Profile& profile) {
    if (profile.size() != ranked.size()) throw std::invalid_argument("unapply_profile: size mismatch");
    std::vector<double> out(ranked.size());
    for (std::size_t rank = 0; rank < profile.size(); ++rank) out[profile[rank]] = ranked[rank];
    return out;
}

double l1_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("l1_distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return d;
}

double sorted_l1(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("sorted_l1: dimension mismatch");
    return l1_distance(sorted_descending(p), sorted_descending(q));
}

double weissman_laplace(std::uint64_t n, double delta, std::size_t num_states) {
    if (n == 0) throw std::domain_error("weissman_laplace: n must be positive");
    if (num_states < 2) throw std::domain_error("weissman_laplace: bound degenerate for S < 2");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("weissman_laplace: delta must lie in (0,1)");
    const double nd = static_cast<double>(n);
    const double s = static_cast<double>(num_states);
    // log(2^S - 2) = S log 2 + log(1 - 2^(1-S))
    const double log_outcomes = s * std::log(2.0) + std::log1p(-std::exp2(1.0 - s));
    const double log_term = 0.5 * std::log1p(nd) + log_outcomes - std::log(delta);
    return std::sqrt(2.0 * (1.0 + 1.0 / nd) * log_term / nd);
}

double hoeffding_laplace(std::uint64_t n, double delta) {
    if (n == 0) throw std::domain_error("hoeffding_laplace: n must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("hoeffding_laplace: delta must lie in (0,1)");
    const double nd = static_cast<double>(n);
    const double log_term = 0.5 * std::log1p(nd) - std::log(delta);
    return std::sqrt((1.0 + 1.0 / nd) * log_term / (2.0 * nd));
}

EmpiricalStats::EmpiricalStats(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      visits_(num_states * num_actions, 0),
      next_counts_(num_states * num_actions * num_states, 0),
      reward_sums_(num_states * num_actions, 0.0) {
    if (num_states == 0 || num_actions == 0) throw std::invalid_argument("EmpiricalStats: empty state or action space");
}

void EmpiricalStats::record(std::size_t state, std::size_t action, double reward, std::size_t next_state) {
    if (state >= num_states_ || action >= num_actions_ || next_state >= num_states_)
        throw std::out_of_range("EmpiricalStats::record: index out of range");
    const PairIndex p = pair(state, action);
    ++visits_[p];
    ++next_counts_[p * num_states_ + next_state];
    reward_sums_[p] += reward;
    ++total_;
}

std::span<const std::uint64_t> EmpiricalStats::next_counts(PairIndex p) const {
    if (p >= num_pairs()) throw std::out_of_range("EmpiricalStats::next_counts: pair out of range");
    return std::span<const std::uint64_t>(next_counts_).subspan(p * num_states_, num_states_);
}

std::uint64_t EmpiricalStats::visits(std::span<const PairIndex> members) const {
    std::uint64_t n = 0;
    for (PairIndex p : members) n += visits_.at(p);
    return n;
}

std::vector<double> EmpiricalStats::transition_estimate(PairIndex p) const {
    const std::uint64_t n = visits(p);
    if (n == 0) throw std::domain_error("transition estimate requested for unvisited pair " + std::to_string(p));
    const auto counts = next_counts(p);
    std::vector<double> row(num_states_);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t x = 0; x < num_states_; ++x) row[x] = static_cast<double>(counts[x]) * inv;
    return row;
}

double EmpiricalStats::mean_reward_estimate(PairIndex p) const {
    const std::uint64_t n = visits(p);
    if (n == 0) throw std::domain_error("reward estimate requested for unvisited pair " + std::to_string(p));
    return reward_sums_[p] / static_cast<double>(n);
}

std::vector<Profile> empirical_profiles(const EmpiricalStats& stats) {
    std::vector<Profile> profiles(stats.num_pairs());
    for (PairIndex p = 0; p < stats.num_pairs(); ++p) {
        if (stats.visited(p)) {
            profiles[p] = profile_map(stats.transition_estimate(p));
        } else {
            profiles[p].resize(stats.num_states());
            std::iota(profiles[p].begin(), profiles[p].end(), std::size_t{0});
        }
    }
    return profiles;
}

ClusterStats aggregate_cluster(std::span<const PairIndex> members, const EmpiricalStats& stats,
                               std::span<const Profile> profiles) {
    if (profiles.size() != stats.num_pairs()) throw std::invalid_argument("aggregate_cluster: one profile per pair expected");
    ClusterStats out;
    out.members.assign(members.begin(), members.end());
    out.count = stats.visits(members);
    if (out.count == 0) throw std::domain_error("aggregate_cluster: every member is unvisited");

    const std::size_t S = stats.num_states();
    out.aggregate.assign(S, 0.0);
    double reward_sum = 0.0;
    for (PairIndex p : members) {
        if (!stats.visited(p)) continue;
        const auto counts = stats.next_counts(p);
        const Profile& profile = profiles[p];
        // N(s,a) p_hat(sigma(x)|s,a) is just the raw count at sigma(x)
        for (std::size_t rank = 0; rank < S; ++rank) out.aggregate[rank] += static_cast<double>(counts[profile[rank]]);
        reward_sum += stats.reward_sum(p);
    }
    const double inv = 1.0 / static_cast<double>(out.count);
    for (double& v : out.aggregate) v *= inv;
    out.mean_reward = reward_sum * inv;
    return out;
}

double RadiusSpec::split_delta() const {
    switch (regime) {
        case Regime::per_pair:
            return delta / static_cast<double>(num_pairs);
        case Regime::known_classes_profiles:
        case Regime::known_classes_only:
            return delta / static_cast<double>(num_classes);
        case Regime::estimated_classes:
            return estimated == EstimatedRadius::pooled ? delta / (3.0 * static_cast<double>(num_pairs))
                                                        : delta / static_cast<double>(num_pairs);
    }
    throw std::invalid_argument("RadiusSpec: unknown regime");
}

Radii radius_for(std::span<const PairIndex> members, const EmpiricalStats& stats, const RadiusSpec& spec) {
    if (members.empty()) throw std::invalid_argument("radius_for: empty target");
    if (spec.num_pairs == 0 || spec.num_states == 0) throw std::invalid_argument("radius_for: spec dimensions unset");
    const bool known = spec.regime == Regime::known_classes_profiles || spec.regime == Regime::known_classes_only;
    if (known && spec.num_classes == 0) throw std::invalid_argument("radius_for: class count unset");
    if (spec.regime == Regime::per_pair && members.size() != 1)
        throw std::invalid_argument("radius_for: per-pair regime takes a single pair");

    const double d = spec.split_delta();
    const std::uint64_t n = stats.visits(members);
    if (n == 0) throw std::domain_error("radius_for: target has no visits");

    const bool pooled = spec.regime == Regime::per_pair || spec.regime == Regime::known_classes_profiles ||
                        (spec.regime == Regime::estimated_classes && spec.estimated == EstimatedRadius::pooled);
    // a single next state leaves nothing to estimate
    const bool trivial = spec.num_states == 1;
    if (pooled) return {trivial ? 0.0 : weissman_laplace(n, d, spec.num_states), hoeffding_laplace(n, d)};

    Radii r;
    for (PairIndex p : members) {
        const std::uint64_t np = stats.visits(p);
        if (np == 0) continue;
        const double w = static_cast<double>(np);
        if (!trivial) r.transition += w * weissman_laplace(np, d, spec.num_states);
        r.reward += w * hoeffding_laplace(np, d);
    }
    r.transition /= static_cast<double>(n);
    r.reward /= static_cast<double>(n);
    return r;
}

}  // namespace eqrl
