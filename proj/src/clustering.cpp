#include "eqrl/clustering.hpp"

#include <algorithm>
#include <stdexcept>

namespace eqrl {

namespace {

// with one state every row is the same point mass
double transition_radius(std::uint64_t n, double delta, std::size_t num_states) {
    return num_states < 2 ? 0.0 : weissman_laplace(n, delta, num_states);
}

}  // namespace

ApproxEquivalence::ApproxEquivalence(const EmpiricalStats& stats, ClusteringOptions options)
    : stats_(stats), options_(options), profiles_(empirical_profiles(stats)), pair_radius_(stats.num_pairs(), 0.0) {
    if (!(options_.alpha >= 1.0)) throw std::invalid_argument("ApproxEquivalence: alpha must be >= 1");
    if (!(options_.delta > 0.0 && options_.delta < 1.0)) throw std::invalid_argument("ApproxEquivalence: delta must lie in (0,1)");
    const double pairs = static_cast<double>(stats.num_pairs());
    split_delta_ = options_.radius == EstimatedRadius::pooled ? options_.delta / (3.0 * pairs) : options_.delta / pairs;
    for (PairIndex p = 0; p < stats.num_pairs(); ++p)
        if (stats.visited(p)) pair_radius_[p] = transition_radius(stats.visits(p), split_delta_, stats.num_states());

    const std::size_t SA = stats.num_pairs();
    singletons_.reserve(SA);
    for (PairIndex p = 0; p < SA; ++p) singletons_.push_back(make_cluster(p, std::span<const PairIndex>(&p, 1)));
    singleton_distance_.assign(SA * SA, 0.0);
    for (PairIndex a = 0; a < SA; ++a) {
        if (!stats.visited(a)) continue;
        for (PairIndex b = a + 1; b < SA; ++b) {
            if (!stats.visited(b)) continue;
            const double d = lower_conf_distance(singletons_[a], singletons_[b]).value;
            singleton_distance_[a * SA + b] = singleton_distance_[b * SA + a] = d;
        }
    }
}

Cluster ApproxEquivalence::make_cluster(std::size_t id, std::span<const PairIndex> members) const {
    Cluster c;
    c.id = id;
    if (stats_.visits(members) == 0) {
        c.stats.members.assign(members.begin(), members.end());
        return c;
    }
    c.stats = aggregate_cluster(members, stats_, profiles_);
    if (options_.radius == EstimatedRadius::pooled) {
        c.radius = transition_radius(c.stats.count, split_delta_, stats_.num_states());
    } else {
        double weighted = 0.0;
        for (PairIndex p : members) weighted += static_cast<double>(stats_.visits(p)) * pair_radius_[p];
        c.radius = weighted / static_cast<double>(c.stats.count);
    }
    return c;
}

DistanceReport ApproxEquivalence::lower_conf_distance(const Cluster& u, const Cluster& v) const {
    if (u.count() == 0 || v.count() == 0) throw std::domain_error("lower_conf_distance: cluster without visits");
    DistanceReport r;
    r.raw = sorted_l1(u.stats.aggregate, v.stats.aggregate);
    r.eps_u = u.radius;
    r.eps_v = v.radius;
    r.value = r.raw - r.eps_u - r.eps_v;
    return r;
}

double ApproxEquivalence::singleton_distance(PairIndex a, PairIndex b) const {
    return singleton_distance_[a * stats_.num_pairs() + b];
}

std::vector<std::size_t> ApproxEquivalence::pac_neighbors(const Cluster& c, std::span<const Cluster> clusters) const {
    std::vector<std::size_t> out;
    if (c.count() == 0) return out;
    for (const Cluster& other : clusters) {
        if (other.id == c.id || other.count() == 0) continue;
        // (i) aggregates
        if (lower_conf_distance(c, other).value > 0.0) continue;
        // (ii) every cross pair of visited members
        bool ok = true;
        for (PairIndex j : c.stats.members) {
            if (!stats_.visited(j)) continue;
            for (PairIndex k : other.stats.members) {
                if (!stats_.visited(k)) continue;
                if (singleton_distance(j, k) > 0.0) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (!ok) continue;
        // (iii) every member against the hypothetical merge
        std::vector<PairIndex> merged = c.stats.members;
        merged.insert(merged.end(), other.stats.members.begin(), other.stats.members.end());
        const Cluster both = make_cluster(c.id, merged);
        for (PairIndex j : merged) {
            if (!stats_.visited(j)) continue;
            if (lower_conf_distance(singleton(j), both).value > 0.0) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(other.id);
    }
    return out;
}

std::optional<std::size_t> ApproxEquivalence::nearest_neighbor(const Cluster& c, std::span<const Cluster> clusters) const {
    const auto neighbors = pac_neighbors(c, clusters);
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (const Cluster& other : clusters) {
        if (std::find(neighbors.begin(), neighbors.end(), other.id) == neighbors.end()) continue;
        const double d = lower_conf_distance(c, other).value;
        if (!best || d < best_value || (d == best_value && other.id < *best)) {
            best = other.id;
            best_value = d;
        }
    }
    return best;
}

ClusteringResult ApproxEquivalence::run() const {
    const std::size_t SA = stats_.num_pairs();
    std::vector<Cluster> working;
    working.reserve(SA);
    for (PairIndex p = 0; p < SA; ++p) working.push_back(singleton(p));

    auto snapshot = [&] {
        std::vector<std::vector<PairIndex>> groups;
        groups.reserve(working.size());
        for (const Cluster& c : working) groups.push_back(c.stats.members);
        return Partition(SA, std::move(groups));
    };
    auto find = [&](std::size_t id) {
        return std::find_if(working.begin(), working.end(), [id](const Cluster& c) { return c.id == id; });
    };

    ClusteringResult result;
    bool changed = true;
    while (changed) {
        changed = false;
        ++result.rounds;
        std::vector<std::pair<std::uint64_t, std::size_t>> order;
        order.reserve(working.size());
        for (const Cluster& c : working) order.emplace_back(c.count(), c.id);
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });

        for (const auto& [count_at_start, id] : order) {
            if (count_at_start == 0) break;  // zero-count clusters sort last
            auto it = find(id);
            if (it == working.end()) continue;  // absorbed earlier in this pass
            const auto near = nearest_neighbor(*it, working);
            if (!near) continue;
            auto jt = find(*near);
            const double per_member_i = static_cast<double>(it->count()) / static_cast<double>(it->size());
            const double per_member_j = static_cast<double>(jt->count()) / static_cast<double>(jt->size());
            const double ratio = per_member_i / per_member_j;
            if (ratio < 1.0 / options_.alpha || ratio > options_.alpha) continue;

            std::vector<PairIndex> merged = it->stats.members;
            merged.insert(merged.end(), jt->stats.members.begin(), jt->stats.members.end());
            std::sort(merged.begin(), merged.end());
            *it = make_cluster(id, merged);
            working.erase(jt);
            ++result.merges;
            changed = true;
        }
        result.round_partitions.push_back(snapshot());
    }
    result.partition = result.round_partitions.back();
    return result;
}

Partition approx_equivalence(const EmpiricalStats& stats, const ClusteringOptions& options) {
    return ApproxEquivalence(stats, options).run().partition;
}

std::uint64_t separation_count(double gap, double delta, std::size_t num_states, std::size_t num_pairs) {
    if (!(gap > 0.0)) throw std::invalid_argument("separation_count: gap must be positive");
    const double d = delta / static_cast<double>(num_pairs);
    auto f = [&](std::uint64_t n) { return 4.0 * weissman_laplace(n, d, num_states); };
    std::uint64_t lo = 1, hi = 1;
    while (f(hi) >= gap) {
        lo = hi;
        hi *= 2;
    }
    if (f(lo) < gap) return lo;
    // invariant: f(lo) >= gap > f(hi)
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (f(mid) >= gap ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace eqrl
