#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "eqrl/partition.hpp"
#include "eqrl/statistics.hpp"

namespace eqrl {

struct ClusteringOptions {
    double delta = 0.05;
    double alpha = 4.0;  ///< balance bound on per-member counts, >= 1
    EstimatedRadius radius = EstimatedRadius::weighted;
};

/// A cluster of the working partition, aggregated through empirical profiles.
struct Cluster {
    std::size_t id = 0;  ///< smallest-id tie-breaks refer to this
    ClusterStats stats;  ///< aggregate is empty when count == 0
    double radius = 0.0; ///< epsilon_u; 0 when count == 0

    std::uint64_t count() const { return stats.count; }
    std::size_t size() const { return stats.members.size(); }
};

/// Lower-confidence distance between two clusters.
struct DistanceReport {
    double raw = 0.0;    ///< sorted L1 between the aggregates
    double eps_u = 0.0;
    double eps_v = 0.0;
    double value = 0.0;  ///< raw - eps_u - eps_v
};

struct ClusteringResult {
    Partition partition;
    std::size_t merges = 0;
    std::size_t rounds = 0;                 ///< passes including the final one without merges
    std::vector<Partition> round_partitions; ///< partition after each pass
};

/**
 * ApproxEquivalence over a statistics snapshot.
 *
 * Each pair starts as its own cluster. A pass visits clusters by
 * non-increasing count (ties by id), stops at the first zero-count cluster,
 * and merges a cluster with its PAC nearest neighbour when the per-member
 * counts are within a factor alpha of each other. Merges are visible to the
 * rest of the pass. Passes repeat until one makes no merge.
 */
class ApproxEquivalence {
public:
    ApproxEquivalence(const EmpiricalStats& stats, ClusteringOptions options);

    /// Cluster over `members` with aggregate and radius filled in.
    Cluster make_cluster(std::size_t id, std::span<const PairIndex> members) const;
    const Cluster& singleton(PairIndex pair) const { return singletons_.at(pair); }

    /// Throws std::domain_error if either cluster has no visits.
    DistanceReport lower_conf_distance(const Cluster& u, const Cluster& v) const;

    /// Ids of the clusters in `clusters` (other than `c`) meeting all three
    /// neighbour tests: aggregate distance, every cross pair of members, and
    /// every member against the merged cluster. Zero-count clusters never
    /// qualify.
    std::vector<std::size_t> pac_neighbors(const Cluster& c, std::span<const Cluster> clusters) const;

    /// Neighbour with the smallest lower-confidence distance, smallest id on
    /// ties; empty when there is none.
    std::optional<std::size_t> nearest_neighbor(const Cluster& c, std::span<const Cluster> clusters) const;

    ClusteringResult run() const;

    double pair_radius(PairIndex p) const { return pair_radius_.at(p); }

private:
    double singleton_distance(PairIndex a, PairIndex b) const;

    const EmpiricalStats& stats_;
    ClusteringOptions options_;
    std::vector<Profile> profiles_;
    std::vector<double> pair_radius_;  ///< W_N(delta') per visited pair
    double split_delta_ = 0.0;
    std::vector<Cluster> singletons_;
    std::vector<double> singleton_distance_;  ///< SA x SA, only visited pairs filled
};

/// Convenience wrapper: ApproxEquivalence(stats, options).run().partition.
Partition approx_equivalence(const EmpiricalStats& stats, const ClusteringOptions& options);

/// Smallest count n with 4 W_n(delta / num_pairs) < gap, found by bisection.
/// Counts strictly above the real root of 4 W_n = gap satisfy the separation
/// condition; this returns the first integer that does.
std::uint64_t separation_count(double gap, double delta, std::size_t num_states, std::size_t num_pairs);

}  // namespace eqrl
