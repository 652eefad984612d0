#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace eqrl {

/// Flat index of a state-action pair: `state * num_actions + action`.
using PairIndex = std::size_t;

/**
 * A partition of the pair universe {0, ..., num_pairs - 1} into disjoint,
 * non-empty clusters.
 *
 * Clusters are stored in canonical form: members ascending inside each
 * cluster, clusters ordered by their smallest member. Two partitions of the
 * same universe compare equal iff they group the pairs identically.
 */
class Partition {
public:
    Partition() = default;

    /// Throws std::invalid_argument unless `clusters` covers the universe
    /// exactly once.
    Partition(std::size_t num_pairs, std::vector<std::vector<PairIndex>> clusters);

    /// All-singletons partition.
    static Partition singletons(std::size_t num_pairs);

    /// Builds a partition from a label per pair (labels need not be dense).
    static Partition from_labels(std::span<const std::size_t> labels);

    std::size_t num_pairs() const { return num_pairs_; }
    std::size_t size() const { return clusters_.size(); }
    const std::vector<std::vector<PairIndex>>& clusters() const { return clusters_; }
    const std::vector<PairIndex>& cluster(std::size_t id) const { return clusters_.at(id); }

    /// Index (in `clusters()`) of the cluster containing `pair`.
    std::size_t cluster_of(PairIndex pair) const { return owner_.at(pair); }

    /// Sorted multiset of cluster sizes.
    std::vector<std::size_t> size_profile() const;

    /// True when every cluster of `*this` lies inside one cluster of `coarser`.
    bool refines(const Partition& coarser) const;

    /// Cluster-membership list, e.g. `[[0,1],[2]]`.
    std::string to_json() const;

    friend bool operator==(const Partition& a, const Partition& b) {
        return a.num_pairs_ == b.num_pairs_ && a.clusters_ == b.clusters_;
    }

private:
    std::size_t num_pairs_ = 0;
    std::vector<std::vector<PairIndex>> clusters_;
    std::vector<std::size_t> owner_;
};

}  // namespace eqrl
