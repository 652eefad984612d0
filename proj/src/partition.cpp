#include "eqrl/partition.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace eqrl {

namespace {
constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
}

Partition::Partition(std::size_t num_pairs, std::vector<std::vector<PairIndex>> clusters)
    : num_pairs_(num_pairs), clusters_(std::move(clusters)), owner_(num_pairs, kUnassigned) {
    for (auto& c : clusters_) {
        if (c.empty()) throw std::invalid_argument("partition: empty cluster");
        std::sort(c.begin(), c.end());
    }
    std::sort(clusters_.begin(), clusters_.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (std::size_t id = 0; id < clusters_.size(); ++id) {
        for (PairIndex p : clusters_[id]) {
            if (p >= num_pairs_) throw std::invalid_argument("partition: pair index out of range");
            if (owner_[p] != kUnassigned) throw std::invalid_argument("partition: clusters overlap");
            owner_[p] = id;
        }
    }
    if (std::find(owner_.begin(), owner_.end(), kUnassigned) != owner_.end())
        throw std::invalid_argument("partition: clusters do not cover all pairs");
}

Partition Partition::singletons(std::size_t num_pairs) {
    std::vector<std::vector<PairIndex>> clusters(num_pairs);
    for (PairIndex p = 0; p < num_pairs; ++p) clusters[p] = {p};
    return Partition(num_pairs, std::move(clusters));
}

Partition Partition::from_labels(std::span<const std::size_t> labels) {
    std::map<std::size_t, std::vector<PairIndex>> groups;
    for (PairIndex p = 0; p < labels.size(); ++p) groups[labels[p]].push_back(p);
    std::vector<std::vector<PairIndex>> clusters;
    clusters.reserve(groups.size());
    for (auto& [label, members] : groups) clusters.push_back(std::move(members));
    return Partition(labels.size(), std::move(clusters));
}

std::vector<std::size_t> Partition::size_profile() const {
    std::vector<std::size_t> sizes;
    sizes.reserve(clusters_.size());
    for (const auto& c : clusters_) sizes.push_back(c.size());
    std::sort(sizes.begin(), sizes.end());
    return sizes;
}

bool Partition::refines(const Partition& coarser) const {
    if (coarser.num_pairs_ != num_pairs_) return false;
    for (const auto& c : clusters_) {
        const std::size_t target = coarser.cluster_of(c.front());
        for (PairIndex p : c)
            if (coarser.cluster_of(p) != target) return false;
    }
    return true;
}

std::string Partition::to_json() const { return nlohmann::json(clusters_).dump(); }

}  // namespace eqrl
