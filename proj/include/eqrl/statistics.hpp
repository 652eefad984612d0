#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eqrl/partition.hpp"

namespace eqrl {

/// Permutation of states: `profile[rank]` is the state holding the rank-th
/// largest probability.
using Profile = std::vector<std::size_t>;

/// Profile mapping of a distribution. Sorts into non-increasing order with
/// ties broken by ascending state index, so the result is unique.
Profile profile_map(std::span<const double> dist);

/// Values of `dist` in non-increasing order.
std::vector<double> sorted_descending(std::span<const double> dist);

/// `dist` re-indexed by a profile: `out[rank] = dist[profile[rank]]`.
std::vector<double> apply_profile(std::span<const double> dist, const Profile& profile);

/// Inverse of apply_profile: `out[profile[rank]] = ranked[rank]`.
std::vector<double> unapply_profile(std::span<const double> ranked, const Profile& profile);

/// Plain L1 distance. Throws std::invalid_argument on size mismatch.
double l1_distance(std::span<const double> p, std::span<const double> q);

/// L1 distance between the non-increasing rearrangements of `p` and `q`.
/// Never exceeds l1_distance(p, q).
double sorted_l1(std::span<const double> p, std::span<const double> q);

/**
 * Time-uniform L1 deviation radius for an empirical distribution over
 * `num_states` outcomes built from `n` samples (Weissman bound combined with
 * the Laplace method):
 *
 *     W_n(delta) = sqrt( 2 (1 + 1/n) log( sqrt(n+1) (2^S - 2) / delta ) / n )
 *
 * log(2^S - 2) is evaluated as S log 2 + log1p(-2^(1-S)) so large S never
 * overflows. Throws std::domain_error for n == 0, S < 2 or delta outside (0,1).
 */
double weissman_laplace(std::uint64_t n, double delta, std::size_t num_states);

/// Time-uniform Hoeffding radius for a mean in [0,1]:
/// H_n(delta) = sqrt( (1 + 1/n) log( sqrt(n+1) / delta ) / (2n) ).
double hoeffding_laplace(std::uint64_t n, double delta);

/**
 * Empirical counts gathered along a trajectory: visits N(s,a), next-state
 * counts, and reward sums. Estimates for unvisited pairs are never produced;
 * asking for one throws std::domain_error.
 */
class EmpiricalStats {
public:
    EmpiricalStats(std::size_t num_states, std::size_t num_actions);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_pairs() const { return num_states_ * num_actions_; }
    PairIndex pair(std::size_t state, std::size_t action) const { return state * num_actions_ + action; }

    void record(std::size_t state, std::size_t action, double reward, std::size_t next_state);

    std::uint64_t visits(PairIndex p) const { return visits_.at(p); }
    bool visited(PairIndex p) const { return visits_.at(p) > 0; }
    std::span<const std::uint64_t> next_counts(PairIndex p) const;
    double reward_sum(PairIndex p) const { return reward_sums_.at(p); }
    std::uint64_t total_visits() const { return total_; }

    /// n(c): summed visits over `members`.
    std::uint64_t visits(std::span<const PairIndex> members) const;

    std::vector<double> transition_estimate(PairIndex p) const;
    double mean_reward_estimate(PairIndex p) const;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> next_counts_;
    std::vector<double> reward_sums_;
    std::uint64_t total_ = 0;
};

/// Empirical profile per pair, profile_map of the estimated row. Unvisited
/// pairs get the identity permutation; callers must not rely on it.
std::vector<Profile> empirical_profiles(const EmpiricalStats& stats);

/// Statistics of a cluster of pairs aggregated through per-pair profiles.
struct ClusterStats {
    std::vector<PairIndex> members;
    std::uint64_t count = 0;         ///< n(c)
    std::vector<double> aggregate;   ///< rank-indexed p^sigma(.|c)
    double mean_reward = 0.0;        ///< count-weighted mean reward

    std::size_t size() const { return members.size(); }  ///< L(c)
};

/**
 * Count-weighted average of the profile-ordered member rows:
 *
 *     agg(x) = (1/n(c)) sum_{(s,a) in c} N(s,a) p_hat(profile_{s,a}(x) | s,a)
 *
 * `profiles` is indexed by pair and holds either the true profiles or
 * empirical ones. Unvisited members carry weight zero. Throws
 * std::domain_error if every member is unvisited.
 */
ClusterStats aggregate_cluster(std::span<const PairIndex> members, const EmpiricalStats& stats,
                               std::span<const Profile> profiles);

/// Knowledge regime that decides how confidence radii are built.
enum class Regime {
    per_pair,                ///< no structure: W_N(delta/SA)
    known_classes_profiles,  ///< classes and profiles known: W_n(c)(delta/C)
    known_classes_only,      ///< classes known: weighted member radii at delta/C
    estimated_classes,       ///< classes estimated: weighted at delta/SA, or pooled
};

/// Radius form for estimated clusters.
enum class EstimatedRadius {
    weighted,  ///< (1/n(c)) sum N W_N(delta/SA)
    pooled,    ///< W_n(c)(delta/(3SA))
};

struct RadiusSpec {
    Regime regime = Regime::per_pair;
    double delta = 0.05;
    std::size_t num_states = 0;
    std::size_t num_pairs = 0;
    std::size_t num_classes = 0;  ///< only read by the known-class regimes
    EstimatedRadius estimated = EstimatedRadius::weighted;

    /// Confidence level after the regime's union split.
    double split_delta() const;
};

struct Radii {
    double transition = 0.0;  ///< L1 radius for the transition row
    double reward = 0.0;      ///< absolute radius for the mean reward
};

/**
 * Confidence radii of a single pair or a cluster under `spec`.
 *
 * - per_pair: (W_N, H_N) at delta/SA; `members` must hold exactly one pair.
 * - known_classes_profiles, or estimated_classes with the pooled form:
 *   radii at the cluster count n(c).
 * - known_classes_only, estimated_classes weighted: count-weighted average of
 *   member radii; unvisited members contribute nothing.
 *
 * Throws std::domain_error when the contributing count is zero and
 * std::invalid_argument for malformed input.
 */
Radii radius_for(std::span<const PairIndex> members, const EmpiricalStats& stats, const RadiusSpec& spec);

}  // namespace eqrl
