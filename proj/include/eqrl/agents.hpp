#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eqrl/env.hpp"
#include "eqrl/partition.hpp"
#include "eqrl/planner.hpp"
#include "eqrl/statistics.hpp"

namespace eqrl {

enum class Variant {
    ucrl2l,          ///< per-pair confidence sets, per-pair doubling
    cucrl_known_cs,  ///< true classes and profiles, class doubling
    cucrl_known_c,   ///< true classes, empirical profiles, class doubling
    cucrl_unknown,   ///< classes re-estimated every episode, pair or cluster doubling
};

std::string_view to_string(Variant v);
std::string_view display_name(Variant v);
/// Accepts the identifiers produced by to_string. Throws std::invalid_argument.
Variant parse_variant(std::string_view name);

/// True for variants whose episodes end when a known class doubles.
inline bool uses_class_doubling(Variant v) { return v == Variant::cucrl_known_cs || v == Variant::cucrl_known_c; }

/// z+ = max(z, 1).
inline std::uint64_t unvisited_convention(std::uint64_t count) { return std::max<std::uint64_t>(count, 1); }

struct AgentConfig {
    Variant variant = Variant::ucrl2l;
    double delta = 0.05;
    double alpha = 4.0;
    bool reward_known = true;  ///< plan with the true mean rewards, no bonus
    std::uint64_t horizon = 1000;
    std::uint64_t seed = 0;
    EstimatedRadius radius_mode = EstimatedRadius::weighted;  ///< cucrl_unknown only
    std::size_t evi_max_iterations = 1'000'000;

    void validate() const;
};

/// What an episode started from and what it observed.
struct EpisodeRecord {
    std::uint64_t start = 0;                 ///< t_k, 1-based
    std::vector<std::uint64_t> pair_counts;  ///< N_{t_k}(s,a)
    std::vector<std::uint64_t> pair_visits;  ///< nu_k(s,a)
    Partition groups;                        ///< doubling groups used (pairs for ucrl2l)
    std::vector<std::size_t> policy;
    double optimistic_gain = 0.0;
    std::size_t evi_iterations = 0;
};

/**
 * Trajectory of one run. Step t (1-based) is stored at index t-1:
 * the agent was in states[t-1], played actions[t-1], received rewards[t-1]
 * and moved to states[t]. states therefore holds horizon + 1 entries.
 */
struct RunRecord {
    Variant variant = Variant::ucrl2l;
    std::uint64_t seed = 0;
    std::uint64_t horizon = 0;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<std::uint32_t> states;
    std::vector<std::uint32_t> actions;
    std::vector<double> rewards;
    std::vector<std::uint32_t> episode_of_step;  ///< 0-based episode index per step
    std::vector<EpisodeRecord> episodes;

    /// Number of groups whose doubling ends episodes: C for the known-class
    /// variants, SA otherwise.
    std::size_t tracked_groups = 0;

    std::size_t num_episodes() const { return episodes.size(); }
    double total_reward() const;
};

class AgentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Runs one agent for `config.horizon` steps on `env`.
 *
 * Each episode builds the variant's optimistic model from the current
 * counts, plans with extended value iteration at precision 1/sqrt(t_k), and
 * follows the greedy policy until the doubling rule fires. Cluster-based
 * models feed every pair the cluster aggregate mapped back through the
 * pair's profile, with the cluster radius. Fully determined by
 * (env, config). Planner failures are rethrown as AgentError naming the
 * episode.
 */
RunRecord run_agent(const Environment& env, const AgentConfig& config);

/// Builds the optimistic model a variant would plan with at time `t` given
/// `stats`. `groups` is the class partition (known variants), the estimated
/// partition (cucrl_unknown) or ignored (ucrl2l).
OptimisticModel build_optimistic_model(const Environment& env, const AgentConfig& config, const EmpiricalStats& stats,
                                       const Partition& groups, std::uint64_t t);

}  // namespace eqrl
