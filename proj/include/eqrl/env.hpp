#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eqrl/partition.hpp"
#include "eqrl/statistics.hpp"

namespace eqrl {

enum class RewardKind { bernoulli, deterministic };

/**
 * Finite MDP with tabular transitions and mean rewards in [0,1].
 *
 * Rows are stored pair-major: `transition(s,a)` is a span over the S next
 * states. Immutable after construction; the constructor rejects rows that do
 * not sum to one within 1e-12, negative entries and rewards outside [0,1].
 */
class Mdp {
public:
    Mdp(std::size_t num_states, std::size_t num_actions, std::vector<double> transitions,
        std::vector<double> mean_rewards, RewardKind reward_kind = RewardKind::bernoulli,
        std::size_t initial_state = 0);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t num_pairs() const { return num_states_ * num_actions_; }
    PairIndex pair(std::size_t state, std::size_t action) const { return state * num_actions_ + action; }

    std::span<const double> transition(std::size_t state, std::size_t action) const;
    std::span<const double> transition(PairIndex p) const;
    double mean_reward(std::size_t state, std::size_t action) const { return mean_rewards_.at(pair(state, action)); }
    double mean_reward(PairIndex p) const { return mean_rewards_.at(p); }
    std::span<const double> mean_rewards() const { return mean_rewards_; }

    RewardKind reward_kind() const { return reward_kind_; }
    std::size_t initial_state() const { return initial_state_; }

    /// Same model with states relabelled: new state `perm[s]` plays the role
    /// of old state `s`.
    Mdp relabel_states(std::span<const std::size_t> perm) const;

    Mdp with_reward_kind(RewardKind kind) const;

private:
    std::size_t num_states_;
    std::size_t num_actions_;
    std::vector<double> transitions_;
    std::vector<double> mean_rewards_;
    RewardKind reward_kind_;
    std::size_t initial_state_;
};

/// True equivalence structure: classes of (0,0)-similar pairs plus each
/// pair's profile mapping.
struct GroundTruth {
    Partition partition;
    std::vector<Profile> profiles;

    std::size_t num_classes() const { return partition.size(); }
};

/// Pairs whose sorted rows differ by at most `tol` in L1 and whose mean
/// rewards differ by at most `tol` share a class. Each pair is compared with
/// the first member of existing classes in index order, so the result is
/// deterministic even when `tol > 0` makes similarity non-transitive.
GroundTruth discover_classes(const Mdp& mdp, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Sampling

using Rng = std::mt19937_64;

/// Uniform double in [0,1) from the top 53 bits of one generator draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Transition {
    std::size_t next_state;
    double reward;
};

/// One environment step. Consumes one draw for the next state, plus one for
/// the reward when rewards are Bernoulli.
Transition step(const Mdp& mdp, std::size_t state, std::size_t action, Rng& rng);

// ---------------------------------------------------------------------------
// Planning on the known model

struct GainSolution {
    double gain = 0.0;
    std::vector<std::size_t> policy;
    double span = 0.0;  ///< final span of T u - u
    std::size_t iterations = 0;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_span, std::size_t iterations)
        : std::runtime_error(what), last_span_(last_span), iterations_(iterations) {}
    double last_span() const { return last_span_; }
    std::size_t iterations() const { return iterations_; }

private:
    double last_span_;
    std::size_t iterations_;
};

/**
 * Optimal average reward by relative value iteration on the aperiodic
 * transform P' = (P + I) / 2 (same gain and optimal policies, no periodic
 * oscillation). Stops once span(T u - u) <= tol; the midpoint of
 * [min, max](T u - u) brackets g* so the error is at most tol / 2.
 */
GainSolution optimal_gain(const Mdp& mdp, double tol = 1e-9, std::size_t max_iterations = 10'000'000);

// ---------------------------------------------------------------------------
// Benchmarks

struct Environment {
    std::string name;
    Mdp mdp;
    GroundTruth truth;
};

/// RiverSwim transition and reward parameters. Mass that would leave the
/// chain stays in the current state.
struct RiverSwimParams {
    double right_advance = 0.6;
    double right_stay = 0.35;
    double right_retreat = 0.05;
    double left_back = 1.0;
    double left_stay = 0.0;
    double left_forward = 0.0;
    double left_end_reward = 0.05;   ///< mean reward of LEFT in the leftmost state
    double right_end_reward = 1.0;   ///< mean reward of RIGHT in the rightmost state
    RewardKind reward_kind = RewardKind::bernoulli;

    static RiverSwimParams defaults(bool ergodic);
};

/// Actions: 0 = LEFT, 1 = RIGHT. States 0 .. L-1, starting at 0.
Environment build_riverswim(std::size_t length, const RiverSwimParams& params);
Environment build_riverswim(std::size_t length, bool ergodic);

/// ASCII wall map: '#' wall, '.' free, 'S' start, 'G' goal.
struct GridLayout {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> cells;

    static GridLayout parse(const std::string& text);
    static GridLayout load(const std::string& path);

    bool is_wall(std::size_t r, std::size_t c) const { return cells[r][c] == '#'; }
    std::size_t free_cells() const;
    std::string render() const;
};

/// Motion noise for grid actions: intended direction, staying put, each of the
/// two perpendicular directions, and the opposite direction.
struct MotionParams {
    double intended = 0.7;
    double stay = 0.1;
    double lateral = 0.2 / 3.0;
    double backward = 0.2 / 3.0;

    static MotionParams four_room();   ///< 0.7 / 0.1 / remaining 0.2 split over the other three moves
    static MotionParams maze();        ///< 0.8 / 0.1 / 0.05 each side
};

struct GridWorld {
    Environment env;
    GridLayout layout;
    std::vector<std::pair<std::size_t, std::size_t>> cell_of_state;
    bool goal_reachable = true;  ///< false means the MDP is not communicating
};

/// Actions: 0 = up, 1 = down, 2 = left, 3 = right. Free cells become states
/// in row-major order. Every action in the goal cell earns reward 1 and
/// moves to the start cell.
GridWorld build_gridworld(const GridLayout& layout, const MotionParams& motion,
                          RewardKind reward_kind = RewardKind::bernoulli);

/// Synthetic structure for clustering checks: 4 states, 2 actions, pair p
/// follows class p % 3 with rank profiles [1,0,0,0], [.75,.25,0,0],
/// [.5,.5,0,0] (pairwise sorted-L1 gap 0.5), each under a pair-specific
/// rotation of the state labels.
Environment build_separated_pairs();

/// One state with `num_actions` actions and the given mean rewards.
Environment build_single_state(std::vector<double> mean_rewards, RewardKind kind = RewardKind::deterministic);

}  // namespace eqrl
