#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eqrl/agents.hpp"
#include "eqrl/clustering.hpp"
#include "eqrl/env.hpp"

namespace eqrl {

/// Bad or unreadable configuration, or an environment spec that cannot be
/// built. Maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Environment plus the wall map when it came from a layout file.
struct LoadedEnvironment {
    Environment env;
    std::optional<GridLayout> layout;
    bool communicating = true;
};

/**
 * Builds an environment from a spec string:
 *
 *   riverswim:<L>            ergodic-riverswim:<L>
 *   grid:<layout file>       separated
 *   single-state:<r1>,<r2>,...
 *
 * `motion` selects the grid noise model ("four-room" or "maze"). Relative
 * layout paths are tried against `base_dir` first, then the working
 * directory. Throws ConfigError.
 */
LoadedEnvironment make_environment(const std::string& spec, RewardKind reward_kind = RewardKind::bernoulli,
                                   const std::string& motion = "four-room",
                                   const std::filesystem::path& base_dir = {});

RewardKind parse_reward_kind(const std::string& name);
/// Non-negative integer, scientific notation allowed ("1e5"). `what` names
/// the value in the ConfigError message.
std::uint64_t parse_count(const std::string& text, const std::string& what);
EstimatedRadius parse_radius_mode(const std::string& name);

/// Experiment description read from an INI file with sections [env],
/// [agents], [run] and [output]. See README for the keys.
struct ExperimentConfig {
    std::string env_spec = "ergodic-riverswim:25";
    RewardKind reward_kind = RewardKind::bernoulli;
    std::string motion = "four-room";
    std::vector<Variant> variants = {Variant::cucrl_known_cs, Variant::cucrl_unknown, Variant::ucrl2l};
    double delta = 0.05;
    double alpha = 4.0;
    EstimatedRadius radius_mode = EstimatedRadius::weighted;
    bool reward_known = true;
    std::uint64_t horizon = 100'000;
    std::size_t runs = 20;
    std::uint64_t base_seed = 0;
    std::size_t threads = 0;  ///< 0: hardware concurrency
    std::size_t grid_points = 1000;
    std::filesystem::path out_dir;  ///< empty: caller decides
    bool write_runs = true;         ///< per-run trajectory CSVs
    std::filesystem::path base_dir; ///< directory of the config file

    static ExperimentConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Throws ConfigError.
    void validate() const;

    AgentConfig agent(Variant v, std::size_t run) const;
    std::uint64_t seed_for(std::size_t run) const { return base_seed + run; }
};

struct VariantSummary {
    Variant variant;
    double final_regret_mean = 0.0;
    double final_regret_ci_low = 0.0;
    double final_regret_ci_high = 0.0;
    double episodes_mean = 0.0;
    std::size_t episodes_min = 0;
    std::size_t episodes_max = 0;
    std::size_t tracked_groups = 0;
    bool episode_bound_ok = true;  ///< every run within C log2(8T/C)
};

struct ExperimentSummary {
    std::string env_name;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_classes = 0;
    double optimal_gain = 0.0;
    std::vector<std::uint64_t> grid;
    std::vector<VariantSummary> variants;
    std::vector<std::filesystem::path> files;  ///< everything written, in write order
    double wall_seconds = 0.0;
};

/// Runs every (variant, run) job on a worker pool and writes
///   runs/<variant>_<run>.csv   t,s,a,r,episode
///   regret.csv                 t,variant,mean,ci_low,ci_high
///   clustering.csv             (when cucrl_unknown is among the variants)
///   summary.json
/// into `config.out_dir`. Output bytes do not depend on the thread count
/// (summary.json carries the wall time). On failure every file written so far
/// is removed and the exception is rethrown.
ExperimentSummary run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Text report: sizes, class table, optimal gain, layout.
std::string describe_environment(const LoadedEnvironment& loaded);

struct ClusterOnceReport {
    Partition estimated;
    double ratio = 0.0;
    double bias = 0.0;
    std::size_t merges = 0;
    std::size_t rounds = 0;
};

/// Draws `budget` transitions from every pair of the true model, then
/// clusters the resulting counts.
ClusterOnceReport cluster_once(const Environment& env, std::uint64_t budget, const ClusteringOptions& options,
                               std::uint64_t seed);

/// Shortest round-trip decimal form, used for every number in the CSVs.
std::string format_number(double v);

}  // namespace eqrl
