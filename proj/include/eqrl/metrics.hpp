#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eqrl/agents.hpp"
#include "eqrl/partition.hpp"
#include "eqrl/statistics.hpp"

namespace eqrl {

/// Evenly spaced times in [1, horizon]: floor(i * horizon / points) for
/// i = 1..points, duplicates and zeros dropped. The last entry is always
/// `horizon`.
std::vector<std::uint64_t> make_grid(std::uint64_t horizon, std::size_t points = 1000);

/// R(t) = t g* - sum_{tau <= t} r_tau sampled on a grid.
struct RegretCurve {
    double optimal_gain = 0.0;
    std::vector<std::uint64_t> times;
    std::vector<double> values;
};

/// Full curve R(0..T), T + 1 entries, R(0) = 0.
std::vector<double> cumulative_regret(std::span<const double> rewards, double optimal_gain);

/// Curve on `grid`. Throws std::invalid_argument when a grid time exceeds
/// the number of rewards.
RegretCurve regret(std::span<const double> rewards, double optimal_gain, std::span<const std::uint64_t> grid);
RegretCurve regret(const RunRecord& record, double optimal_gain, std::span<const std::uint64_t> grid);

/// Fraction of pairs lying outside the largest true block of their
/// estimated cluster. Largest-block ties go to the true block with the
/// smallest index. Throws std::invalid_argument when the universes differ.
double misclustering_ratio(const Partition& estimated, const Partition& truth);

/**
 * Sum over misplaced pairs e of the sorted L1 distance between the
 * aggregate of e's estimated cluster and the same aggregate without e, both
 * built from empirical profiles. A term is skipped when either aggregate has
 * no visits.
 */
double misclustering_bias(const Partition& estimated, const Partition& truth, const EmpiricalStats& stats);

struct ClusterQuality {
    std::uint64_t time = 0;
    double ratio = 0.0;
    double bias = 0.0;
};

/// Counts accumulated over the first `steps` steps of a run.
EmpiricalStats replay_stats(const RunRecord& record, std::uint64_t steps);

/**
 * Clustering quality along a run. At each grid time t the partition is the
 * one used by the episode containing step t, scored against `truth`, with
 * the bias evaluated on the counts available when that partition was built.
 */
std::vector<ClusterQuality> clustering_series(const RunRecord& record, const Partition& truth,
                                              std::span<const std::uint64_t> grid);

/// Pointwise mean with a normal-approximation 95% band.
struct Band {
    std::vector<double> mean;
    std::vector<double> low;
    std::vector<double> high;
};

/// mean +- 1.96 * sd / sqrt(n), sd with the n - 1 denominator. A single
/// series yields a zero-width band. Throws std::invalid_argument for no
/// series or series of different lengths.
Band aggregate_runs(std::span<const std::vector<double>> series);

/// Band over regret curves; also checks that every curve uses the same grid.
Band aggregate_runs(std::span<const RegretCurve> curves);

/// Trailing moving average with window `window` (shorter at the start).
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// C log2(8T/C) for C >= 1 and T >= C.
double episode_bound(std::uint64_t horizon, std::size_t groups);

/// m <= C log2(8T/C), decided without a tolerance via 2^m <= (8T/C)^C in
/// logarithmic form at extended precision.
bool within_episode_bound(std::size_t episodes, std::uint64_t horizon, std::size_t groups);

}  // namespace eqrl
