#include "eqrl/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace eqrl {

std::vector<std::uint64_t> make_grid(std::uint64_t horizon, std::size_t points) {
    if (horizon == 0 || points == 0) throw std::invalid_argument("make_grid: horizon and points must be positive");
    std::vector<std::uint64_t> grid;
    grid.reserve(std::min<std::uint64_t>(points, horizon));
    for (std::size_t i = 1; i <= points; ++i) {
        // 128-bit product keeps large horizons exact
        const auto t = static_cast<std::uint64_t>((static_cast<unsigned __int128>(i) * horizon) / points);
        if (t == 0 || (!grid.empty() && grid.back() == t)) continue;
        grid.push_back(t);
    }
    return grid;
}

std::vector<double> cumulative_regret(std::span<const double> rewards, double optimal_gain) {
    std::vector<double> out(rewards.size() + 1, 0.0);
    double collected = 0.0;
    for (std::size_t t = 1; t <= rewards.size(); ++t) {
        collected += rewards[t - 1];
        out[t] = static_cast<double>(t) * optimal_gain - collected;
    }
    return out;
}

RegretCurve regret(std::span<const double> rewards, double optimal_gain, std::span<const std::uint64_t> grid) {
    RegretCurve curve;
    curve.optimal_gain = optimal_gain;
    curve.times.assign(grid.begin(), grid.end());
    curve.values.reserve(grid.size());
    const auto full = cumulative_regret(rewards, optimal_gain);
    for (std::uint64_t t : grid) {
        if (t > rewards.size()) throw std::invalid_argument("regret: grid extends past the recorded horizon");
        curve.values.push_back(full[t]);
    }
    return curve;
}

RegretCurve regret(const RunRecord& record, double optimal_gain, std::span<const std::uint64_t> grid) {
    return regret(record.rewards, optimal_gain, grid);
}

namespace {

void check_universe(const Partition& a, const Partition& b) {
    if (a.num_pairs() != b.num_pairs()) throw std::invalid_argument("partitions cover different pair sets");
}

/// Index of the largest true block inside `members`, smallest index on ties.
std::size_t majority_block(const std::vector<PairIndex>& members, const Partition& truth, std::vector<std::size_t>& tally) {
    tally.assign(truth.size(), 0);
    for (PairIndex p : members) ++tally[truth.cluster_of(p)];
    std::size_t best = 0;
    for (std::size_t b = 1; b < tally.size(); ++b)
        if (tally[b] > tally[best]) best = b;
    return best;
}

}  // namespace

double misclustering_ratio(const Partition& estimated, const Partition& truth) {
    check_universe(estimated, truth);
    if (truth.num_pairs() == 0) return 0.0;
    std::vector<std::size_t> tally;
    std::size_t misplaced = 0;
    for (const auto& members : estimated.clusters()) {
        const std::size_t block = majority_block(members, truth, tally);
        misplaced += members.size() - tally[block];
    }
    return static_cast<double>(misplaced) / static_cast<double>(truth.num_pairs());
}

double misclustering_bias(const Partition& estimated, const Partition& truth, const EmpiricalStats& stats) {
    check_universe(estimated, truth);
    if (stats.num_pairs() != truth.num_pairs()) throw std::invalid_argument("misclustering_bias: statistics size mismatch");
    const auto profiles = empirical_profiles(stats);
    std::vector<std::size_t> tally;
    double total = 0.0;
    for (const auto& members : estimated.clusters()) {
        if (members.size() < 2) continue;
        const std::size_t block = majority_block(members, truth, tally);
        if (tally[block] == members.size()) continue;
        if (stats.visits(members) == 0) continue;
        const ClusterStats whole = aggregate_cluster(members, stats, profiles);
        for (PairIndex e : members) {
            if (truth.cluster_of(e) == block) continue;
            std::vector<PairIndex> rest;
            rest.reserve(members.size() - 1);
            for (PairIndex p : members)
                if (p != e) rest.push_back(p);
            if (stats.visits(rest) == 0) continue;
            const ClusterStats without = aggregate_cluster(rest, stats, profiles);
            total += sorted_l1(whole.aggregate, without.aggregate);
        }
    }
    return total;
}

EmpiricalStats replay_stats(const RunRecord& record, std::uint64_t steps) {
    if (steps > record.actions.size()) throw std::invalid_argument("replay_stats: more steps than recorded");
    EmpiricalStats stats(record.num_states, record.num_actions);
    for (std::uint64_t i = 0; i < steps; ++i)
        stats.record(record.states[i], record.actions[i], record.rewards[i], record.states[i + 1]);
    return stats;
}

std::vector<ClusterQuality> clustering_series(const RunRecord& record, const Partition& truth,
                                              std::span<const std::uint64_t> grid) {
    EmpiricalStats stats(record.num_states, record.num_actions);
    std::uint64_t replayed = 0;
    std::vector<ClusterQuality> out;
    out.reserve(grid.size());
    for (std::uint64_t t : grid) {
        if (t == 0 || t > record.actions.size()) throw std::invalid_argument("clustering_series: grid time out of range");
        const EpisodeRecord& ep = record.episodes.at(record.episode_of_step[t - 1]);
        // counts seen by the clustering step are those before t_k
        for (; replayed + 1 < ep.start; ++replayed)
            stats.record(record.states[replayed], record.actions[replayed], record.rewards[replayed],
                         record.states[replayed + 1]);
        ClusterQuality q;
        q.time = t;
        q.ratio = misclustering_ratio(ep.groups, truth);
        q.bias = q.ratio > 0.0 ? misclustering_bias(ep.groups, truth, stats) : 0.0;
        out.push_back(q);
    }
    return out;
}

Band aggregate_runs(std::span<const std::vector<double>> series) {
    if (series.empty()) throw std::invalid_argument("aggregate_runs: no series");
    const std::size_t len = series.front().size();
    for (const auto& s : series)
        if (s.size() != len) throw std::invalid_argument("aggregate_runs: series lengths differ");
    const double n = static_cast<double>(series.size());
    Band band;
    band.mean.resize(len);
    band.low.resize(len);
    band.high.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        for (const auto& s : series) sum += s[i];
        const double mean = sum / n;
        double half = 0.0;
        if (series.size() > 1) {
            double sq = 0.0;
            for (const auto& s : series) sq += (s[i] - mean) * (s[i] - mean);
            half = 1.96 * std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
        }
        band.mean[i] = mean;
        band.low[i] = mean - half;
        band.high[i] = mean + half;
    }
    return band;
}

Band aggregate_runs(std::span<const RegretCurve> curves) {
    if (curves.empty()) throw std::invalid_argument("aggregate_runs: no curves");
    std::vector<std::vector<double>> series;
    series.reserve(curves.size());
    for (const auto& c : curves) {
        if (c.times != curves.front().times) throw std::invalid_argument("aggregate_runs: grids differ");
        series.push_back(c.values);
    }
    return aggregate_runs(std::span<const std::vector<double>>(series));
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    if (window == 0) throw std::invalid_argument("moving_average: window must be positive");
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= window) sum -= values[i - window];
        out[i] = sum / static_cast<double>(std::min(i + 1, window));
    }
    return out;
}

double episode_bound(std::uint64_t horizon, std::size_t groups) {
    if (groups == 0 || horizon < groups) throw std::invalid_argument("episode_bound: needs 1 <= C <= T");
    const double c = static_cast<double>(groups);
    return c * std::log2(8.0 * static_cast<double>(horizon) / c);
}

bool within_episode_bound(std::size_t episodes, std::uint64_t horizon, std::size_t groups) {
    if (groups == 0 || horizon < groups) throw std::invalid_argument("within_episode_bound: needs 1 <= C <= T");
    const long double c = static_cast<long double>(groups);
    const long double bound = c * std::log2(8.0L * static_cast<long double>(horizon) / c);
    return static_cast<long double>(episodes) <= bound;
}

}  // namespace eqrl
