#include "eqrl/agents.hpp"

#include <cmath>
#include <numeric>

#include "eqrl/clustering.hpp"

namespace eqrl {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::ucrl2l: return "ucrl2l";
        case Variant::cucrl_known_cs: return "cucrl_known_cs";
        case Variant::cucrl_known_c: return "cucrl_known_c";
        case Variant::cucrl_unknown: return "cucrl_unknown";
    }
    return "?";
}

std::string_view display_name(Variant v) {
    switch (v) {
        case Variant::ucrl2l: return "UCRL2-L";
        case Variant::cucrl_known_cs: return "C-UCRL(C,sigma)";
        case Variant::cucrl_known_c: return "C-UCRL(C)";
        case Variant::cucrl_unknown: return "C-UCRL";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    for (Variant v : {Variant::ucrl2l, Variant::cucrl_known_cs, Variant::cucrl_known_c, Variant::cucrl_unknown})
        if (name == to_string(v)) return v;
    throw std::invalid_argument("unknown agent variant '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("agent: delta must lie in (0,1)");
    if (!(alpha >= 1.0)) throw std::invalid_argument("agent: alpha must be >= 1");
    if (horizon < 1) throw std::invalid_argument("agent: horizon must be >= 1");
}

double RunRecord::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

namespace {

RadiusSpec radius_spec(const Environment& env, const AgentConfig& config) {
    RadiusSpec spec;
    spec.delta = config.delta;
    spec.num_states = env.mdp.num_states();
    spec.num_pairs = env.mdp.num_pairs();
    spec.num_classes = env.truth.num_classes();
    spec.estimated = config.radius_mode;
    switch (config.variant) {
        case Variant::ucrl2l: spec.regime = Regime::per_pair; break;
        case Variant::cucrl_known_cs: spec.regime = Regime::known_classes_profiles; break;
        case Variant::cucrl_known_c: spec.regime = Regime::known_classes_only; break;
        case Variant::cucrl_unknown: spec.regime = Regime::estimated_classes; break;
    }
    return spec;
}

/// Radii a target gets before any visit: the n = 1 values at the regime's split.
Radii unvisited_radii(const RadiusSpec& spec) {
    Radii r;
    r.transition = spec.num_states >= 2 ? weissman_laplace(unvisited_convention(0), spec.split_delta(), spec.num_states) : 0.0;
    r.reward = hoeffding_laplace(unvisited_convention(0), spec.split_delta());
    return r;
}

}  // namespace

OptimisticModel build_optimistic_model(const Environment& env, const AgentConfig& config, const EmpiricalStats& stats,
                                       const Partition& groups, std::uint64_t t) {
    const Mdp& mdp = env.mdp;
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    OptimisticModel model(S, A);
    model.epsilon = 1.0 / std::sqrt(static_cast<double>(t));
    model.max_iterations = config.evi_max_iterations;

    const RadiusSpec spec = radius_spec(env, config);
    const Radii fresh = unvisited_radii(spec);
    const std::vector<double> uniform(S, 1.0 / static_cast<double>(S));

    auto set_pair = [&](PairIndex p, std::span<const double> center, double radius, double reward, double bonus) {
        std::copy(center.begin(), center.end(), model.center(p).begin());
        model.radii[p] = S >= 2 ? radius : 0.0;
        if (config.reward_known) {
            model.rewards[p] = mdp.mean_reward(p);
            model.bonuses[p] = 0.0;
        } else {
            model.rewards[p] = reward;
            model.bonuses[p] = bonus;
        }
    };
    // per-pair reward estimate with its own Hoeffding radius at the regime's split
    auto pair_reward = [&](PairIndex p, double& reward, double& bonus) {
        const std::uint64_t n = stats.visits(p);
        reward = n > 0 ? stats.mean_reward_estimate(p) : 0.0;
        bonus = hoeffding_laplace(unvisited_convention(n), spec.split_delta());
    };

    if (config.variant == Variant::ucrl2l) {
        for (PairIndex p = 0; p < mdp.num_pairs(); ++p) {
            double reward, bonus;
            pair_reward(p, reward, bonus);
            if (!stats.visited(p)) {
                set_pair(p, uniform, fresh.transition, reward, bonus);
                continue;
            }
            const PairIndex one[] = {p};
            const Radii r = radius_for(one, stats, spec);
            set_pair(p, stats.transition_estimate(p), r.transition, reward, bonus);
        }
        return model;
    }

    if (groups.num_pairs() != mdp.num_pairs()) throw std::invalid_argument("build_optimistic_model: partition size mismatch");
    const bool true_profiles = config.variant == Variant::cucrl_known_cs;
    const std::vector<Profile> profiles = true_profiles ? env.truth.profiles : empirical_profiles(stats);

    for (const auto& members : groups.clusters()) {
        const std::uint64_t n = stats.visits(members);
        if (n == 0) {
            for (PairIndex p : members) {
                double reward, bonus;
                pair_reward(p, reward, bonus);
                set_pair(p, uniform, fresh.transition, reward, bonus);
            }
            continue;
        }
        const ClusterStats agg = aggregate_cluster(members, stats, profiles);
        const Radii r = radius_for(members, stats, spec);
        for (PairIndex p : members) {
            double reward = agg.mean_reward, bonus = r.reward;
            // estimated clusters are not tested for equal rewards
            if (config.variant == Variant::cucrl_unknown) pair_reward(p, reward, bonus);
            if (!true_profiles && !stats.visited(p)) {
                // no empirical profile to map the aggregate through
                set_pair(p, uniform, fresh.transition, reward, bonus);
                continue;
            }
            set_pair(p, unapply_profile(agg.aggregate, profiles[p]), r.transition, reward, bonus);
        }
    }
    return model;
}

RunRecord run_agent(const Environment& env, const AgentConfig& config) {
    config.validate();
    const Mdp& mdp = env.mdp;
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), SA = mdp.num_pairs();
    const std::uint64_t T = config.horizon;
    if (config.variant != Variant::ucrl2l && env.truth.partition.num_pairs() != SA)
        throw std::invalid_argument("run_agent: ground truth does not match the MDP");

    RunRecord rec;
    rec.variant = config.variant;
    rec.seed = config.seed;
    rec.horizon = T;
    rec.num_states = S;
    rec.num_actions = A;
    rec.states.reserve(T + 1);
    rec.actions.reserve(T);
    rec.rewards.reserve(T);
    rec.episode_of_step.reserve(T);
    rec.tracked_groups = uses_class_doubling(config.variant) ? env.truth.num_classes() : SA;

    Rng rng(config.seed);
    EmpiricalStats stats(S, A);
    ClusteringOptions clustering{config.delta, config.alpha, config.radius_mode};
    const Partition pair_groups = Partition::singletons(SA);

    std::size_t state = mdp.initial_state();
    rec.states.push_back(static_cast<std::uint32_t>(state));
    std::uint64_t t = 1;
    while (t <= T) {
        EpisodeRecord ep;
        ep.start = t;
        ep.pair_counts.resize(SA);
        for (PairIndex p = 0; p < SA; ++p) ep.pair_counts[p] = stats.visits(p);
        ep.pair_visits.assign(SA, 0);
        switch (config.variant) {
            case Variant::ucrl2l: ep.groups = pair_groups; break;
            case Variant::cucrl_known_cs:
            case Variant::cucrl_known_c: ep.groups = env.truth.partition; break;
            case Variant::cucrl_unknown: ep.groups = approx_equivalence(stats, clustering); break;
        }

        const OptimisticModel model = build_optimistic_model(env, config, stats, ep.groups, t);
        try {
            EviResult plan = extended_value_iteration(model);
            ep.policy = std::move(plan.policy);
            ep.optimistic_gain = plan.gain;
            ep.evi_iterations = plan.iterations;
        } catch (const EviDivergence& e) {
            throw AgentError("episode " + std::to_string(rec.episodes.size() + 1) + " (t=" + std::to_string(t) +
                             "): " + e.what());
        }

        std::vector<std::uint64_t> group_counts(ep.groups.size(), 0), group_visits(ep.groups.size(), 0);
        const bool track_groups = config.variant != Variant::ucrl2l;
        const bool track_pairs = config.variant == Variant::ucrl2l || config.variant == Variant::cucrl_unknown;
        if (track_groups)
            for (std::size_t g = 0; g < ep.groups.size(); ++g) group_counts[g] = stats.visits(ep.groups.cluster(g));

        const auto episode_index = static_cast<std::uint32_t>(rec.episodes.size());
        while (t <= T) {
            const std::size_t action = ep.policy[state];
            const Transition tr = step(mdp, state, action, rng);
            stats.record(state, action, tr.reward, tr.next_state);
            rec.actions.push_back(static_cast<std::uint32_t>(action));
            rec.rewards.push_back(tr.reward);
            rec.states.push_back(static_cast<std::uint32_t>(tr.next_state));
            rec.episode_of_step.push_back(episode_index);
            ++t;

            const PairIndex p = mdp.pair(state, action);
            ++ep.pair_visits[p];
            state = tr.next_state;
            bool done = false;
            if (track_pairs && ep.pair_visits[p] >= unvisited_convention(ep.pair_counts[p])) done = true;
            if (track_groups) {
                const std::size_t g = ep.groups.cluster_of(p);
                if (++group_visits[g] >= unvisited_convention(group_counts[g])) done = true;
            }
            if (done) break;
        }
        rec.episodes.push_back(std::move(ep));
    }
    return rec;
}

}  // namespace eqrl
