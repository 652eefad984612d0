// eqrl: experiment runner and environment inspection.
//
//   eqrl run --config presets/fig3a.ini [--out DIR] [--seed N] [--runs N] [--horizon T] [--threads N]
//   eqrl env-info ergodic-riverswim:25
//   eqrl cluster-once separated --budget 100000 --alpha 1e9
//
// Exit codes: 0 ok, 1 configuration error, 2 runtime error.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "eqrl/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_runtime = 2;

std::filesystem::path default_out_dir() {
    if (const char* dir = std::getenv("EQRL_OUT_DIR"); dir && *dir) return dir;
    return "out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equivalence-aware tabular RL experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::string seed, runs, horizon, threads;
    auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
    run->add_option("--config", config_path, "INI config file")->required();
    run->add_option("--out", out_dir, "Output directory (default: [output] dir, then $EQRL_OUT_DIR, then ./out)");
    auto* seed_opt = run->add_option("--seed", seed, "Base seed; run i uses seed + i");
    auto* runs_opt = run->add_option("--runs", runs, "Runs per variant");
    auto* horizon_opt = run->add_option("--horizon", horizon, "Steps per run");
    auto* threads_opt = run->add_option("--threads", threads, "Worker threads (0: all cores)");

    std::string env_spec, motion = "four-room", reward = "bernoulli";
    auto* info = app.add_subcommand("env-info", "Describe an environment");
    info->add_option("spec", env_spec, "riverswim:L, ergodic-riverswim:L, grid:<file>, separated, single-state:r1,...")
        ->required();
    info->add_option("--motion", motion, "Grid motion model: four-room or maze");
    info->add_option("--reward", reward, "bernoulli or deterministic");

    std::string budget = "1000", cluster_seed = "0";
    double delta = 0.05, alpha = 4.0;
    std::string radius = "weighted";
    auto* once = app.add_subcommand("cluster-once", "Sample every pair and cluster once");
    once->add_option("spec", env_spec, "Environment spec")->required();
    once->add_option("--budget", budget, "Samples per pair");
    once->add_option("--delta", delta, "Confidence level");
    once->add_option("--alpha", alpha, "Balance bound on per-member counts");
    once->add_option("--radius", radius, "weighted or pooled");
    once->add_option("--seed", cluster_seed, "Sampling seed");
    once->add_option("--motion", motion, "Grid motion model: four-room or maze");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) {
            eqrl::ExperimentConfig cfg = eqrl::ExperimentConfig::load(config_path);
            if (*seed_opt) cfg.base_seed = eqrl::parse_count(seed, "--seed");
            if (*runs_opt) cfg.runs = eqrl::parse_count(runs, "--runs");
            if (*horizon_opt) cfg.horizon = eqrl::parse_count(horizon, "--horizon");
            if (*threads_opt) cfg.threads = eqrl::parse_count(threads, "--threads");
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir();
            cfg.validate();
            std::cerr << "running " << cfg.variants.size() << " variant(s) x " << cfg.runs << " run(s), T=" << cfg.horizon
                      << " on " << cfg.env_spec << "\n";
            const auto summary = eqrl::run_experiment(cfg, &std::cerr);
            for (const auto& vs : summary.variants)
                std::cout << eqrl::display_name(vs.variant) << ": final regret " << vs.final_regret_mean << " ["
                          << vs.final_regret_ci_low << ", " << vs.final_regret_ci_high << "], episodes "
                          << vs.episodes_mean << "\n";
            std::cout << "wrote " << cfg.out_dir.string() << " in " << summary.wall_seconds << " s\n";
        } else if (*info) {
            const auto loaded = eqrl::make_environment(env_spec, eqrl::parse_reward_kind(reward), motion);
            std::cout << eqrl::describe_environment(loaded);
        } else if (*once) {
            const auto loaded = eqrl::make_environment(env_spec, eqrl::RewardKind::bernoulli, motion);
            eqrl::ClusteringOptions options{delta, alpha, eqrl::parse_radius_mode(radius)};
            if (!(delta > 0.0 && delta < 1.0) || !(alpha >= 1.0))
                throw eqrl::ConfigError("need delta in (0,1) and alpha >= 1");
            const auto report = eqrl::cluster_once(loaded.env, eqrl::parse_count(budget, "--budget"), options,
                                                   eqrl::parse_count(cluster_seed, "--seed"));
            std::cout << "partition " << report.estimated.to_json() << "\n";
            std::cout << "clusters " << report.estimated.size() << " (true " << loaded.env.truth.num_classes() << ")\n";
            std::cout << "merges " << report.merges << " rounds " << report.rounds << "\n";
            std::cout << "misclustering ratio " << eqrl::format_number(report.ratio) << "\n";
            std::cout << "misclustering bias " << eqrl::format_number(report.bias) << "\n";
        }
    } catch (const eqrl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_ok;
}
