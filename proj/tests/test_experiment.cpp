#include "doctest.h"
#include "eqrl/experiment.hpp"
#include "eqrl/metrics.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

using namespace eqrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("eqrl_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const fs::path& p) {
    const std::string s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentConfig parse(const std::string& text, const fs::path& base = {}) {
    std::istringstream in(text);
    return ExperimentConfig::parse(in, base);
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(EQRL_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse(R"(
[env]
spec = riverswim:12
reward = deterministic

[agents]
variants = ucrl2l, cucrl_known_c
delta = 0.1
alpha = 2
radius = pooled
reward_known = no

[run]
horizon = 1e4
runs = 3
seed = 17
threads = 2
grid_points = 50

[output]
dir = results
per_run_csv = false
)",
                           "/base");
    CHECK(cfg.env_spec == "riverswim:12");
    CHECK(cfg.reward_kind == RewardKind::deterministic);
    CHECK(cfg.variants == std::vector<Variant>{Variant::ucrl2l, Variant::cucrl_known_c});
    CHECK(cfg.delta == 0.1);
    CHECK(cfg.alpha == 2.0);
    CHECK(cfg.radius_mode == EstimatedRadius::pooled);
    CHECK_FALSE(cfg.reward_known);
    CHECK(cfg.horizon == 10000);
    CHECK(cfg.runs == 3);
    CHECK(cfg.seed_for(2) == 19);
    CHECK(cfg.threads == 2);
    CHECK(cfg.grid_points == 50);
    CHECK(cfg.out_dir == fs::path("/base/results"));
    CHECK_FALSE(cfg.write_runs);
    const AgentConfig a = cfg.agent(Variant::ucrl2l, 1);
    CHECK(a.seed == 18);
    CHECK(a.horizon == 10000);
    CHECK_FALSE(a.reward_known);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("[env]\nspecs = riverswim:5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[wat]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[agents]\nvariants = ucrl9\n"), ConfigError);
    CHECK_THROWS_AS(parse("[agents]\nvariants = ucrl2l, ucrl2l\n"), ConfigError);
    CHECK_THROWS_AS(parse("[agents]\ndelta = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("[agents]\nalpha = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nruns = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nhorizon = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nhorizon = lots\n"), ConfigError);
    CHECK_THROWS_AS(parse("[output]\nper_run_csv = maybe\n"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("environment specs") {
    CHECK(make_environment("ergodic-riverswim:25").env.truth.num_classes() == 6);
    CHECK(make_environment("riverswim:7").env.mdp.num_states() == 7);
    CHECK(make_environment("separated").env.mdp.num_pairs() == 8);
    const auto single = make_environment("single-state:0.2,0.9", RewardKind::deterministic);
    CHECK(single.env.mdp.num_actions() == 2);
    CHECK(single.env.mdp.reward_kind() == RewardKind::deterministic);
    const auto grid = make_environment("grid:layouts/four_room_7.txt", RewardKind::bernoulli, "four-room", EQRL_SOURCE_DIR);
    CHECK(grid.layout.has_value());
    CHECK(grid.env.mdp.num_states() == 20);
    CHECK_THROWS_AS(make_environment("riverswim:2"), ConfigError);
    CHECK_THROWS_AS(make_environment("torus:5"), ConfigError);
    CHECK_THROWS_AS(make_environment("grid:/no/such/file"), ConfigError);
    CHECK_THROWS_AS(make_environment("grid:" EQRL_SOURCE_DIR "/layouts/four_room_7.txt", RewardKind::bernoulli, "zigzag"),
                    ConfigError);
    CHECK_THROWS_AS(make_environment("single-state:"), ConfigError);
}

TEST_CASE("environment report") {
    const std::string rs = describe_environment(make_environment("ergodic-riverswim:25"));
    CHECK(rs.find("S=25 A=2 SA=50 C=6 g*=") != std::string::npos);
    const std::string room =
        describe_environment(make_environment("grid:" EQRL_SOURCE_DIR "/layouts/four_room_7.txt"));
    CHECK(room.find("#S.#..#") != std::string::npos);
    CHECK(room.find("free cells (states): 20") != std::string::npos);
    CHECK(room.find("49") != std::string::npos);
    const std::string single = describe_environment(make_environment("single-state:0.5,0.5,0.2"));
    CHECK(single.find("C=2") != std::string::npos);
}

TEST_CASE("tiny experiment writes the expected files") {
    const fs::path dir = scratch("tiny");
    {
        std::ofstream(dir / "corridor.txt") << "SG\n";
    }
    ExperimentConfig cfg = parse("[env]\nspec = grid:corridor.txt\n[agents]\nvariants = ucrl2l\n[run]\nhorizon = 10\nruns = 1\n"
                                 "[output]\ndir = out\n",
                                 dir);
    const ExperimentSummary s = run_experiment(cfg);
    CHECK(s.num_states == 2);
    CHECK(count_lines(dir / "out/runs/ucrl2l_0.csv") == 11);
    CHECK(slurp(dir / "out/runs/ucrl2l_0.csv").rfind("t,s,a,r,episode\n1,0,", 0) == 0);
    CHECK(count_lines(dir / "out/regret.csv") == 11);
    CHECK_FALSE(fs::exists(dir / "out/clustering.csv"));
    CHECK(fs::exists(dir / "out/summary.json"));
}

TEST_CASE("experiment outputs are consistent and reproducible") {
    const fs::path dir = scratch("repro");
    ExperimentConfig cfg = parse(R"(
[env]
spec = ergodic-riverswim:8
[agents]
variants = cucrl_known_cs, cucrl_unknown, ucrl2l
[run]
horizon = 3000
runs = 4
seed = 5
grid_points = 60
)");
    cfg.out_dir = dir / "a";
    cfg.threads = 1;
    const ExperimentSummary s = run_experiment(cfg);
    cfg.out_dir = dir / "b";
    cfg.threads = 3;
    run_experiment(cfg);

    for (const char* f : {"regret.csv", "clustering.csv", "runs/ucrl2l_3.csv", "runs/cucrl_unknown_0.csv"})
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));

    CHECK(count_lines(dir / "a/regret.csv") == 60 * 3 + 1);
    CHECK(count_lines(dir / "a/clustering.csv") == 60 + 1);
    CHECK(slurp(dir / "a/regret.csv").rfind("t,variant,mean,ci_low,ci_high\n", 0) == 0);
    CHECK(slurp(dir / "a/clustering.csv")
              .rfind("t,ratio_mean,ratio_ci_low,ratio_ci_high,bias_mean,bias_ci_low,bias_ci_high\n", 0) == 0);

    // the summary's final regrets are the last grid rows of regret.csv
    const auto js = nlohmann::json::parse(slurp(dir / "a/summary.json"));
    std::istringstream csv(slurp(dir / "a/regret.csv"));
    std::string line;
    std::map<std::string, double> last;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        std::stringstream ls(line);
        std::string t, variant, mean;
        std::getline(ls, t, ',');
        std::getline(ls, variant, ',');
        std::getline(ls, mean, ',');
        if (std::stoull(t) == 3000) last[variant] = std::stod(mean);
    }
    REQUIRE(last.size() == 3);
    for (const auto& [variant, mean] : last) CHECK(js["agents"][variant]["final_regret"]["mean"].get<double>() == mean);
    CHECK(s.variants.size() == 3);

    // recompute one run's regret from the raw trajectory file
    std::istringstream run(slurp(dir / "a/runs/ucrl2l_0.csv"));
    std::getline(run, line);
    double collected = 0.0;
    while (std::getline(run, line)) collected += std::stod(line.substr(line.rfind(',', line.rfind(',') - 1) + 1));
    AgentConfig ac = cfg.agent(Variant::ucrl2l, 0);
    const RunRecord rec = run_agent(make_environment("ergodic-riverswim:8").env, ac);
    CHECK(collected == rec.total_reward());
}

TEST_CASE("failed experiments leave nothing behind") {
    const fs::path dir = scratch("fail");
    ExperimentConfig cfg = parse("[env]\nspec = riverswim:6\n[agents]\nvariants = ucrl2l\n[run]\nhorizon = 50\nruns = 2\n");
    cfg.out_dir = dir / "out";
    cfg.env_spec = "riverswim:1";
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("cluster once") {
    const auto rs = make_environment("ergodic-riverswim:25").env;
    const ClusterOnceReport none = cluster_once(rs, 0, {}, 1);
    CHECK(none.estimated == Partition::singletons(50));
    CHECK(none.ratio == 0.0);
    const ClusterOnceReport coarse = cluster_once(rs, 10, {}, 1);
    CHECK(coarse.estimated.num_pairs() == 50);
    CHECK(coarse.estimated.size() < 50);
    const auto sep = make_environment("separated").env;
    const ClusterOnceReport exact = cluster_once(sep, 100000, {0.05, 1e9, EstimatedRadius::weighted}, 3);
    CHECK(exact.estimated == sep.truth.partition);
    CHECK(exact.ratio == 0.0);
    CHECK(exact.bias == 0.0);
}

TEST_CASE("command line exit codes") {
    const fs::path dir = scratch("cli");
    {
        std::ofstream(dir / "ok.ini") << "[env]\nspec = riverswim:5\n[agents]\nvariants = ucrl2l\n[run]\nhorizon = 20\nruns = 2\n";
        std::ofstream(dir / "bad.ini") << "[env]\nspec = riverswim:5\nfoo = 1\n";
        std::ofstream(dir / "blocker") << "x";
    }
    CHECK(run_cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out/regret.csv"));
    CHECK(run_cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "out2").string() +
                  " --runs 3 --horizon 30 --seed 4 --threads 1") == 0);
    CHECK(count_lines(dir / "out2/runs/ucrl2l_2.csv") == 31);
    CHECK(run_cli("run --config " + (dir / "bad.ini").string()) == 1);
    CHECK(run_cli("run --config " + (dir / "missing.ini").string()) == 1);
    CHECK(run_cli("run") == 1);
    CHECK(run_cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "blocker/sub").string()) == 2);
    CHECK(run_cli("env-info ergodic-riverswim:25") == 0);
    CHECK(run_cli("env-info nowhere:3") == 1);
    CHECK(run_cli("cluster-once riverswim:25 --budget 10") == 0);
    CHECK(std::system(("cd " + dir.string() + " && EQRL_OUT_DIR=envout " + EQRL_CLI_PATH + " run --config ok.ini >/dev/null 2>&1").c_str()) == 0);
    CHECK(fs::exists(dir / "envout/summary.json"));
}
