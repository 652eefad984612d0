#include "eqrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eqrl/metrics.hpp"
#include "json.hpp"

namespace eqrl {

namespace fs = std::filesystem;

std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_real(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

bool parse_flag(const std::string& text, const std::string& what) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw ConfigError(what + ": '" + text + "' is not a boolean");
}

}  // namespace

std::uint64_t parse_count(const std::string& text, const std::string& what) {
    const double v = parse_real(text, what);
    if (v < 0.0 || v != std::floor(v) || v > 9.0e15) throw ConfigError(what + ": '" + text + "' is not a count");
    return static_cast<std::uint64_t>(v);
}


RewardKind parse_reward_kind(const std::string& name) {
    if (name == "bernoulli") return RewardKind::bernoulli;
    if (name == "deterministic") return RewardKind::deterministic;
    throw ConfigError("unknown reward kind '" + name + "' (bernoulli, deterministic)");
}

EstimatedRadius parse_radius_mode(const std::string& name) {
    if (name == "weighted") return EstimatedRadius::weighted;
    if (name == "pooled") return EstimatedRadius::pooled;
    throw ConfigError("unknown radius mode '" + name + "' (weighted, pooled)");
}

LoadedEnvironment make_environment(const std::string& spec, RewardKind reward_kind, const std::string& motion,
                                   const fs::path& base_dir) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    try {
        if (kind == "riverswim" || kind == "ergodic-riverswim") {
            auto params = RiverSwimParams::defaults(kind == "ergodic-riverswim");
            params.reward_kind = reward_kind;
            const std::uint64_t length = parse_count(arg.empty() ? "25" : arg, "riverswim length");
            return {build_riverswim(length, params), std::nullopt, true};
        }
        if (kind == "grid") {
            if (arg.empty()) throw ConfigError("grid spec needs a layout file: grid:<path>");
            fs::path path = arg;
            if (path.is_relative() && !base_dir.empty() && fs::exists(base_dir / path)) path = base_dir / path;
            if (!fs::exists(path)) throw ConfigError("layout file not found: " + arg);
            MotionParams params;
            if (motion == "four-room") params = MotionParams::four_room();
            else if (motion == "maze") params = MotionParams::maze();
            else throw ConfigError("unknown motion model '" + motion + "' (four-room, maze)");
            GridWorld world = build_gridworld(GridLayout::load(path.string()), params, reward_kind);
            world.env.name = "grid:" + path.stem().string();
            return {std::move(world.env), std::move(world.layout), world.goal_reachable};
        }
        if (kind == "separated") {
            Environment env = build_separated_pairs();
            return {Environment{env.name, env.mdp.with_reward_kind(reward_kind), env.truth}, std::nullopt, true};
        }
        if (kind == "single-state") {
            std::vector<double> rewards;
            for (const auto& item : split(arg, ',')) rewards.push_back(parse_real(item, "single-state reward"));
            if (rewards.empty()) throw ConfigError("single-state spec needs rewards: single-state:<r1>,<r2>,...");
            return {build_single_state(std::move(rewards), reward_kind), std::nullopt, true};
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("environment '" + spec + "': " + e.what());
    }
    throw ConfigError("unknown environment spec '" + spec + "'");
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const fs::path& base_dir) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string value = trim(node.data());
            const std::string where = section + "." + key;
            if (section == "env") {
                if (key == "spec") cfg.env_spec = value;
                else if (key == "reward") cfg.reward_kind = parse_reward_kind(value);
                else if (key == "motion") cfg.motion = value;
                else throw ConfigError("config: unknown key " + where);
            } else if (section == "agents") {
                if (key == "variants") {
                    cfg.variants.clear();
                    try {
                        for (const auto& name : split(value, ',')) cfg.variants.push_back(parse_variant(name));
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(std::string("config: ") + e.what());
                    }
                } else if (key == "delta") cfg.delta = parse_real(value, where);
                else if (key == "alpha") cfg.alpha = parse_real(value, where);
                else if (key == "radius") cfg.radius_mode = parse_radius_mode(value);
                else if (key == "reward_known") cfg.reward_known = parse_flag(value, where);
                else throw ConfigError("config: unknown key " + where);
            } else if (section == "run") {
                if (key == "horizon") cfg.horizon = parse_count(value, where);
                else if (key == "runs") cfg.runs = parse_count(value, where);
                else if (key == "seed") cfg.base_seed = parse_count(value, where);
                else if (key == "threads") cfg.threads = parse_count(value, where);
                else if (key == "grid_points") cfg.grid_points = parse_count(value, where);
                else throw ConfigError("config: unknown key " + where);
            } else if (section == "output") {
                if (key == "dir") cfg.out_dir = value;
                else if (key == "per_run_csv") cfg.write_runs = parse_flag(value, where);
                else throw ConfigError("config: unknown key " + where);
            } else {
                throw ConfigError("config: unknown section [" + section + "]");
            }
        }
    }
    if (!cfg.out_dir.empty() && cfg.out_dir.is_relative() && !base_dir.empty()) cfg.out_dir = base_dir / cfg.out_dir;
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse(in, path.parent_path());
}

void ExperimentConfig::validate() const {
    if (env_spec.empty()) throw ConfigError("config: env.spec is empty");
    if (variants.empty()) throw ConfigError("config: no agent variants");
    for (std::size_t i = 0; i < variants.size(); ++i)
        for (std::size_t j = i + 1; j < variants.size(); ++j)
            if (variants[i] == variants[j]) throw ConfigError("config: variant listed twice");
    if (runs < 1) throw ConfigError("config: runs must be >= 1");
    if (grid_points < 1) throw ConfigError("config: grid_points must be >= 1");
    try {
        agent(variants.front(), 0).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

AgentConfig ExperimentConfig::agent(Variant v, std::size_t run) const {
    AgentConfig a;
    a.variant = v;
    a.delta = delta;
    a.alpha = alpha;
    a.reward_known = reward_known;
    a.horizon = horizon;
    a.seed = seed_for(run);
    a.radius_mode = radius_mode;
    return a;
}

namespace {

struct JobResult {
    std::vector<double> regret;  ///< on the grid
    std::size_t episodes = 0;
    std::size_t tracked_groups = 0;
    std::vector<double> ratio;   ///< cucrl_unknown only
    std::vector<double> bias;
};

void write_run_csv(const fs::path& path, const RunRecord& rec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::string buf = "t,s,a,r,episode\n";
    for (std::size_t i = 0; i < rec.actions.size(); ++i) {
        buf += std::to_string(i + 1);
        buf += ',';
        buf += std::to_string(rec.states[i]);
        buf += ',';
        buf += std::to_string(rec.actions[i]);
        buf += ',';
        buf += format_number(rec.rewards[i]);
        buf += ',';
        buf += std::to_string(rec.episode_of_step[i] + 1);
        buf += '\n';
    }
    out << buf;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config, std::ostream* log) {
    config.validate();
    if (config.out_dir.empty()) throw ConfigError("no output directory");
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedEnvironment loaded = make_environment(config.env_spec, config.reward_kind, config.motion, config.base_dir);
    const Environment& env = loaded.env;

    ExperimentSummary summary;
    summary.env_name = env.name;
    summary.num_states = env.mdp.num_states();
    summary.num_actions = env.mdp.num_actions();
    summary.num_classes = env.truth.num_classes();
    summary.optimal_gain = optimal_gain(env.mdp).gain;
    summary.grid = make_grid(config.horizon, config.grid_points);

    const fs::path runs_dir = config.out_dir / "runs";
    const bool out_existed = fs::exists(config.out_dir);
    const bool runs_existed = fs::exists(runs_dir);
    std::mutex files_mutex;
    auto remember = [&](const fs::path& p) {
        std::lock_guard lock(files_mutex);
        summary.files.push_back(p);
    };
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& p : summary.files) fs::remove(p, ec);
        if (!runs_existed && fs::is_empty(runs_dir, ec)) fs::remove(runs_dir, ec);
        if (!out_existed && fs::is_empty(config.out_dir, ec)) fs::remove(config.out_dir, ec);
    };

    try {
        fs::create_directories(config.out_dir);
        if (config.write_runs) fs::create_directories(runs_dir);

        const std::size_t num_jobs = config.variants.size() * config.runs;
        std::vector<JobResult> results(num_jobs);
        std::vector<std::exception_ptr> errors(num_jobs);
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::mutex log_mutex;

        auto worker = [&] {
            for (std::size_t job; !failed && (job = next++) < num_jobs;) {
                try {
                    const Variant v = config.variants[job / config.runs];
                    const std::size_t run = job % config.runs;
                    const RunRecord rec = run_agent(env, config.agent(v, run));
                    JobResult& res = results[job];
                    if (config.write_runs) {
                        const fs::path path = runs_dir / (std::string(to_string(v)) + "_" + std::to_string(run) + ".csv");
                        remember(path);
                        write_run_csv(path, rec);
                    }
                    res.regret = regret(rec, summary.optimal_gain, summary.grid).values;
                    res.episodes = rec.num_episodes();
                    res.tracked_groups = rec.tracked_groups;
                    if (v == Variant::cucrl_unknown) {
                        for (const auto& q : clustering_series(rec, env.truth.partition, summary.grid)) {
                            res.ratio.push_back(q.ratio);
                            res.bias.push_back(q.bias);
                        }
                    }
                    if (log) {
                        std::lock_guard lock(log_mutex);
                        *log << "  " << to_string(v) << " run " << run << " (seed " << config.seed_for(run)
                             << "): final regret " << res.regret.back() << ", " << res.episodes << " episodes\n";
                    }
                } catch (...) {
                    errors[job] = std::current_exception();
                    failed = true;
                }
            }
        };

        std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
        threads = std::min(threads, num_jobs);
        std::vector<std::thread> pool;
        for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);

        // regret.csv
        std::string regret_csv = "t,variant,mean,ci_low,ci_high\n";
        for (std::size_t vi = 0; vi < config.variants.size(); ++vi) {
            const Variant v = config.variants[vi];
            std::vector<std::vector<double>> curves;
            VariantSummary vs;
            vs.variant = v;
            vs.episodes_min = results[vi * config.runs].episodes;
            double episode_sum = 0.0;
            for (std::size_t r = 0; r < config.runs; ++r) {
                const JobResult& res = results[vi * config.runs + r];
                curves.push_back(res.regret);
                episode_sum += static_cast<double>(res.episodes);
                vs.episodes_min = std::min(vs.episodes_min, res.episodes);
                vs.episodes_max = std::max(vs.episodes_max, res.episodes);
                vs.tracked_groups = res.tracked_groups;
                if (config.horizon >= res.tracked_groups &&
                    !within_episode_bound(res.episodes, config.horizon, res.tracked_groups))
                    vs.episode_bound_ok = false;
            }
            const Band band = aggregate_runs(std::span<const std::vector<double>>(curves));
            for (std::size_t i = 0; i < summary.grid.size(); ++i) {
                regret_csv += std::to_string(summary.grid[i]) + "," + std::string(to_string(v)) + "," +
                              format_number(band.mean[i]) + "," + format_number(band.low[i]) + "," +
                              format_number(band.high[i]) + "\n";
            }
            vs.final_regret_mean = band.mean.back();
            vs.final_regret_ci_low = band.low.back();
            vs.final_regret_ci_high = band.high.back();
            vs.episodes_mean = episode_sum / static_cast<double>(config.runs);
            summary.variants.push_back(vs);
        }
        remember(config.out_dir / "regret.csv");
        write_text(config.out_dir / "regret.csv", regret_csv);

        // clustering.csv
        const auto unknown = std::find(config.variants.begin(), config.variants.end(), Variant::cucrl_unknown);
        if (unknown != config.variants.end()) {
            const std::size_t vi = static_cast<std::size_t>(unknown - config.variants.begin());
            std::vector<std::vector<double>> ratios, biases;
            for (std::size_t r = 0; r < config.runs; ++r) {
                ratios.push_back(results[vi * config.runs + r].ratio);
                biases.push_back(results[vi * config.runs + r].bias);
            }
            const Band rb = aggregate_runs(std::span<const std::vector<double>>(ratios));
            const Band bb = aggregate_runs(std::span<const std::vector<double>>(biases));
            std::string csv = "t,ratio_mean,ratio_ci_low,ratio_ci_high,bias_mean,bias_ci_low,bias_ci_high\n";
            for (std::size_t i = 0; i < summary.grid.size(); ++i) {
                csv += std::to_string(summary.grid[i]);
                for (double x : {rb.mean[i], rb.low[i], rb.high[i], bb.mean[i], bb.low[i], bb.high[i]})
                    csv += "," + format_number(x);
                csv += "\n";
            }
            remember(config.out_dir / "clustering.csv");
            write_text(config.out_dir / "clustering.csv", csv);
        }

        summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        nlohmann::ordered_json js;
        js["env"] = {{"spec", config.env_spec},
                     {"name", summary.env_name},
                     {"states", summary.num_states},
                     {"actions", summary.num_actions},
                     {"classes", summary.num_classes},
                     {"optimal_gain", summary.optimal_gain}};
        js["horizon"] = config.horizon;
        js["runs"] = config.runs;
        js["base_seed"] = config.base_seed;
        js["delta"] = config.delta;
        js["alpha"] = config.alpha;
        js["radius"] = config.radius_mode == EstimatedRadius::pooled ? "pooled" : "weighted";
        js["reward_known"] = config.reward_known;
        auto& agents = js["agents"] = nlohmann::ordered_json::object();
        for (const auto& vs : summary.variants) {
            agents[std::string(to_string(vs.variant))] = {
                {"label", display_name(vs.variant)},
                {"final_regret", {{"mean", vs.final_regret_mean}, {"ci_low", vs.final_regret_ci_low}, {"ci_high", vs.final_regret_ci_high}}},
                {"episodes", {{"mean", vs.episodes_mean}, {"min", vs.episodes_min}, {"max", vs.episodes_max}}},
                {"tracked_groups", vs.tracked_groups},
                {"episode_bound", config.horizon >= vs.tracked_groups ? episode_bound(config.horizon, vs.tracked_groups) : 0.0},
                {"episode_bound_ok", vs.episode_bound_ok}};
        }
        auto& ratios = js["regret_ratios"] = nlohmann::ordered_json::object();
        const auto base = std::find_if(summary.variants.begin(), summary.variants.end(),
                                       [](const VariantSummary& vs) { return vs.variant == Variant::ucrl2l; });
        if (base != summary.variants.end())
            for (const auto& vs : summary.variants)
                if (vs.variant != Variant::ucrl2l && vs.final_regret_mean != 0.0)
                    ratios[std::string(to_string(Variant::ucrl2l)) + "/" + std::string(to_string(vs.variant))] =
                        base->final_regret_mean / vs.final_regret_mean;
        js["wall_seconds"] = summary.wall_seconds;
        remember(config.out_dir / "summary.json");
        write_text(config.out_dir / "summary.json", js.dump(2) + "\n");
    } catch (...) {
        cleanup();
        throw;
    }
    return summary;
}

std::string describe_environment(const LoadedEnvironment& loaded) {
    const Environment& env = loaded.env;
    const Mdp& mdp = env.mdp;
    const GainSolution g = optimal_gain(mdp);
    std::ostringstream out;
    out << env.name << "\n";
    out << "S=" << mdp.num_states() << " A=" << mdp.num_actions() << " SA=" << mdp.num_pairs()
        << " C=" << env.truth.num_classes() << " g*=" << format_number(g.gain) << "\n";
    if (!loaded.communicating) out << "warning: goal unreachable from start, MDP is not communicating\n";
    if (loaded.layout) {
        const GridLayout& layout = *loaded.layout;
        out << "\n" << layout.render();
        out << "free cells (states): " << layout.free_cells() << ", grid cells including walls: "
            << layout.rows * layout.cols << "\n";
        if (layout.rows == 7 && layout.cols == 7)
            out << "note: a 7x7 room grid is described both as 20 states and as 49 states; the model uses the "
                   "free cells above\n";
    }
    out << "\nclass  size  members (state,action)\n";
    for (std::size_t c = 0; c < env.truth.num_classes(); ++c) {
        const auto& members = env.truth.partition.cluster(c);
        out << c << "  " << members.size() << "  ";
        for (std::size_t i = 0; i < members.size(); ++i) {
            const PairIndex p = members[i];
            if (i) out << ' ';
            out << '(' << p / mdp.num_actions() << ',' << p % mdp.num_actions() << ')';
        }
        out << "\n";
    }
    out << "\noptimal policy:";
    for (std::size_t a : g.policy) out << ' ' << a;
    out << "\n";
    return out.str();
}

ClusterOnceReport cluster_once(const Environment& env, std::uint64_t budget, const ClusteringOptions& options,
                               std::uint64_t seed) {
    const Mdp& mdp = env.mdp;
    Rng rng(seed);
    EmpiricalStats stats(mdp.num_states(), mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            for (std::uint64_t i = 0; i < budget; ++i) {
                const Transition tr = step(mdp, s, a, rng);
                stats.record(s, a, tr.reward, tr.next_state);
            }
    const ClusteringResult res = ApproxEquivalence(stats, options).run();
    ClusterOnceReport report{res.partition, 0.0, 0.0, res.merges, res.rounds};
    report.ratio = misclustering_ratio(res.partition, env.truth.partition);
    report.bias = misclustering_bias(res.partition, env.truth.partition, stats);
    return report;
}

}  // namespace eqrl
