#include "eqrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace eqrl {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

void check_sums_to_one(double total, const char* what) {
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + " probabilities must sum to 1");
}

}  // namespace

Mdp::Mdp(std::size_t num_states, std::size_t num_actions, std::vector<double> transitions,
         std::vector<double> mean_rewards, RewardKind reward_kind, std::size_t initial_state)
    : num_states_(num_states),
      num_actions_(num_actions),
      transitions_(std::move(transitions)),
      mean_rewards_(std::move(mean_rewards)),
      reward_kind_(reward_kind),
      initial_state_(initial_state) {
    if (num_states == 0 || num_actions == 0) throw std::invalid_argument("Mdp: need at least one state and action");
    if (transitions_.size() != num_states * num_actions * num_states)
        throw std::invalid_argument("Mdp: transition table has wrong size");
    if (mean_rewards_.size() != num_states * num_actions) throw std::invalid_argument("Mdp: reward table has wrong size");
    if (initial_state >= num_states) throw std::invalid_argument("Mdp: initial state out of range");
    for (PairIndex p = 0; p < num_pairs(); ++p) {
        double total = 0.0;
        for (double v : transition(p)) {
            if (!(v >= 0.0)) throw std::invalid_argument("Mdp: negative transition probability");
            total += v;
        }
        if (std::abs(total - 1.0) > kRowTolerance)
            throw std::invalid_argument("Mdp: transition row " + std::to_string(p) + " does not sum to 1");
        if (!(mean_rewards_[p] >= 0.0 && mean_rewards_[p] <= 1.0))
            throw std::invalid_argument("Mdp: mean reward outside [0,1]");
    }
}

std::span<const double> Mdp::transition(std::size_t state, std::size_t action) const {
    if (state >= num_states_ || action >= num_actions_) throw std::out_of_range("Mdp::transition: index out of range");
    return transition(pair(state, action));
}

std::span<const double> Mdp::transition(PairIndex p) const {
    if (p >= num_pairs()) throw std::out_of_range("Mdp::transition: pair out of range");
    return std::span<const double>(transitions_).subspan(p * num_states_, num_states_);
}

Mdp Mdp::relabel_states(std::span<const std::size_t> perm) const {
    if (perm.size() != num_states_) throw std::invalid_argument("relabel_states: permutation size mismatch");
    const std::size_t S = num_states_, A = num_actions_;
    std::vector<double> trans(S * A * S, 0.0);
    std::vector<double> rewards(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = transition(s, a);
            const std::size_t ns = perm[s];
            for (std::size_t x = 0; x < S; ++x) trans[(ns * A + a) * S + perm[x]] = row[x];
            rewards[ns * A + a] = mean_reward(s, a);
        }
    }
    return Mdp(S, A, std::move(trans), std::move(rewards), reward_kind_, perm[initial_state_]);
}

Mdp Mdp::with_reward_kind(RewardKind kind) const {
    return Mdp(num_states_, num_actions_, transitions_, mean_rewards_, kind, initial_state_);
}

GroundTruth discover_classes(const Mdp& mdp, double tol) {
    if (tol < 0.0) throw std::invalid_argument("discover_classes: tolerance must be non-negative");
    const std::size_t SA = mdp.num_pairs();
    std::vector<std::vector<double>> sorted_rows(SA);
    GroundTruth truth;
    truth.profiles.resize(SA);
    for (PairIndex p = 0; p < SA; ++p) {
        truth.profiles[p] = profile_map(mdp.transition(p));
        sorted_rows[p] = sorted_descending(mdp.transition(p));
    }

    std::vector<PairIndex> representatives;
    std::vector<std::size_t> labels(SA);
    for (PairIndex p = 0; p < SA; ++p) {
        std::size_t label = representatives.size();
        for (std::size_t c = 0; c < representatives.size(); ++c) {
            const PairIndex r = representatives[c];
            if (l1_distance(sorted_rows[p], sorted_rows[r]) <= tol &&
                std::abs(mdp.mean_reward(p) - mdp.mean_reward(r)) <= tol) {
                label = c;
                break;
            }
        }
        if (label == representatives.size()) representatives.push_back(p);
        labels[p] = label;
    }
    truth.partition = Partition::from_labels(labels);
    return truth;
}

Transition step(const Mdp& mdp, std::size_t state, std::size_t action, Rng& rng) {
    const auto row = mdp.transition(state, action);
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t next = row.size();
    for (std::size_t x = 0; x < row.size(); ++x) {
        acc += row[x];
        if (u < acc) {
            next = x;
            break;
        }
    }
    if (next == row.size()) {
        // u landed in the rounding gap above the cumulative sum: take the last state with mass
        for (std::size_t x = row.size(); x-- > 0;)
            if (row[x] > 0.0) {
                next = x;
                break;
            }
    }
    const double mu = mdp.mean_reward(state, action);
    double reward = mu;
    if (mdp.reward_kind() == RewardKind::bernoulli) reward = uniform01(rng) < mu ? 1.0 : 0.0;
    return {next, reward};
}

GainSolution optimal_gain(const Mdp& mdp, double tol, std::size_t max_iterations) {
    if (!(tol > 0.0)) throw std::invalid_argument("optimal_gain: tolerance must be positive");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> u(S, 0.0), tu(S, 0.0);
    GainSolution sol;
    sol.policy.assign(S, 0);
    double span = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                const auto row = mdp.transition(s, a);
                double q = mdp.mean_reward(s, a);
                for (std::size_t x = 0; x < S; ++x) q += row[x] * u[x];
                if (q > best + 1e-15) {
                    best = q;
                    sol.policy[s] = a;
                }
            }
            tu[s] = best;
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t s = 0; s < S; ++s) {
            lo = std::min(lo, tu[s] - u[s]);
            hi = std::max(hi, tu[s] - u[s]);
        }
        span = hi - lo;
        if (span <= tol) {
            sol.gain = 0.5 * (lo + hi);
            sol.span = span;
            sol.iterations = it;
            return sol;
        }
        // damped step u <- (T u + u) / 2, anchored at state 0
        const double anchor = 0.5 * (tu[0] + u[0]);
        for (std::size_t s = 0; s < S; ++s) u[s] = 0.5 * (tu[s] + u[s]) - anchor;
    }
    throw ConvergenceError("optimal_gain: no convergence, last span " + std::to_string(span), span, max_iterations);
}

// ---------------------------------------------------------------------------

RiverSwimParams RiverSwimParams::defaults(bool ergodic) {
    RiverSwimParams p;
    if (ergodic) {
        p.left_back = 0.9;
        p.left_stay = 0.05;
        p.left_forward = 0.05;
    }
    return p;
}

Environment build_riverswim(std::size_t length, const RiverSwimParams& params) {
    if (length < 4) throw std::invalid_argument("build_riverswim: need L >= 4 to separate boundary and interior states");
    for (double v : {params.right_advance, params.right_stay, params.right_retreat, params.left_back, params.left_stay,
                     params.left_forward, params.left_end_reward, params.right_end_reward})
        check_probability(v, "riverswim parameter");
    check_sums_to_one(params.right_advance + params.right_stay + params.right_retreat, "RIGHT");
    check_sums_to_one(params.left_back + params.left_stay + params.left_forward, "LEFT");

    const std::size_t S = length, A = 2;
    std::vector<double> trans(S * A * S, 0.0);
    std::vector<double> rewards(S * A, 0.0);
    auto add = [&](std::size_t s, std::size_t a, long target, double mass) {
        const std::size_t x = (target < 0 || target >= static_cast<long>(S)) ? s : static_cast<std::size_t>(target);
        trans[(s * A + a) * S + x] += mass;
    };
    for (std::size_t s = 0; s < S; ++s) {
        const long i = static_cast<long>(s);
        add(s, 0, i - 1, params.left_back);
        add(s, 0, i, params.left_stay);
        add(s, 0, i + 1, params.left_forward);
        add(s, 1, i + 1, params.right_advance);
        add(s, 1, i, params.right_stay);
        add(s, 1, i - 1, params.right_retreat);
    }
    // renormalize away rounding from the accumulated boundary rows
    for (std::size_t p = 0; p < S * A; ++p) {
        double total = 0.0;
        for (std::size_t x = 0; x < S; ++x) total += trans[p * S + x];
        for (std::size_t x = 0; x < S; ++x) trans[p * S + x] /= total;
    }
    rewards[0 * A + 0] = params.left_end_reward;
    rewards[(S - 1) * A + 1] = params.right_end_reward;

    Mdp mdp(S, A, std::move(trans), std::move(rewards), params.reward_kind, 0);
    const bool ergodic = params.left_forward > 0.0 || params.left_stay > 0.0;
    GroundTruth truth = discover_classes(mdp);
    return {(ergodic ? "ergodic-riverswim-" : "riverswim-") + std::to_string(length), std::move(mdp), std::move(truth)};
}

Environment build_riverswim(std::size_t length, bool ergodic) {
    return build_riverswim(length, RiverSwimParams::defaults(ergodic));
}

// ---------------------------------------------------------------------------

GridLayout GridLayout::parse(const std::string& text) {
    GridLayout layout;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == ';') continue;
        if (layout.cols == 0) layout.cols = line.size();
        if (line.size() != layout.cols) throw std::invalid_argument("grid layout: ragged rows");
        for (char ch : line)
            if (ch != '#' && ch != '.' && ch != 'S' && ch != 'G')
                throw std::invalid_argument(std::string("grid layout: unknown cell '") + ch + "'");
        layout.cells.push_back(line);
    }
    layout.rows = layout.cells.size();
    std::size_t starts = 0, goals = 0;
    for (const auto& row : layout.cells) {
        starts += std::count(row.begin(), row.end(), 'S');
        goals += std::count(row.begin(), row.end(), 'G');
    }
    if (layout.rows == 0) throw std::invalid_argument("grid layout: empty");
    if (starts != 1 || goals != 1) throw std::invalid_argument("grid layout: need exactly one S and one G");
    return layout;
}

GridLayout GridLayout::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("grid layout: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::size_t GridLayout::free_cells() const {
    std::size_t n = 0;
    for (const auto& row : cells) n += row.size() - std::count(row.begin(), row.end(), '#');
    return n;
}

std::string GridLayout::render() const {
    std::string out;
    for (const auto& row : cells) out += row + "\n";
    return out;
}

MotionParams MotionParams::four_room() { return {0.7, 0.1, 0.2 / 3.0, 0.2 / 3.0}; }
MotionParams MotionParams::maze() { return {0.8, 0.1, 0.05, 0.0}; }

GridWorld build_gridworld(const GridLayout& layout, const MotionParams& motion, RewardKind reward_kind) {
    for (double v : {motion.intended, motion.stay, motion.lateral, motion.backward}) check_probability(v, "motion parameter");
    check_sums_to_one(motion.intended + motion.stay + 2.0 * motion.lateral + motion.backward, "motion");

    std::vector<std::pair<std::size_t, std::size_t>> cell_of_state;
    std::vector<std::vector<std::size_t>> state_at(layout.rows, std::vector<std::size_t>(layout.cols, 0));
    std::size_t start = 0, goal = 0;
    for (std::size_t r = 0; r < layout.rows; ++r) {
        for (std::size_t c = 0; c < layout.cols; ++c) {
            if (layout.is_wall(r, c)) continue;
            state_at[r][c] = cell_of_state.size();
            if (layout.cells[r][c] == 'S') start = cell_of_state.size();
            if (layout.cells[r][c] == 'G') goal = cell_of_state.size();
            cell_of_state.emplace_back(r, c);
        }
    }
    const std::size_t S = cell_of_state.size(), A = 4;
    if (S < 2) throw std::invalid_argument("gridworld: need at least two free cells");

    // up, down, left, right
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    constexpr std::size_t opposite[4] = {1, 0, 3, 2};

    std::vector<double> trans(S * A * S, 0.0);
    std::vector<double> rewards(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const auto [r, c] = cell_of_state[s];
        auto neighbour = [&](std::size_t dir) {
            const long nr = static_cast<long>(r) + dr[dir], nc = static_cast<long>(c) + dc[dir];
            if (nr < 0 || nc < 0 || nr >= static_cast<long>(layout.rows) || nc >= static_cast<long>(layout.cols) ||
                layout.is_wall(static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)))
                return s;  // walls reflect
            return state_at[static_cast<std::size_t>(nr)][static_cast<std::size_t>(nc)];
        };
        for (std::size_t a = 0; a < A; ++a) {
            double* row = &trans[(s * A + a) * S];
            if (s == goal) {
                row[start] = 1.0;
                rewards[s * A + a] = 1.0;
                continue;
            }
            row[s] += motion.stay;
            for (std::size_t dir = 0; dir < 4; ++dir) {
                double mass = motion.lateral;
                if (dir == a) mass = motion.intended;
                else if (dir == opposite[a]) mass = motion.backward;
                row[neighbour(dir)] += mass;
            }
            double total = 0.0;
            for (std::size_t x = 0; x < S; ++x) total += row[x];
            for (std::size_t x = 0; x < S; ++x) row[x] /= total;
        }
    }

    Mdp mdp(S, A, std::move(trans), std::move(rewards), reward_kind, start);

    // communicating check: goal reachable from start and start from goal (via the reset)
    std::vector<bool> seen(S, false);
    std::deque<std::size_t> frontier{start};
    seen[start] = true;
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = mdp.transition(s, a);
            for (std::size_t x = 0; x < S; ++x)
                if (row[x] > 0.0 && !seen[x]) {
                    seen[x] = true;
                    frontier.push_back(x);
                }
        }
    }
    GroundTruth truth = discover_classes(mdp);
    return GridWorld{Environment{"gridworld", std::move(mdp), std::move(truth)}, layout, std::move(cell_of_state),
                     static_cast<bool>(seen[goal])};
}

Environment build_separated_pairs() {
    constexpr std::size_t S = 4, A = 2;
    const double ranked[3][S] = {{1.0, 0.0, 0.0, 0.0}, {0.75, 0.25, 0.0, 0.0}, {0.5, 0.5, 0.0, 0.0}};
    std::vector<double> trans(S * A * S, 0.0);
    std::vector<double> rewards(S * A, 0.0);
    for (std::size_t p = 0; p < S * A; ++p) {
        const std::size_t cls = p % 3;
        for (std::size_t rank = 0; rank < S; ++rank) trans[p * S + (rank + p) % S] = ranked[cls][rank];
        rewards[p] = 0.1 + 0.2 * static_cast<double>(cls);
    }
    Mdp mdp(S, A, std::move(trans), std::move(rewards), RewardKind::bernoulli, 0);
    GroundTruth truth = discover_classes(mdp);
    return {"separated", std::move(mdp), std::move(truth)};
}

Environment build_single_state(std::vector<double> mean_rewards, RewardKind kind) {
    const std::size_t A = mean_rewards.size();
    Mdp mdp(1, A, std::vector<double>(A, 1.0), std::move(mean_rewards), kind, 0);
    GroundTruth truth = discover_classes(mdp);
    return {"single-state", std::move(mdp), std::move(truth)};
}

}  // namespace eqrl
