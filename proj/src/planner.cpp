#include "eqrl/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace eqrl {

namespace {

/// States ordered by value, best first, lower index first among ties.
std::vector<std::size_t> order_by_value(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

/// Writes the inner maximizer into `out` given a precomputed value order.
void inner_max_ordered(std::span<const double> center, double radius, std::span<const std::size_t> order,
                       std::span<double> out) {
    std::copy(center.begin(), center.end(), out.begin());
    const std::size_t best = order.front();
    const double added = std::min(radius / 2.0, 1.0 - center[best]);
    if (added <= 0.0) return;
    out[best] = center[best] + added;
    double excess = added;
    for (std::size_t i = order.size(); i-- > 1 && excess > 0.0;) {
        const std::size_t x = order[i];
        const double take = std::min(out[x], excess);
        out[x] -= take;
        excess -= take;
    }
}

}  // namespace

OptimisticModel::OptimisticModel(std::size_t num_states, std::size_t num_actions)
    : num_states(num_states),
      num_actions(num_actions),
      centers(num_states * num_actions * num_states, 0.0),
      radii(num_states * num_actions, 0.0),
      rewards(num_states * num_actions, 0.0),
      bonuses(num_states * num_actions, 0.0) {}

void OptimisticModel::validate() const {
    const std::size_t SA = num_states * num_actions;
    if (SA == 0) throw std::invalid_argument("OptimisticModel: empty model");
    if (centers.size() != SA * num_states || radii.size() != SA || rewards.size() != SA || bonuses.size() != SA)
        throw std::invalid_argument("OptimisticModel: table sizes do not match dimensions");
    if (!(epsilon > 0.0)) throw std::invalid_argument("OptimisticModel: epsilon must be positive");
    for (std::size_t p = 0; p < SA; ++p) {
        if (!(radii[p] >= 0.0) || !(bonuses[p] >= 0.0)) throw std::invalid_argument("OptimisticModel: negative radius");
        double total = 0.0;
        for (double v : center(p)) {
            if (!(v >= 0.0)) throw std::invalid_argument("OptimisticModel: negative center entry");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("OptimisticModel: center row does not sum to 1");
    }
}

std::vector<double> l1_inner_max(std::span<const double> center, double radius, std::span<const double> values) {
    if (center.size() != values.size() || center.empty()) throw std::invalid_argument("l1_inner_max: size mismatch");
    if (!(radius >= 0.0)) throw std::invalid_argument("l1_inner_max: negative radius");
    std::vector<double> out(center.size());
    const auto order = order_by_value(values);
    inner_max_ordered(center, radius, order, out);
    return out;
}

EviResult extended_value_iteration(const OptimisticModel& model) {
    model.validate();
    const std::size_t S = model.num_states, A = model.num_actions;

    std::vector<double> optimistic_reward(S * A);
    for (std::size_t p = 0; p < S * A; ++p) optimistic_reward[p] = std::min(1.0, model.rewards[p] + model.bonuses[p]);

    EviResult res;
    res.policy.assign(S, 0);
    std::vector<double> u(S, 0.0), next(S, 0.0), q(S, 0.0);
    double span = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= model.max_iterations; ++it) {
        const auto order = order_by_value(u);
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t p = s * A + a;
                inner_max_ordered(model.center(p), model.radii[p], order, q);
                double value = optimistic_reward[p];
                for (std::size_t x = 0; x < S; ++x) value += q[x] * u[x];
                if (value > best) {
                    best = value;
                    res.policy[s] = a;
                }
            }
            next[s] = best;
        }
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, floor = lo;
        for (std::size_t s = 0; s < S; ++s) {
            lo = std::min(lo, next[s] - u[s]);
            hi = std::max(hi, next[s] - u[s]);
            floor = std::min(floor, next[s]);
        }
        span = hi - lo;
        if (span <= model.epsilon) {
            res.gain = 0.5 * (lo + hi);
            res.last_increment.resize(S);
            for (std::size_t s = 0; s < S; ++s) res.last_increment[s] = next[s] - u[s];
            for (double& v : next) v -= floor;
            res.values = std::move(next);
            res.iterations = it;
            return res;
        }
        for (std::size_t s = 0; s < S; ++s) u[s] = next[s] - floor;
    }
    throw EviDivergence("extended value iteration did not converge, last span " + std::to_string(span), span,
                        model.max_iterations);
}

}  // namespace eqrl
