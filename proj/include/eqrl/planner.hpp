#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqrl {

/**
 * Input of extended value iteration: for every pair a center row, an L1
 * radius around it, a center mean reward and a reward bonus. The optimistic
 * reward is min(1, reward + bonus).
 *
 * Rows are pair-major with S entries each, as in Mdp.
 */
struct OptimisticModel {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> centers;
    std::vector<double> radii;
    std::vector<double> rewards;
    std::vector<double> bonuses;
    double epsilon = 1e-6;
    std::size_t max_iterations = 1'000'000;

    OptimisticModel() = default;
    OptimisticModel(std::size_t num_states, std::size_t num_actions);

    std::span<double> center(std::size_t pair) { return std::span<double>(centers).subspan(pair * num_states, num_states); }
    std::span<const double> center(std::size_t pair) const {
        return std::span<const double>(centers).subspan(pair * num_states, num_states);
    }
    void validate() const;
};

/**
 * Maximizer of q . values over the simplex intersected with the L1 ball of
 * `radius` around `center`: move min(radius/2, 1 - center[best]) mass onto the
 * highest-value state, then take it back from the lowest-value states first.
 * Among equal values the lower state index counts as higher.
 */
std::vector<double> l1_inner_max(std::span<const double> center, double radius, std::span<const double> values);

struct EviResult {
    std::vector<std::size_t> policy;
    double gain = 0.0;          ///< midpoint of [min, max] of the last value increment
    std::vector<double> values; ///< last iterate, shifted so min is 0
    std::vector<double> last_increment;
    std::size_t iterations = 0;
};

class EviDivergence : public std::runtime_error {
public:
    EviDivergence(const std::string& what, double last_span, std::size_t iterations)
        : std::runtime_error(what), last_span_(last_span), iterations_(iterations) {}
    double last_span() const { return last_span_; }
    std::size_t iterations() const { return iterations_; }

private:
    double last_span_;
    std::size_t iterations_;
};

/**
 * Extended value iteration. Starting from u = 0, applies
 *
 *     u'(s) = max_a [ r'(s,a) + max_{q in ball(s,a)} q . u ]
 *
 * until span(u' - u) <= epsilon, shifting u' by its minimum after each sweep.
 * Returns the greedy policy of the last sweep (lowest action on ties).
 * Throws EviDivergence after `max_iterations` sweeps.
 */
EviResult extended_value_iteration(const OptimisticModel& model);

}  // namespace eqrl
